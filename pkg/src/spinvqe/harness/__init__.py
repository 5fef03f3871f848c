"""Experiment definition, execution, persistence, and report generation."""
