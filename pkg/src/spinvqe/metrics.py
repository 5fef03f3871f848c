"""Fidelities against labeled eigenstates, resource arithmetic, convergence
margin, and Monte-Carlo entangling power."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .circuits import Circuit, Family, evaluate
from .errors import ConfigurationError
from .objectives import circuit_input_state
from .operators import LabeledEigenstate, Observable, apply_observable, expectation
from .statevector import StateVector, init_basis, neel_bits, reduced_density_left


class FidelityMode(Enum):
    PURE_STATE = "pure_state"
    SUBSPACE_PROJECTOR = "subspace_projector"


def fidelity(state: StateVector, target, mode: FidelityMode = FidelityMode.PURE_STATE
             ) -> float:
    """Overlap with one eigenstate, or weight inside a degenerate multiplet.

    A sequence target always means the projector onto its span; a single
    LabeledEigenstate uses ``mode`` (for a unique eigenvector the two modes
    coincide).
    """
    if isinstance(target, LabeledEigenstate):
        members = [target]
    else:
        members = list(target)
        mode = FidelityMode.SUBSPACE_PROJECTOR
    total = 0.0
    for m in members:
        if m.vector.n_qubits != state.n_qubits:
            raise ConfigurationError("fidelity size mismatch")
        total += float(np.abs(np.vdot(m.vector.amplitudes, state.amplitudes)) ** 2)
        if mode is FidelityMode.PURE_STATE:
            break
    return total


@dataclass(frozen=True)
class FidelityEntry:
    label: str
    fidelity: float
    energy_error: float      # |<H> - E_target| in units of J


@dataclass(frozen=True)
class FidelityReport:
    entries: tuple[FidelityEntry, ...]
    mode: FidelityMode

    @property
    def min_fidelity(self) -> float:
        return min(e.fidelity for e in self.entries)

    @property
    def max_energy_error(self) -> float:
        return max(e.energy_error for e in self.entries)


def fidelity_report(states: list[StateVector], targets, hamiltonian: Observable,
                    mode: FidelityMode = FidelityMode.PURE_STATE) -> FidelityReport:
    """Per-target fidelity and energy error; targets may mix single
    eigenstates and degenerate multiplets (lists), paired with the states."""
    if len(states) != len(targets):
        raise ConfigurationError("one target per state")
    entries = []
    for psi, tgt in zip(states, targets):
        if isinstance(tgt, LabeledEigenstate):
            label, energy = tgt.label, tgt.energy
        else:
            members = list(tgt)
            label = "+".join(m.label for m in members)
            energy = members[0].energy
        entries.append(FidelityEntry(
            label=label,
            fidelity=fidelity(psi, tgt, mode),
            energy_error=abs(expectation(psi, hamiltonian) - energy)))
    return FidelityReport(tuple(entries), mode)


def classical_resources(n_params: int, n_iterations: int) -> int:
    """Parameter count times optimizer iterations."""
    if n_params <= 0 or n_iterations <= 0:
        raise ConfigurationError("resource factors must be positive")
    return int(n_params) * int(n_iterations)


def convergence_margin(state: StateVector, hamiltonian: Observable, gap: float
                       ) -> tuple[float, bool]:
    """Energy standard deviation and whether it is within the spectral gap.

    A standard deviation below the gap to the first excited level certifies
    the optimized state is not an excited-state mixture.
    """
    if gap <= 0:
        raise ConfigurationError("gap must be positive")
    h_psi = apply_observable(state, hamiltonian)
    e = float(np.real(np.vdot(state.amplitudes, h_psi.amplitudes)))
    e2 = float(np.real(np.vdot(h_psi.amplitudes, h_psi.amplitudes)))
    std = float(np.sqrt(max(0.0, e2 - e * e)))
    return std, std <= gap


# ---------------------------------------------------------------------------
# entangling power
# ---------------------------------------------------------------------------

_ENTROPY_FLOOR = 1e-14


def half_chain_entropy(state: StateVector) -> float:
    """Von Neumann entropy (natural log) of the left half of the register."""
    if state.n_qubits % 2:
        raise ConfigurationError("half-chain cut needs even n_qubits")
    rho = reduced_density_left(state)
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > _ENTROPY_FLOOR]
    return float(-np.sum(lam * np.log(lam)))


def default_input(circuit: Circuit) -> StateVector:
    """Input state each family is driven from in the experiment protocols."""
    if circuit.family in (Family.HARDWARE_EFFICIENT, Family.SZ_CONSERVING):
        return init_basis(circuit.n_qubits, neel_bits(circuit.n_qubits))
    return circuit_input_state(circuit)


def entangling_power(circuit: Circuit, n_samples: int, seed: int
                     ) -> tuple[float, float]:
    """Mean and standard error of the half-chain entropy over uniform theta.

    Sample i draws its parameters from an RNG seeded by (seed, i), so a
    parallel evaluation reproduces the serial result exactly.
    """
    if circuit.n_qubits % 2:
        raise ConfigurationError("entangling power uses the half-chain cut")
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    inp = default_input(circuit)
    values = np.empty(n_samples)
    for i in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        theta = rng.uniform(0.0, 2.0 * np.pi, circuit.n_params)
        values[i] = half_chain_entropy(evaluate(circuit, theta, inp))
    mean = float(values.mean())
    err = float(values.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, err
