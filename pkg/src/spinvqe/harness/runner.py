"""Experiment execution: restart loops, threshold crossings, persistence.

Every run derives its restart seeds from (master_seed, restart_index), so the
summary files are byte-identical across reruns and across worker-pool sizes.
Wall-clock timings are kept out of the deterministic summaries.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..circuits import (Circuit, build_hardware_efficient, build_ising_hva,
                        build_sz_conserving, build_stot_conserving,
                        count_resources, evaluate, ResourceCount)
from ..errors import ConfigurationError
from ..metrics import classical_resources, entangling_power
from ..objectives import make_objective
from ..operators import LabeledEigenstate, diagonalize_labeled
from ..optimizer import (OptimizationTrace, OptimizerConfig, StopReason, minimize,
                         sample_initial_params)
from .config import (ExperimentConfig, IMPLEMENTATION_METADATA, build_targets,
                     config_hash, parse_initial_state)

WORKERS_ENV = "SPINVQE_WORKERS"


def _n_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_circuit(cfg: ExperimentConfig, layers: int) -> Circuit:
    if cfg.family == "hardware_efficient":
        return build_hardware_efficient(cfg.n_qubits, layers)
    if cfg.family == "sz_conserving":
        return build_sz_conserving(cfg.n_qubits, layers)
    if cfg.family == "stot_conserving":
        spec = parse_initial_state(cfg.init_spec, cfg.n_qubits) if cfg.init_spec \
            else None
        return build_stot_conserving(cfg.n_qubits, layers, spec)
    if cfg.family == "ising_hva":
        return build_ising_hva(cfg.n_qubits, layers)
    raise ConfigurationError(f"unknown family {cfg.family}")


# ---------------------------------------------------------------------------
# oracle-label resolution
# ---------------------------------------------------------------------------

def resolve_target_labels(cfg: ExperimentConfig, spectrum: list[LabeledEigenstate]):
    """Match each target's symbolic label against the labeled spectrum.

    An exact label (S1, T1(0), E2) picks one eigenstate; a bare multiplet
    name (T1) picks every member, and fidelity is then measured against the
    projector onto their span.
    """
    resolved = []
    for t in cfg.targets:
        if t.label is None:
            resolved.append(None)
            continue
        exact = [s for s in spectrum if s.label == t.label]
        if not exact and "(" not in t.label:
            # bare index label: E2 matches E2(+)/E2(-); bare T1 matches T1(*)
            exact = [s for s in spectrum
                     if s.label.startswith(f"{t.label}(")]
        if not exact:
            raise ConfigurationError(
                f"label {t.label!r} not found in the first {len(spectrum)} "
                f"eigenstates ({[s.label for s in spectrum]})")
        resolved.append(exact)
    return resolved


# ---------------------------------------------------------------------------
# restart execution
# ---------------------------------------------------------------------------

@dataclass
class RestartResult:
    restart: int
    trace: OptimizationTrace
    final_energies: list[float]
    final_fidelities: list[float] | None
    n_i_energy: int | None       # first iterate within the energy-error threshold
    n_i_fidelity: int | None     # first iterate above the fidelity threshold
    wall_seconds: float = 0.0

    @property
    def failed(self) -> bool:
        return self.trace.stop_reason is StopReason.NON_FINITE

    @property
    def failure_reason(self) -> str:
        return self.trace.stop_reason.value if self.failed else ""


@dataclass
class RunRecord:
    config_digest: str
    layers: int
    resources: ResourceCount
    target_labels: list[str | None]
    target_energies: list[float] | None
    restarts: list[RestartResult]
    metadata: dict = field(default_factory=dict)

    def completed(self) -> list[RestartResult]:
        return [r for r in self.restarts if not r.failed]

    def c_r(self, r: RestartResult, which: str) -> int | None:
        n_i = r.n_i_energy if which == "energy" else r.n_i_fidelity
        if n_i is None:
            return None
        if n_i == 0:
            return 0
        return classical_resources(self.resources.n_params, n_i)


def _first_crossing(trace: OptimizationTrace, key: str, predicate) -> int | None:
    for rec in trace.records:
        values = rec.extras.get(key)
        if values is not None and predicate(values):
            return rec.n_I
    return None


def _run_one_restart(idx: int, cfg: ExperimentConfig, circuit, objective,
                     exact_energies, opt_cfg) -> RestartResult:
    t0 = time.perf_counter()
    seed = np.random.SeedSequence((cfg.master_seed, idx))
    theta0 = sample_initial_params(circuit.n_params, seed)
    trace = minimize(objective, theta0, opt_cfg)
    wall = time.perf_counter() - t0

    last = trace.records[-1].extras
    energies = list(last.get("per_target_energies", []))
    fidelities = last.get("per_target_fidelities")
    n_i_f = _first_crossing(
        trace, "per_target_fidelities",
        lambda f: min(f) >= cfg.fidelity_threshold)
    n_i_e = None
    if exact_energies is not None:
        n_i_e = _first_crossing(
            trace, "per_target_energies",
            lambda es: max(abs(e - x) for e, x in zip(es, exact_energies))
            <= cfg.energy_error_threshold)
    return RestartResult(idx, trace, energies,
                         list(fidelities) if fidelities is not None else None,
                         n_i_e, n_i_f, wall)


def run_experiment(cfg: ExperimentConfig, layers: int | None = None,
                   raw_config: dict | None = None,
                   output_dir: str | Path | None = None) -> RunRecord:
    """Execute all restarts for one layer count and persist the artifacts."""
    layers = layers if layers is not None else cfg.circuit_layers()
    circuit = build_circuit(cfg, layers)
    hamiltonian = cfg.model.build(cfg.n_qubits)
    targets = build_targets(cfg)
    resources = count_resources(circuit)

    target_labels = [t.label for t in cfg.targets]
    exact_energies = None
    fidelity_refs = None
    if cfg.ed_oracle and any(l is not None for l in target_labels):
        spectrum = diagonalize_labeled(hamiltonian, cfg.ed_k,
                                       cfg.model.symmetries(cfg.n_qubits))
        resolved = resolve_target_labels(cfg, spectrum)
        if all(r is not None for r in resolved):
            exact_energies = [r[0].energy for r in resolved]
            fidelity_refs = [[s.vector.amplitudes for s in r] for r in resolved]

    objective = make_objective(circuit, hamiltonian, targets, fidelity_refs)
    opt_cfg = OptimizerConfig(**cfg.optimizer) if cfg.optimizer else OptimizerConfig()

    indices = list(range(cfg.restarts))
    workers = _n_workers()
    if workers == 1:
        results = [_run_one_restart(i, cfg, circuit, objective, exact_energies,
                                    opt_cfg) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda i: _run_one_restart(i, cfg, circuit, objective,
                                           exact_energies, opt_cfg), indices))

    digest = config_hash(raw_config) if raw_config is not None else ""
    record = RunRecord(digest, layers, resources, target_labels, exact_energies,
                       results, dict(IMPLEMENTATION_METADATA))
    out = Path(output_dir) if output_dir is not None else Path(cfg.output_dir)
    persist_run(record, cfg, out, raw_config)
    return record


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _csv_line(cells) -> str:
    return ",".join(_fmt(c) for c in cells)


def summary_rows(record: RunRecord):
    k = len(record.target_labels)
    header = ["restart", "stop_reason", "n_iterations", "n_evals", "final_cost"]
    header += [f"energy_{i}" for i in range(k)]
    header += [f"fidelity_{i}" for i in range(k)]
    header += ["n_i_energy", "n_i_fidelity", "c_r_energy", "c_r_fidelity", "failed"]
    rows = [header]
    for r in record.restarts:
        row = [r.restart, r.trace.stop_reason.value, r.trace.n_iterations,
               r.trace.n_evals, r.trace.records[-1].cost]
        row += [r.final_energies[i] if i < len(r.final_energies) else None
                for i in range(k)]
        row += [(r.final_fidelities[i] if r.final_fidelities else None)
                for i in range(k)]
        row += [r.n_i_energy, r.n_i_fidelity,
                record.c_r(r, "energy"), record.c_r(r, "fidelity"), r.failed]
        rows.append(row)
    return rows


def _median(values) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.median(vals)) if vals else None


def aggregate_dict(record: RunRecord) -> dict:
    done = record.completed()
    agg = {
        "config_digest": record.config_digest,
        "layers": record.layers,
        "n_params": record.resources.n_params,
        "cnot_body": record.resources.cnot_body,
        "cnot_init": record.resources.cnot_init,
        "target_labels": record.target_labels,
        "target_energies": record.target_energies,
        "n_restarts": len(record.restarts),
        "n_failed": sum(1 for r in record.restarts if r.failed),
        "failure_reasons": [r.failure_reason for r in record.restarts if r.failed],
        "median_n_i_energy": _median([r.n_i_energy for r in done]),
        "median_n_i_fidelity": _median([r.n_i_fidelity for r in done]),
        "median_c_r_energy": _median([record.c_r(r, "energy") for r in done]),
        "median_c_r_fidelity": _median([record.c_r(r, "fidelity") for r in done]),
        "median_final_cost": _median([r.trace.records[-1].cost for r in done]),
        "metadata": record.metadata,
        "wall_seconds_total": sum(r.wall_seconds for r in record.restarts),
    }
    if done and done[0].final_fidelities is not None:
        finals = np.array([r.final_fidelities for r in done])
        agg["median_final_fidelity_per_target"] = [
            float(np.median(finals[:, i])) for i in range(finals.shape[1])]
        agg["mean_final_fidelity_per_target"] = [
            float(finals[:, i].mean()) for i in range(finals.shape[1])]
    if done:
        fe = np.array([r.final_energies for r in done])
        agg["mean_final_energy_per_target"] = [float(fe[:, i].mean())
                                               for i in range(fe.shape[1])]
    return agg


def persist_run(record: RunRecord, cfg: ExperimentConfig, out: Path,
                raw_config: dict | None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for r in record.restarts:
        (out / f"trace_r{r.restart}.jsonl").write_text(r.trace.to_json_lines() + "\n")
    rows = summary_rows(record)
    (out / "summary.csv").write_text("\n".join(_csv_line(r) for r in rows) + "\n")
    (out / "aggregate.json").write_text(json.dumps(aggregate_dict(record), indent=2)
                                        + "\n")
    if raw_config is not None:
        provenance = {"schema_hash": record.config_digest, "config": raw_config,
                      "metadata": record.metadata}
        (out / "config_resolved.json").write_text(json.dumps(provenance, indent=2)
                                                  + "\n")


# ---------------------------------------------------------------------------
# sweeps, spectra, entangling power, reports
# ---------------------------------------------------------------------------

def layer_sweep(cfg: ExperimentConfig, raw_config: dict | None = None):
    """run_experiment per layer count; emits the per-layer comparison table."""
    if not cfg.layers:
        raise ConfigurationError("sweep needs a nonempty layer list")
    base = Path(cfg.output_dir)
    rows = [["layers", "n_params", "cnot_body", "cnot_init",
             "median_n_i_energy", "median_n_i_fidelity",
             "median_c_r_energy", "median_c_r_fidelity",
             "mean_min_fidelity", "std_min_fidelity", "n_failed"]]
    records = []
    for layers in cfg.layers:
        rec = run_experiment(cfg, layers=layers, raw_config=raw_config,
                             output_dir=base / f"layers_{layers}")
        records.append(rec)
        done = rec.completed()
        min_fid = (None, None)
        if done and done[0].final_fidelities is not None:
            mins = np.array([min(r.final_fidelities) for r in done])
            spread = float(mins.std(ddof=1)) if len(mins) > 1 else 0.0
            min_fid = (float(mins.mean()), spread)
        rows.append([layers, rec.resources.n_params, rec.resources.cnot_body,
                     rec.resources.cnot_init,
                     _median([r.n_i_energy for r in done]),
                     _median([r.n_i_fidelity for r in done]),
                     _median([rec.c_r(r, "energy") for r in done]),
                     _median([rec.c_r(r, "fidelity") for r in done]),
                     min_fid[0], min_fid[1],
                     sum(1 for r in rec.restarts if r.failed)])
    base.mkdir(parents=True, exist_ok=True)
    (base / "sweep.csv").write_text("\n".join(_csv_line(r) for r in rows) + "\n")
    return records


def diagonalize_to_dict(model_kind: str, n_qubits: int, k: int, **model_kw) -> dict:
    from .config import ModelSpec
    if n_qubits > 16:
        raise ConfigurationError(
            f"exact diagonalization refused for n_qubits={n_qubits} > 16")
    model = ModelSpec(model_kind, **model_kw)
    ham = model.build(n_qubits)
    states = diagonalize_labeled(ham, k, model.symmetries(n_qubits))
    return {
        "model": model_kind, "n_qubits": n_qubits, "k": k,
        "model_params": model_kw,
        "states": [s.as_record() for s in states],
    }


def entpower_sweep(cfg: ExperimentConfig):
    """Entangling power per layer count for the configured family."""
    rows = [["layers", "n_params", "cnot_body", "sv_mean", "sv_std_err",
             "n_samples"]]
    for layers in cfg.layers:
        circuit = build_circuit(cfg, layers)
        res = count_resources(circuit)
        mean, err = entangling_power(circuit, cfg.entpower_samples, cfg.master_seed)
        rows.append([layers, res.n_params, res.cnot_body, mean, err,
                     cfg.entpower_samples])
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "entpower.csv").write_text("\n".join(_csv_line(r) for r in rows) + "\n")
    return rows


def report(run_dir: str | Path) -> dict:
    """Per-iteration mean/std series from the stored traces of one run.

    At iteration i the statistics cover the restarts still running at i
    ("alive"); corrupt trace files are reported and skipped.
    """
    run_dir = Path(run_dir)
    traces, problems = [], []
    for path in sorted(run_dir.glob("trace_r*.jsonl"),
                       key=lambda p: int(p.stem.split("_r")[1])):
        try:
            records = [json.loads(line) for line in
                       path.read_text().strip().splitlines() if line]
            if not records:
                raise ValueError("empty trace")
            traces.append(records)
        except (ValueError, json.JSONDecodeError) as exc:
            problems.append(f"{path.name}: {exc}")
    if not traces:
        series = []
    else:
        max_len = max(len(t) for t in traces)
        series = []
        for i in range(max_len):
            alive = [t[i] for t in traces if len(t) > i]
            entry = {"n_I": i, "n_alive": len(alive)}
            costs = np.array([a["cost"] for a in alive])
            entry["cost_mean"] = float(costs.mean())
            entry["cost_std"] = float(costs.std(ddof=1)) if len(alive) > 1 else 0.0
            for key, prefix in (("per_target_energies", "energy"),
                                ("per_target_fidelities", "fidelity")):
                if key in alive[0]:
                    arr = np.array([a[key] for a in alive])
                    for t_idx in range(arr.shape[1]):
                        entry[f"{prefix}_{t_idx}_mean"] = float(arr[:, t_idx].mean())
                        entry[f"{prefix}_{t_idx}_std"] = (
                            float(arr[:, t_idx].std(ddof=1)) if len(alive) > 1 else 0.0)
            series.append(entry)
    out = {"run_dir": str(run_dir), "n_traces": len(traces),
           "problems": problems, "series_length": len(series)}
    if series:
        header = list(series[0].keys())
        lines = [",".join(header)]
        for entry in series:
            lines.append(_csv_line([entry.get(h) for h in header]))
        (run_dir / "series.csv").write_text("\n".join(lines) + "\n")
    else:
        out["warning"] = "no readable traces in directory"
    (run_dir / "report.json").write_text(json.dumps(out, indent=2) + "\n")
    return out
