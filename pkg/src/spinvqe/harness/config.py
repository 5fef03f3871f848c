"""Experiment configuration: a versioned JSON schema and its validation.

A config plus its master seed fully determines every output byte (wall-clock
timings excepted, which therefore live outside the deterministic summaries).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..circuits import InitSpec, ortho_singlet, singlet_product, triplet_flip
from ..errors import ConfigurationError
from ..objectives import PenaltyKind, PenaltyTerm, TargetSpec
from ..operators import (Observable, heisenberg_chain, ising_transverse, s_tot_sq,
                         s_z, spin_flip_x)

SCHEMA_VERSION = 1

_FAMILIES = {"hardware_efficient", "sz_conserving", "stot_conserving", "ising_hva"}
_MODELS = {"heisenberg", "ising"}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    J: float = 1.0
    J_z: float = 1.0
    h_x: float = 1.0

    def build(self, n_qubits: int) -> Observable:
        if self.kind == "heisenberg":
            return heisenberg_chain(n_qubits, self.J)
        return ising_transverse(n_qubits, self.J_z, self.h_x)

    def symmetries(self, n_qubits: int) -> list[Observable]:
        if self.kind == "heisenberg":
            return [s_tot_sq(n_qubits), s_z(n_qubits)]
        return [spin_flip_x(n_qubits)]


@dataclass(frozen=True)
class TargetConfig:
    initial_state: str          # bitstring | neel | anti_neel | circuit | prep specs
    weight: float = 1.0
    penalties: tuple[dict, ...] = ()
    label: str | None = None    # expected eigenstate label, e.g. S1, T1(0), E2


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n_qubits: int
    family: str
    layers: tuple[int, ...]     # single entry for run, several for sweep
    targets: tuple[TargetConfig, ...]
    optimizer: dict = field(default_factory=dict)
    restarts: int = 10
    master_seed: int = 0
    fidelity_threshold: float = 0.95
    energy_error_threshold: float = 0.5   # units of J
    ed_oracle: bool = True
    ed_k: int = 12
    output_dir: str = "runs/out"
    entpower_samples: int = 500
    init_spec: str | None = None          # stot_conserving circuit prep override

    def circuit_layers(self) -> int:
        if len(self.layers) != 1:
            raise ConfigurationError("run wants exactly one layer count; use sweep")
        return self.layers[0]


def _neel(n: int, start: int = 0) -> str:
    return "".join(str((q + start) % 2) for q in range(n))


_TRIPLET_RE = re.compile(r"^triplet_flip:(\d+)(?::(-?1|0))?$")


def parse_initial_state(text: str, n_qubits: int):
    """Config string -> TargetSpec initial_state value."""
    if text == "circuit":
        return None
    if text == "neel":
        return _neel(n_qubits)
    if text == "anti_neel":
        return _neel(n_qubits, 1)
    if text == "singlet_product":
        return singlet_product()
    if text == "ortho_singlet":
        return ortho_singlet()
    m = _TRIPLET_RE.match(text)
    if m:
        return triplet_flip(int(m.group(1)), int(m.group(2) or 0))
    if set(text) <= {"0", "1"}:
        if len(text) != n_qubits:
            raise ConfigurationError(f"bitstring {text!r} length != {n_qubits}")
        return text
    raise ConfigurationError(f"unrecognized initial state {text!r}")


def build_penalty(d: dict, reference_states=()) -> PenaltyTerm:
    try:
        kind = PenaltyKind(d["kind"])
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"bad penalty spec {d!r}") from exc
    beta = d.get("beta")
    if kind is PenaltyKind.DEFLATION:
        return PenaltyTerm(kind, beta, tuple(reference_states))
    return PenaltyTerm(kind, beta)


def build_targets(cfg: ExperimentConfig, reference_states=()) -> list[TargetSpec]:
    specs = []
    for t in cfg.targets:
        penalties = tuple(build_penalty(p, reference_states) for p in t.penalties)
        specs.append(TargetSpec(parse_initial_state(t.initial_state, cfg.n_qubits),
                                t.weight, penalties))
    return specs


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigurationError(msg)


def config_from_dict(raw: dict) -> ExperimentConfig:
    _require(isinstance(raw, dict), "config must be a JSON object")
    version = raw.get("schema_version")
    _require(version == SCHEMA_VERSION,
             f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

    model_raw = raw.get("model", {})
    kind = model_raw.get("kind")
    _require(kind in _MODELS, f"model.kind must be one of {sorted(_MODELS)}")
    model = ModelSpec(kind, float(model_raw.get("J", 1.0)),
                      float(model_raw.get("J_z", 1.0)), float(model_raw.get("h_x", 1.0)))

    n = raw.get("n_qubits")
    _require(isinstance(n, int) and 2 <= n <= 16, "n_qubits must be an int in [2, 16]")

    ansatz = raw.get("ansatz", {})
    family = ansatz.get("family")
    _require(family in _FAMILIES, f"ansatz.family must be one of {sorted(_FAMILIES)}")
    layers_raw = ansatz.get("layers")
    layers = tuple(layers_raw) if isinstance(layers_raw, list) else (layers_raw,)
    _require(len(layers) >= 1 and all(isinstance(l, int) and l >= 1 for l in layers),
             "ansatz.layers must be a positive int or nonempty list of them")

    targets_raw = raw.get("targets")
    _require(isinstance(targets_raw, list) and targets_raw, "targets must be nonempty")
    targets = []
    for t in targets_raw:
        _require(isinstance(t, dict) and "initial_state" in t,
                 "each target needs an initial_state")
        targets.append(TargetConfig(
            initial_state=t["initial_state"],
            weight=float(t.get("weight", 1.0)),
            penalties=tuple(t.get("penalties", [])),
            label=t.get("label")))

    thresholds = raw.get("thresholds", {})
    restarts = raw.get("restarts", 10)
    _require(isinstance(restarts, int) and restarts >= 1, "restarts must be >= 1")

    cfg = ExperimentConfig(
        model=model, n_qubits=n, family=family, layers=layers,
        targets=tuple(targets),
        optimizer=dict(raw.get("optimizer", {})),
        restarts=restarts,
        master_seed=int(raw.get("master_seed", 0)),
        fidelity_threshold=float(thresholds.get("fidelity", 0.95)),
        energy_error_threshold=float(thresholds.get("energy_error", 0.5)),
        ed_oracle=bool(raw.get("ed_oracle", True)),
        ed_k=int(raw.get("ed_k", 12)),
        output_dir=str(raw.get("output_dir", "runs/out")),
        entpower_samples=int(raw.get("entangling_power", {}).get("n_samples", 500)),
        init_spec=raw.get("init_spec"))

    # structural cross-checks that do not need any computation
    if family == "stot_conserving":
        _require(n % 2 == 0, "stot_conserving needs even n_qubits")
    parse_initial_state_all(cfg)
    for t in cfg.targets:
        for p in t.penalties:
            _require(isinstance(p, dict) and "kind" in p, "penalty needs a kind")
            if p["kind"] != "deflation":
                build_penalty(p)   # validates kind and beta
    weights = [t.weight for t in cfg.targets]
    _require(all(a > b for a, b in zip(weights, weights[1:])),
             f"target weights must be strictly decreasing, got {weights}")
    return cfg


def parse_initial_state_all(cfg: ExperimentConfig) -> None:
    for t in cfg.targets:
        parse_initial_state(t.initial_state, cfg.n_qubits)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_hash(raw: dict) -> str:
    return hashlib.sha256(
        json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16]


IMPLEMENTATION_METADATA = {
    "he_rotation_axes": "ry_then_rz",
    "ising_rotation_axes": "rx_then_ry",
    "brickwork_order": "even_pairs_then_odd_pairs",
    "entropy_log_base": "natural",
    "weight_scheme": "arithmetic_descending",
    "iteration_unit": "accepted_lbfgs_steps",
    "initial_params": "uniform_0_2pi",
}
