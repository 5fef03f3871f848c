"""Circuit IR, the four ansatz families, resource counting, adjoint gradients.

Conventions follow the statevector module: qubit 0 is the leftmost ket label
(most significant index bit) and every parameterized gate is exp(+i angle G)
with G the Hermitian generator named by the gate kind.

A circuit splits into a fixed preparation subcircuit (``prep``, constants
only, runs when no explicit input state is supplied) and a trainable ``body``.
CNOT counts are reported separately for the two and never silently summed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ValidationError
from .statevector import (GateAction, GateKind, N_PARAMS, StateVector,
                          apply_gate_inplace, apply_pauli_inplace, zero_state)


class Family(Enum):
    HARDWARE_EFFICIENT = "hardware_efficient"
    SZ_CONSERVING = "sz_conserving"
    STOT_CONSERVING = "stot_conserving"
    ISING_HVA = "ising_hva"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Slot:
    """One gate angle: bound to a trainable index, or a fixed constant."""

    index: int | None = None
    value: float = 0.0

    @property
    def trainable(self) -> bool:
        return self.index is not None


def var(index: int) -> Slot:
    return Slot(index=index)


def const(value: float) -> Slot:
    return Slot(index=None, value=float(value))


@dataclass(frozen=True)
class BoundGate:
    """Gate with its angles expressed as slots instead of fixed params."""

    kind: GateKind
    targets: tuple[int, ...]
    slots: tuple[Slot, ...] = ()
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if len(self.slots) != N_PARAMS[self.kind]:
            raise ConfigurationError(
                f"{self.kind.name} takes {N_PARAMS[self.kind]} angles, got {len(self.slots)}")

    def angles(self, theta: np.ndarray) -> tuple[float, ...]:
        return tuple(s.value if s.index is None else float(theta[s.index])
                     for s in self.slots)

    def action(self, theta: np.ndarray) -> GateAction:
        return GateAction(self.kind, self.targets, self.angles(theta), self.matrix)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    prep: tuple[BoundGate, ...]
    body: tuple[BoundGate, ...]
    family: Family
    layers: int
    n_params: int

    def __post_init__(self):
        used = set()
        for g in self.prep:
            for s in g.slots:
                if s.trainable:
                    raise ConfigurationError("prep gates must use constant slots")
        for g in self.body:
            for t in g.targets:
                if not 0 <= t < self.n_qubits:
                    raise ConfigurationError(f"gate target {t} outside register")
            for s in g.slots:
                if s.trainable:
                    if not 0 <= s.index < self.n_params:
                        raise ConfigurationError(f"slot index {s.index} out of range")
                    used.add(s.index)
        if used != set(range(self.n_params)):
            missing = sorted(set(range(self.n_params)) - used)
            raise ConfigurationError(f"unreferenced parameter indices {missing[:5]}...")


# ---------------------------------------------------------------------------
# initial-state specifications (fixed-(s, s_z) preparations)
# ---------------------------------------------------------------------------

class InitKind(Enum):
    SINGLET_PRODUCT = "singlet_product"
    TRIPLET_FLIP = "triplet_flip"
    ORTHO_SINGLET = "ortho_singlet"


@dataclass(frozen=True)
class InitSpec:
    kind: InitKind
    pair_index: int = 0   # TRIPLET_FLIP: which singlet pair to convert
    s_z: int = 0          # TRIPLET_FLIP: target pair magnetization in {-1, 0, +1}
    variant: int = 1      # ORTHO_SINGLET: which s=0 basis state of qubits 0-3


def singlet_product() -> InitSpec:
    return InitSpec(InitKind.SINGLET_PRODUCT)


def triplet_flip(pair_index: int, s_z: int = 0) -> InitSpec:
    return InitSpec(InitKind.TRIPLET_FLIP, pair_index=pair_index, s_z=s_z)


def ortho_singlet(variant: int = 1) -> InitSpec:
    return InitSpec(InitKind.ORTHO_SINGLET, variant=variant)


def _singlet_pair_gates(a: int, b: int) -> list[BoundGate]:
    """|00⟩ -> (|01⟩-|10⟩)/sqrt2 on qubits (a, b); costs one CNOT."""
    return [BoundGate(GateKind.X, (a,)), BoundGate(GateKind.X, (b,)),
            BoundGate(GateKind.H, (a,)), BoundGate(GateKind.CNOT, (a, b))]


def _triplet_pair_gates(a: int, b: int, s_z: int) -> list[BoundGate]:
    if s_z == 0:      # |psi+⟩ = (|01⟩+|10⟩)/sqrt2
        return [BoundGate(GateKind.X, (b,)), BoundGate(GateKind.H, (a,)),
                BoundGate(GateKind.CNOT, (a, b))]
    if s_z == 1:      # |00⟩ is already the s_z=+1 triplet
        return []
    if s_z == -1:
        return [BoundGate(GateKind.X, (a,)), BoundGate(GateKind.X, (b,))]
    raise ConfigurationError(f"pair s_z must be -1, 0 or +1, got {s_z}")


# Equal-angle N-gate angles rotating singlet x singlet (qubits 0-3) onto the
# orthogonal s=0 combination: N_12(t) N_01(g) N_12(t) with the values below.
_ORTHO_T = float(np.arctan(np.sqrt(2.0)) / 2.0)
_ORTHO_G = float(np.arctan(1.0 / np.sqrt(2.0)) / 2.0)


def _equal_ngate_const(a: int, b: int, angle: float) -> BoundGate:
    c = const(angle)
    return BoundGate(GateKind.NGATE, (a, b), (c, c, c))


def prep_gates(n_qubits: int, spec: InitSpec) -> list[BoundGate]:
    """Preparation gate list for the requested fixed-(s, s_z) input state."""
    if n_qubits % 2 or n_qubits < 2:
        raise ConfigurationError("paired initial states need even n_qubits >= 2")
    n_pairs = n_qubits // 2
    if spec.kind is InitKind.SINGLET_PRODUCT:
        gates = []
        for p in range(n_pairs):
            gates += _singlet_pair_gates(2 * p, 2 * p + 1)
        return gates
    if spec.kind is InitKind.TRIPLET_FLIP:
        if not 0 <= spec.pair_index < n_pairs:
            raise ConfigurationError(f"pair_index {spec.pair_index} out of range")
        gates = []
        for p in range(n_pairs):
            if p == spec.pair_index:
                gates += _triplet_pair_gates(2 * p, 2 * p + 1, spec.s_z)
            else:
                gates += _singlet_pair_gates(2 * p, 2 * p + 1)
        return gates
    if spec.kind is InitKind.ORTHO_SINGLET:
        if spec.variant not in (0, 1):
            raise ConfigurationError("ortho-singlet variant must be 0 or 1")
        if spec.variant == 1 and n_qubits < 4:
            raise ConfigurationError("orthogonal s=0 combination needs n_qubits >= 4")
        gates = prep_gates(n_qubits, singlet_product())
        if spec.variant == 1:
            gates += [_equal_ngate_const(1, 2, _ORTHO_T),
                      _equal_ngate_const(0, 1, _ORTHO_G),
                      _equal_ngate_const(1, 2, _ORTHO_T)]
        return gates
    raise ConfigurationError(f"unknown init spec {spec.kind}")


def initial_state(n_qubits: int, spec: InitSpec) -> StateVector:
    """Run the preparation subcircuit for ``spec`` on |0...0⟩."""
    st = zero_state(n_qubits)
    empty = np.empty(0)
    for g in prep_gates(n_qubits, spec):
        apply_gate_inplace(st.amplitudes, n_qubits, g.action(empty))
    return st


# ---------------------------------------------------------------------------
# ansatz builders
# ---------------------------------------------------------------------------

def _check_layers(layers: int) -> None:
    # 0 is allowed: a bare input (plus, for the hardware-efficient family, its
    # initial rotation layer) with no entangling blocks.
    if layers < 0:
        raise ConfigurationError(f"layers must be >= 0, got {layers}")


def _brickwork_pairs(n: int) -> list[tuple[int, int]]:
    """(0,1),(2,3),... then (1,2),(3,4),...: N-1 neighbor pairs per layer."""
    return [(q, q + 1) for q in range(0, n - 1, 2)] + \
           [(q, q + 1) for q in range(1, n - 1, 2)]


def build_hardware_efficient(n_qubits: int, layers: int) -> Circuit:
    """Layered RY+RZ rotations with neighbor-CNOT chains; conserves nothing.

    One initial rotation layer, then per layer a CNOT chain followed by
    rotations, giving L = 2N(layers+1) and (N-1)*layers body CNOTs.
    """
    _check_layers(layers)
    body, k = [], 0

    def rotation_layer():
        nonlocal k
        for q in range(n_qubits):
            body.append(BoundGate(GateKind.RY, (q,), (var(k),)))
            body.append(BoundGate(GateKind.RZ, (q,), (var(k + 1),)))
            k += 2

    rotation_layer()
    for _ in range(layers):
        for q in range(n_qubits - 1):
            body.append(BoundGate(GateKind.CNOT, (q, q + 1)))
        rotation_layer()
    return Circuit(n_qubits, (), tuple(body), Family.HARDWARE_EFFICIENT, layers, k)


def build_sz_conserving(n_qubits: int, layers: int) -> Circuit:
    """Brickwork of equal-angle exchange gates plus a phase gate per qubit.

    Each two-qubit gate is NGATE(t,t,t) with one trainable angle (3 CNOTs);
    L = (2N-1)*layers.  Commutes with total S_z, so the input's magnetization
    sector is preserved exactly.
    """
    _check_layers(layers)
    body, k = [], 0
    for _ in range(layers):
        for a, b in _brickwork_pairs(n_qubits):
            s = var(k)
            body.append(BoundGate(GateKind.NGATE, (a, b), (s, s, s)))
            k += 1
        for q in range(n_qubits):
            body.append(BoundGate(GateKind.PHASE, (q,), (var(k),)))
            k += 1
    return Circuit(n_qubits, (), tuple(body), Family.SZ_CONSERVING, layers, k)


def build_stot_conserving(n_qubits: int, layers: int,
                          init_spec: InitSpec | None = None) -> Circuit:
    """Exchange-gate brickwork without phase gates, after a fixed-(s, s_z) prep.

    The body commutes with both S_z and S_tot^2; L = (N-1)*layers.  The
    preparation subcircuit (singlet pairs by default) costs >= N/2 CNOTs,
    reported as cnot_init.
    """
    _check_layers(layers)
    if n_qubits % 2:
        raise ConfigurationError("total-spin ansatz needs even n_qubits")
    spec = init_spec if init_spec is not None else singlet_product()
    prep = tuple(prep_gates(n_qubits, spec))
    body, k = [], 0
    for _ in range(layers):
        for a, b in _brickwork_pairs(n_qubits):
            s = var(k)
            body.append(BoundGate(GateKind.NGATE, (a, b), (s, s, s)))
            k += 1
    return Circuit(n_qubits, prep, tuple(body), Family.STOT_CONSERVING, layers, k)


def build_ising_hva(n_qubits: int, layers: int) -> Circuit:
    """Layered ZZ-rotations plus RX and RY per qubit, from the all-|+⟩ input.

    ZZ-rotations (NGATE with x,y angles pinned to 0; 2 CNOTs each) match the
    Ising interaction, RX the transverse field.  RX alone conserves the global
    spin-flip parity prod sigma_x, which pins the circuit to the even sector of
    the |+⟩ product; sigma_y anticommutes with the flip operator, so the added
    RY lets the flip-penalty cost steer into the odd sector.  RY alone (no RX)
    was tried and plateaus well short of the low-lying eigenstates at modest
    depth, so both axes are kept.  L = (3N-1)*layers; CNOTs 2(N-1)*layers.
    """
    _check_layers(layers)
    prep = tuple(BoundGate(GateKind.H, (q,)) for q in range(n_qubits))
    body, k = [], 0
    zero = const(0.0)
    for _ in range(layers):
        for a, b in _brickwork_pairs(n_qubits):
            body.append(BoundGate(GateKind.NGATE, (a, b), (zero, zero, var(k))))
            k += 1
        for q in range(n_qubits):
            body.append(BoundGate(GateKind.RX, (q,), (var(k),)))
            k += 1
            body.append(BoundGate(GateKind.RY, (q,), (var(k),)))
            k += 1
    return Circuit(n_qubits, prep, tuple(body), Family.ISING_HVA, layers, k)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(circuit: Circuit, theta: np.ndarray,
             input_state: StateVector | None = None) -> StateVector:
    """Apply the circuit at parameters ``theta``.

    With no input the preparation subcircuit runs on |0...0⟩ first; an
    explicit input is taken as already prepared and only the body runs.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ConfigurationError(
            f"theta has shape {theta.shape}, expected ({circuit.n_params},)")
    if input_state is None:
        st = zero_state(circuit.n_qubits)
        for g in circuit.prep:
            apply_gate_inplace(st.amplitudes, circuit.n_qubits, g.action(theta))
    else:
        if input_state.n_qubits != circuit.n_qubits:
            raise ConfigurationError("input state size mismatch")
        st = input_state.copy()
    for g in circuit.body:
        apply_gate_inplace(st.amplitudes, circuit.n_qubits, g.action(theta))
    return st


# ---------------------------------------------------------------------------
# adjoint-mode gradients
# ---------------------------------------------------------------------------

_INVOLUTORY = {GateKind.CNOT, GateKind.SWAP, GateKind.X, GateKind.H}


def _unapply_inplace(amps: np.ndarray, n: int, gate: BoundGate, theta: np.ndarray) -> None:
    kind = gate.kind
    if kind in _INVOLUTORY:
        apply_gate_inplace(amps, n, gate.action(theta))
        return
    if kind is GateKind.CUSTOM2Q:
        inv = GateAction(kind, gate.targets, (), gate.matrix.conj().T)
        apply_gate_inplace(amps, n, inv)
        return
    # all remaining kinds are exp(+i angle G): invert by negating angles
    neg = tuple(-a for a in gate.angles(theta))
    apply_gate_inplace(amps, n, GateAction(kind, gate.targets, neg))


_GENERATOR_AXES = {GateKind.RX: "x", GateKind.RY: "y", GateKind.RZ: "z"}
_NGATE_AXES = ("x", "y", "z")


def _generator_apply(gate: BoundGate, slot_pos: int, amps: np.ndarray, n: int) -> np.ndarray:
    """G|phi⟩ for the generator tied to one slot of the gate."""
    out = amps.copy()
    kind = gate.kind
    if kind in _GENERATOR_AXES:
        apply_pauli_inplace(out, n, gate.targets[0], _GENERATOR_AXES[kind])
    elif kind is GateKind.PHASE:
        # generator |1⟩⟨1| on the target qubit
        q = gate.targets[0]
        v = out.reshape(1 << q, 2, -1)
        v[:, 0, :] = 0.0
    elif kind is GateKind.NGATE:
        ax = _NGATE_AXES[slot_pos]
        apply_pauli_inplace(out, n, gate.targets[0], ax)
        apply_pauli_inplace(out, n, gate.targets[1], ax)
    else:
        raise ConfigurationError(f"gate kind {kind} has no trainable generator")
    return out


def adjoint_accumulate(circuit: Circuit, theta: np.ndarray,
                       output_state: StateVector, lam: np.ndarray) -> np.ndarray:
    """Gradient of Re⟨lam_source⟩ via one reverse sweep over the body.

    ``lam`` must be (dC/d⟨psi|) as a ket, e.g. O|psi⟩ for C = ⟨psi|O|psi⟩;
    then dC/dtheta_k = -2 Im ⟨lam_k| G |phi_k⟩ accumulated over every slot
    bound to k.  Mutates neither input (works on copies).
    """
    n = circuit.n_qubits
    phi = output_state.amplitudes.copy()
    lam = lam.copy()
    grad = np.zeros(circuit.n_params)
    for gate in reversed(circuit.body):
        for pos, slot in enumerate(gate.slots):
            if slot.trainable:
                gphi = _generator_apply(gate, pos, phi, n)
                grad[slot.index] += -2.0 * float(np.imag(np.vdot(lam, gphi)))
        _unapply_inplace(phi, n, gate, theta)
        _unapply_inplace(lam, n, gate, theta)
    return grad


def gradient(circuit: Circuit, theta: np.ndarray, obs,
             input_state: StateVector | None = None) -> tuple[float, np.ndarray]:
    """(⟨psi(theta)|obs|psi(theta)⟩, exact analytic gradient of length L)."""
    from .operators import apply_observable  # local import avoids a cycle

    theta = np.asarray(theta, dtype=float)
    psi = evaluate(circuit, theta, input_state)
    opsi = apply_observable(psi, obs)
    value = float(np.real(np.vdot(psi.amplitudes, opsi.amplitudes)))
    grad = adjoint_accumulate(circuit, theta, psi, opsi.amplitudes)
    return value, grad


# ---------------------------------------------------------------------------
# resource accounting and export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResourceCount:
    cnot_body: int
    cnot_init: int
    n_params: int


def _gate_cnots(gate: BoundGate) -> int:
    kind = gate.kind
    if kind is GateKind.CNOT:
        return 1
    if kind in (GateKind.SWAP, GateKind.CUSTOM2Q):
        return 3
    if kind is GateKind.NGATE:
        xs, ys = gate.slots[0], gate.slots[1]
        is_zz = (not xs.trainable and xs.value == 0.0
                 and not ys.trainable and ys.value == 0.0)
        return 2 if is_zz else 3   # ZZ-rotation: 2 CNOTs + 1 RZ
    return 0


def count_resources(circuit: Circuit) -> ResourceCount:
    """CNOT-equivalent counts, gate by gate, body and prep kept separate."""
    return ResourceCount(
        cnot_body=sum(_gate_cnots(g) for g in circuit.body),
        cnot_init=sum(_gate_cnots(g) for g in circuit.prep),
        n_params=circuit.n_params)


def to_json_dict(circuit: Circuit) -> dict:
    """JSON-serializable circuit description for reproducibility artifacts."""
    def slot_dict(s: Slot):
        return {"index": s.index} if s.trainable else {"value": s.value}

    def gate_dict(g: BoundGate):
        d = {"kind": g.kind.value, "targets": list(g.targets),
             "slots": [slot_dict(s) for s in g.slots]}
        if g.matrix is not None:
            d["matrix"] = [[[c.real, c.imag] for c in row] for row in g.matrix]
        return d

    return {
        "family": circuit.family.value,
        "n_qubits": circuit.n_qubits,
        "layers": circuit.layers,
        "n_params": circuit.n_params,
        "prep": [gate_dict(g) for g in circuit.prep],
        "body": [gate_dict(g) for g in circuit.body],
    }
