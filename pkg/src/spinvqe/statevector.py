"""Dense statevector simulation for qubit registers.

Conventions, fixed once for the whole package:

* qubit 0 is the leftmost ket label and the most significant bit of the
  basis index, so ``|0,1⟩`` lives at index ``01₂ = 1``.
* single-qubit rotations use the positive-exponent convention
  ``R_a(theta) = exp(+i theta sigma_a)``.
* the two-qubit exchange gate is
  ``N(tx,ty,tz) = exp(i (tx XX + ty YY + tz ZZ))``; at equal angles it
  reduces to ``e^{-i t}(cos 2t I + i sin 2t SWAP)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError


class GateKind(Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    PHASE = "phase"
    CNOT = "cnot"
    NGATE = "ngate"
    SWAP = "swap"
    X = "x"
    H = "h"
    CUSTOM2Q = "custom2q"


#: number of angle parameters each kind takes
N_PARAMS = {
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.PHASE: 1,
    GateKind.CNOT: 0,
    GateKind.NGATE: 3,
    GateKind.SWAP: 0,
    GateKind.X: 0,
    GateKind.H: 0,
    GateKind.CUSTOM2Q: 0,
}

_ONE_QUBIT = {GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.PHASE,
              GateKind.X, GateKind.H}


@dataclass(frozen=True)
class GateAction:
    """A concrete gate: kind, target qubit(s) and bound angle values."""

    kind: GateKind
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = None  # CUSTOM2Q only

    def __post_init__(self):
        want = 1 if self.kind in _ONE_QUBIT else 2
        if len(self.targets) != want:
            raise ConfigurationError(
                f"{self.kind.value} acts on {want} qubit(s), got targets {self.targets}")
        if len(self.targets) == 2 and self.targets[0] == self.targets[1]:
            raise ConfigurationError(f"duplicate target qubit {self.targets[0]}")
        if len(self.params) != N_PARAMS[self.kind]:
            raise ConfigurationError(
                f"{self.kind.value} takes {N_PARAMS[self.kind]} angle(s), got {self.params}")
        if self.kind is GateKind.CUSTOM2Q:
            if self.matrix is None or self.matrix.shape != (4, 4):
                raise ConfigurationError("CUSTOM2Q requires a 4x4 matrix")


def ngate_unitary(tx: float, ty: float, tz: float) -> np.ndarray:
    """4x4 matrix of exp(i (tx XX + ty YY + tz ZZ)) in basis (00,01,10,11).

    The three generators commute, so the exponential factorizes; on the even
    subspace {00,11} XX and YY act as +/- sigma_x and ZZ as +I, on the odd
    subspace {01,10} both act as sigma_x and ZZ as -I.
    """
    dm, dp = tx - ty, tx + ty
    em, ep = np.exp(1j * tz), np.exp(-1j * tz)
    u = np.zeros((4, 4), dtype=np.complex128)
    u[0, 0] = u[3, 3] = em * np.cos(dm)
    u[0, 3] = u[3, 0] = 1j * em * np.sin(dm)
    u[1, 1] = u[2, 2] = ep * np.cos(dp)
    u[1, 2] = u[2, 1] = 1j * ep * np.sin(dp)
    return u


def gate_unitary(gate: GateAction) -> np.ndarray:
    """Unitary matrix of a gate: 2x2 for one target, 4x4 for two.

    Two-qubit matrices are in the basis ordered by ``targets`` (first target
    is the more significant bit), matching the CNOT matrix convention with
    the control listed first.
    """
    k = gate.kind
    if k is GateKind.RX:
        (t,) = gate.params
        return np.array([[np.cos(t), 1j * np.sin(t)],
                         [1j * np.sin(t), np.cos(t)]], dtype=np.complex128)
    if k is GateKind.RY:
        (t,) = gate.params
        return np.array([[np.cos(t), np.sin(t)],
                         [-np.sin(t), np.cos(t)]], dtype=np.complex128)
    if k is GateKind.RZ:
        (t,) = gate.params
        return np.array([[np.exp(1j * t), 0],
                         [0, np.exp(-1j * t)]], dtype=np.complex128)
    if k is GateKind.PHASE:
        (t,) = gate.params
        return np.array([[1, 0], [0, np.exp(1j * t)]], dtype=np.complex128)
    if k is GateKind.X:
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)
    if k is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    if k is GateKind.CNOT:
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                         [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
    if k is GateKind.SWAP:
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0],
                         [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128)
    if k is GateKind.NGATE:
        return ngate_unitary(*gate.params)
    if k is GateKind.CUSTOM2Q:
        return np.asarray(gate.matrix, dtype=np.complex128)
    raise ConfigurationError(f"unknown gate kind {k}")


@dataclass
class StateVector:
    """Dense complex amplitudes of an n-qubit register (qubit 0 = MSB)."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise ConfigurationError(
                f"expected {2 ** self.n_qubits} amplitudes for {self.n_qubits} "
                f"qubits, got shape {self.amplitudes.shape}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())


def zero_state(n_qubits: int) -> StateVector:
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def init_basis(n_qubits: int, bitstring) -> StateVector:
    """Computational basis state |b0,b1,...⟩ with qubit 0 the leftmost bit."""
    bits = list(bitstring)
    if len(bits) != n_qubits:
        raise ConfigurationError(
            f"bitstring length {len(bits)} != n_qubits {n_qubits}")
    index = 0
    for b in bits:
        if b not in (0, 1):
            raise ConfigurationError(f"bits must be 0 or 1, got {b!r}")
        index = (index << 1) | b
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def neel_bits(n_qubits: int) -> list[int]:
    """The alternating |0,1,0,...,0,1⟩ pattern used as the default input."""
    return [q % 2 for q in range(n_qubits)]


def init_singlet_product(n_qubits: int) -> StateVector:
    """Tensor product of two-qubit singlets (|01⟩-|10⟩)/sqrt(2) on pairs (0,1),(2,3),..."""
    if n_qubits % 2 != 0:
        raise ConfigurationError("singlet product needs an even number of qubits")
    singlet = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)
    amps = np.array([1.0], dtype=np.complex128)
    for _ in range(n_qubits // 2):
        amps = np.kron(amps, singlet)
    return StateVector(n_qubits, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """⟨a|b⟩ with conjugation on a."""
    if a.n_qubits != b.n_qubits:
        raise ConfigurationError(
            f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


# ---------------------------------------------------------------------------
# in-place kernels (operate on the flat amplitude buffer)
# ---------------------------------------------------------------------------

def _split1(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    """View of the buffer as (left, qubit q, right)."""
    return amps.reshape(1 << q, 2, -1)


def apply_1q_inplace(amps: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    t = _split1(amps, n, q)
    a = t[:, 0, :].copy()
    b = t[:, 1, :]
    t[:, 0, :] = u[0, 0] * a + u[0, 1] * b
    t[:, 1, :] = u[1, 0] * a + u[1, 1] * b


def apply_diag1_inplace(amps: np.ndarray, n: int, q: int, d0: complex, d1: complex) -> None:
    t = _split1(amps, n, q)
    if d0 != 1:
        t[:, 0, :] *= d0
    if d1 != 1:
        t[:, 1, :] *= d1


def apply_2q_inplace(amps: np.ndarray, n: int, qa: int, qb: int, u: np.ndarray) -> None:
    """Apply a 4x4 unitary given in (qa, qb) bit order, qa the high bit."""
    i, j = (qa, qb) if qa < qb else (qb, qa)
    if qa > qb:  # reorder matrix to (low-index, high-index) bit convention
        perm = [0, 2, 1, 3]
        u = u[np.ix_(perm, perm)]
    t = amps.reshape(1 << i, 2, 1 << (j - i - 1), 2, -1)
    sub = t.transpose(1, 3, 0, 2, 4).reshape(4, -1)
    out = (u @ sub).reshape(2, 2, t.shape[0], t.shape[2], t.shape[4])
    t[...] = out.transpose(2, 0, 3, 1, 4)


def _swap_slices(t: np.ndarray, idx_a, idx_b) -> None:
    tmp = t[idx_a].copy()
    t[idx_a] = t[idx_b]
    t[idx_b] = tmp


def apply_gate_inplace(amps: np.ndarray, n: int, gate: GateAction) -> None:
    """Dispatch a gate onto the buffer, using cheap paths where possible."""
    k = gate.kind
    ts = gate.targets
    for q in ts:
        if not 0 <= q < n:
            raise ConfigurationError(f"target qubit {q} out of range for n={n}")
    if k is GateKind.RZ:
        (t,) = gate.params
        apply_diag1_inplace(amps, n, ts[0], np.exp(1j * t), np.exp(-1j * t))
    elif k is GateKind.PHASE:
        (t,) = gate.params
        apply_diag1_inplace(amps, n, ts[0], 1.0, np.exp(1j * t))
    elif k is GateKind.X:
        v = _split1(amps, n, ts[0])
        _swap_slices(v, (slice(None), 0), (slice(None), 1))
    elif k in (GateKind.RX, GateKind.RY, GateKind.H):
        apply_1q_inplace(amps, n, ts[0], gate_unitary(gate))
    elif k is GateKind.CNOT:
        c, x = ts
        i, j = (c, x) if c < x else (x, c)
        v = amps.reshape(1 << i, 2, 1 << (j - i - 1), 2, -1)
        if c < x:  # control is the high bit: swap target within control=1 block
            _swap_slices(v, (slice(None), 1, slice(None), 0), (slice(None), 1, slice(None), 1))
        else:
            _swap_slices(v, (slice(None), 0, slice(None), 1), (slice(None), 1, slice(None), 1))
    elif k is GateKind.SWAP:
        i, j = min(ts), max(ts)
        v = amps.reshape(1 << i, 2, 1 << (j - i - 1), 2, -1)
        _swap_slices(v, (slice(None), 0, slice(None), 1), (slice(None), 1, slice(None), 0))
    elif k in (GateKind.NGATE, GateKind.CUSTOM2Q):
        apply_2q_inplace(amps, n, ts[0], ts[1], gate_unitary(gate))
    else:
        raise ConfigurationError(f"unknown gate kind {k}")


def apply_pauli_inplace(amps: np.ndarray, n: int, q: int, axis: str) -> None:
    """Multiply by a single Pauli sigma_axis on qubit q (not unitary bookkeeping:
    used for generator contractions and observable actions)."""
    t = _split1(amps, n, q)
    if axis == "z":
        t[:, 1, :] *= -1.0
    elif axis == "x":
        _swap_slices(t, (slice(None), 0), (slice(None), 1))
    elif axis == "y":
        a = t[:, 0, :].copy()
        t[:, 0, :] = -1j * t[:, 1, :]
        t[:, 1, :] = 1j * a
    else:
        raise ConfigurationError(f"unknown Pauli axis {axis!r}")


def apply_gate(state: StateVector, gate: GateAction) -> StateVector:
    """Functional gate application: returns a new StateVector."""
    out = state.copy()
    apply_gate_inplace(out.amplitudes, out.n_qubits, gate)
    return out


def reduced_density_left(state: StateVector) -> np.ndarray:
    """Reduced density matrix of the left half (qubits 0..N/2-1)."""
    if state.n_qubits % 2 != 0:
        raise ConfigurationError("half-chain cut needs an even number of qubits")
    d = 1 << (state.n_qubits // 2)
    m = state.amplitudes.reshape(d, d)
    return m @ m.conj().T


def random_state(n_qubits: int, rng) -> StateVector:
    """Haar-ish random normalized state (Gaussian amplitudes, normalized)."""
    rng = np.random.default_rng(rng)
    amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    amps /= np.linalg.norm(amps)
    return StateVector(n_qubits, amps.astype(np.complex128))
