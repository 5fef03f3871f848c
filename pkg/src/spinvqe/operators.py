"""Hamiltonians, symmetry operators and the exact-diagonalization oracle.

Observables are weighted sums of Pauli strings.  The physically important
ones additionally carry a fast-path tag so that applying them to a state
uses permutation/diagonal kernels instead of the generic string sum; both
paths must agree and the tests cross-check them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, ValidationError
from .statevector import StateVector

_PAULI_CHARS = frozenset("IXYZ")


class FastPath(Enum):
    HEISENBERG_CHAIN = "heisenberg_chain"
    ISING_TF = "ising_tf"
    S_Z = "s_z"
    S_TOT_SQ = "s_tot_sq"
    SPIN_FLIP_X = "spin_flip_x"


def _parity(v: np.ndarray) -> np.ndarray:
    """Bit parity of each element, as 0/1."""
    return np.bitwise_count(v).astype(np.int64) & 1


def _popcount(v: np.ndarray) -> np.ndarray:
    return np.bitwise_count(v).astype(np.int64)


@dataclass
class Observable:
    """Hermitian operator: real-weighted Pauli strings, optional fast path.

    ``terms`` entries are (coefficient, label) with label a length-n string
    over IXYZ, character q acting on qubit q (qubit 0 = MSB of the index).
    ``meta`` carries fast-path parameters (J, J_z, h_x).
    """

    n_qubits: int
    terms: list[tuple[float, str]]
    tag: FastPath | None = None
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for coeff, label in self.terms:
            if isinstance(coeff, complex) and coeff.imag != 0:
                raise ValidationError(f"non-real coefficient {coeff} breaks Hermiticity")
            if len(label) != self.n_qubits or not set(label) <= _PAULI_CHARS:
                raise ConfigurationError(f"bad Pauli label {label!r} for n={self.n_qubits}")

    def _compiled(self):
        """Per-term (coeff, flip_mask, phase_mask, i^n_Y) with qubit q at bit 2^(n-1-q)."""
        if "compiled" not in self._cache:
            compiled = []
            for coeff, label in self.terms:
                mx = my = mz = 0
                for q, ch in enumerate(label):
                    bit = 1 << (self.n_qubits - 1 - q)
                    if ch == "X":
                        mx |= bit
                    elif ch == "Y":
                        my |= bit
                    elif ch == "Z":
                        mz |= bit
                ny = bin(my).count("1")
                compiled.append((float(coeff), mx | my, my | mz, 1j ** ny))
            self._cache["compiled"] = compiled
        return self._cache["compiled"]


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _string(n: int, placed: dict[int, str]) -> str:
    return "".join(placed.get(q, "I") for q in range(n))


def heisenberg_chain(n_qubits: int, J: float = 1.0) -> Observable:
    """Open-boundary Heisenberg chain: J * sum_i sigma_i . sigma_{i+1}."""
    if n_qubits < 2:
        raise ConfigurationError("chain needs at least 2 qubits")
    terms = []
    for i in range(n_qubits - 1):
        for a in "XYZ":
            terms.append((J, _string(n_qubits, {i: a, i + 1: a})))
    return Observable(n_qubits, terms, FastPath.HEISENBERG_CHAIN, {"J": J})


def ising_transverse(n_qubits: int, J_z: float = 1.0, h_x: float = 1.0) -> Observable:
    """Transverse-field Ising chain: J_z * sum ZZ + h_x * sum X."""
    if n_qubits < 2:
        raise ConfigurationError("chain needs at least 2 qubits")
    terms = [(J_z, _string(n_qubits, {i: "Z", i + 1: "Z"})) for i in range(n_qubits - 1)]
    terms += [(h_x, _string(n_qubits, {i: "X"})) for i in range(n_qubits)]
    return Observable(n_qubits, terms, FastPath.ISING_TF, {"J_z": J_z, "h_x": h_x})


def s_z(n_qubits: int) -> Observable:
    """Total magnetization S_z = (1/2) sum_i sigma_z^i."""
    terms = [(0.5, _string(n_qubits, {i: "Z"})) for i in range(n_qubits)]
    return Observable(n_qubits, terms, FastPath.S_Z)


def s_tot_sq(n_qubits: int) -> Observable:
    """Total-spin operator S_tot^2 = S_x^2 + S_y^2 + S_z^2.

    Pauli form: (3N/4) I + (1/2) sum_{i<j} (XX + YY + ZZ)_{ij}; the fast
    path applies the equivalent swap form (3N/4 - N(N-1)/4) I + sum_{i<j} P_ij.
    """
    n = n_qubits
    terms = [(0.75 * n, "I" * n)]
    for i in range(n):
        for j in range(i + 1, n):
            for a in "XYZ":
                terms.append((0.5, _string(n, {i: a, j: a})))
    return Observable(n, terms, FastPath.S_TOT_SQ)


def spin_flip_x(n_qubits: int) -> Observable:
    """Global spin flip: product of sigma_x over all qubits."""
    return Observable(n_qubits, [(1.0, "X" * n_qubits)], FastPath.SPIN_FLIP_X)


# ---------------------------------------------------------------------------
# application and expectation
# ---------------------------------------------------------------------------

def _swap_pair(amps: np.ndarray, n: int, i: int, j: int) -> np.ndarray:
    """New buffer with qubits i<j exchanged."""
    v = amps.reshape(1 << i, 2, 1 << (j - i - 1), 2, -1)
    return np.ascontiguousarray(v.transpose(0, 3, 2, 1, 4)).reshape(-1)

def _flip_qubit(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    v = amps.reshape(1 << q, 2, -1)
    return np.ascontiguousarray(v[:, ::-1, :]).reshape(-1)


def _apply_generic(obs: Observable, amps: np.ndarray) -> np.ndarray:
    dim = amps.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    out = np.zeros(dim, dtype=np.complex128)
    for coeff, flip, pmask, iny in obs._compiled():
        src = idx ^ flip
        signs = 1.0 - 2.0 * _parity(src & pmask)
        out += (coeff * iny) * signs * amps[src]
    return out


def _sz_diag(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return (n - 2 * _popcount(idx)) / 2.0


def _apply_fast(obs: Observable, amps: np.ndarray) -> np.ndarray:
    n = obs.n_qubits
    tag = obs.tag
    if tag is FastPath.S_Z:
        if "diag" not in obs._cache:
            obs._cache["diag"] = _sz_diag(n)
        return obs._cache["diag"] * amps
    if tag is FastPath.SPIN_FLIP_X:
        return amps[::-1].copy()
    if tag is FastPath.HEISENBERG_CHAIN:
        J = obs.meta["J"]
        out = -(n - 1) * amps.astype(np.complex128)
        for i in range(n - 1):
            out += 2.0 * _swap_pair(amps, n, i, i + 1)
        return J * out
    if tag is FastPath.S_TOT_SQ:
        c0 = 0.75 * n - 0.25 * n * (n - 1)
        out = c0 * amps.astype(np.complex128)
        for i in range(n):
            for j in range(i + 1, n):
                out += _swap_pair(amps, n, i, j)
        return out
    if tag is FastPath.ISING_TF:
        if "diag" not in obs._cache:
            idx = np.arange(1 << n, dtype=np.int64)
            diag = np.zeros(1 << n)
            for i in range(n - 1):
                mask = (1 << (n - 1 - i)) | (1 << (n - 2 - i))
                diag += 1.0 - 2.0 * _parity(idx & mask)
            obs._cache["diag"] = diag
        out = (obs.meta["J_z"] * obs._cache["diag"]) * amps
        for q in range(n):
            out += obs.meta["h_x"] * _flip_qubit(amps, n, q)
        return out
    raise ConfigurationError(f"no fast path for tag {tag}")


def apply_observable(state: StateVector, obs: Observable, *, generic: bool = False) -> StateVector:
    """Return O|psi⟩ (unnormalized). ``generic=True`` forces the Pauli-sum path."""
    if state.n_qubits != obs.n_qubits:
        raise ConfigurationError(
            f"size mismatch: state has {state.n_qubits} qubits, observable {obs.n_qubits}")
    if obs.tag is not None and not generic:
        out = _apply_fast(obs, state.amplitudes)
    else:
        out = _apply_generic(obs, state.amplitudes)
    return StateVector(state.n_qubits, out)


def expectation(state: StateVector, obs: Observable) -> float:
    """⟨psi|O|psi⟩, real for Hermitian O."""
    return float(np.real(np.vdot(state.amplitudes, apply_observable(state, obs).amplitudes)))


def dense_matrix(obs: Observable) -> np.ndarray:
    """Full 2^n x 2^n matrix, assembled column-wise from the Pauli terms."""
    dim = 1 << obs.n_qubits
    idx = np.arange(dim, dtype=np.int64)
    m = np.zeros((dim, dim), dtype=np.complex128)
    for coeff, flip, pmask, iny in obs._compiled():
        signs = 1.0 - 2.0 * _parity(idx & pmask)
        m[idx ^ flip, idx] += (coeff * iny) * signs
    return m


# ---------------------------------------------------------------------------
# exact diagonalization with quantum-number labeling
# ---------------------------------------------------------------------------

@dataclass
class LabeledEigenstate:
    """Eigenstate with its quantum numbers resolved inside degenerate subspaces."""

    index: int           # 1-based position in the energy-sorted spectrum
    energy: float
    vector: StateVector
    s: float | None = None
    s_z: float | None = None
    flip_parity: int | None = None
    label: str = ""

    def as_record(self) -> dict:
        return {
            "index": self.index,
            "energy": self.energy,
            "s": self.s,
            "s_z": self.s_z,
            "flip_parity": self.flip_parity,
            "label": self.label,
        }


DENSE_LIMIT = 12      # above this, fall back to fixed-S_z sector solves
MAX_QUBITS_ED = 16


def check_commutes(a: Observable, b: Observable, n_vectors: int = 4,
                   tol: float = 1e-8, seed: int = 7) -> bool:
    """Numerical commutation check ||[A,B]v|| < tol on random normalized states."""
    rng = np.random.default_rng(seed)
    for _ in range(n_vectors):
        v = rng.normal(size=1 << a.n_qubits) + 1j * rng.normal(size=1 << a.n_qubits)
        v /= np.linalg.norm(v)
        sv = StateVector(a.n_qubits, v)
        ab = apply_observable(apply_observable(sv, b), a).amplitudes
        ba = apply_observable(apply_observable(sv, a), b).amplitudes
        scale = max(1.0, np.linalg.norm(ab))
        if np.linalg.norm(ab - ba) > tol * scale:
            return False
    return True


def _commutes_with_sz(obs: Observable) -> bool:
    return check_commutes(obs, s_z(obs.n_qubits))


def _solve_dense(obs: Observable, k: int) -> tuple[np.ndarray, np.ndarray]:
    m = dense_matrix(obs)
    if np.abs(m.imag).max() < 1e-14:
        m = np.ascontiguousarray(m.real)
    vals, vecs = scipy.linalg.eigh(m)
    return vals, vecs.astype(np.complex128)


def _sector_basis(n: int, n_ones: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[_popcount(idx) == n_ones]


def _sector_matrix(obs: Observable, basis: np.ndarray) -> np.ndarray:
    """Restriction of an S_z-conserving observable to a fixed-popcount sector.

    Individual Pauli terms may map a sector state outside the sector; those
    matrix elements cancel in the S_z-conserving total and are dropped here.
    """
    dim = basis.shape[0]
    target = _popcount(basis[:1])[0]
    m = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    for coeff, flip, pmask, iny in obs._compiled():
        dst = basis ^ flip
        keep = _popcount(dst) == target
        if not np.any(keep):
            continue
        rows = np.searchsorted(basis, dst[keep])
        signs = 1.0 - 2.0 * _parity(basis[keep] & pmask)
        m[rows, cols[keep]] += (coeff * iny) * signs
    return m


def _solve_sector(obs: Observable, n_ones: int, n_states: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenpairs in one S_z sector; vectors embedded in the full space."""
    basis = _sector_basis(obs.n_qubits, n_ones)
    m = _sector_matrix(obs, basis)
    if np.abs(m.imag).max() < 1e-14:
        m = np.ascontiguousarray(m.real)
    hi = min(n_states, basis.shape[0]) - 1
    vals, vecs = scipy.linalg.eigh(m, subset_by_index=[0, hi])
    full = np.zeros((1 << obs.n_qubits, vals.shape[0]), dtype=np.complex128)
    full[basis, :] = vecs
    return vals, full


def _group_by(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Split sorted positions into runs of values equal within tol."""
    groups, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[start] > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _refine_with_symmetry(vecs: np.ndarray, sym: Observable, tol: float = 1e-6):
    """Diagonalize a symmetry inside a degenerate block; returns (vecs, eigenvalues)."""
    n = sym.n_qubits
    cols = [apply_observable(StateVector(n, vecs[:, j]), sym).amplitudes
            for j in range(vecs.shape[1])]
    sv = np.stack(cols, axis=1)
    m = vecs.conj().T @ sv
    m = 0.5 * (m + m.conj().T)
    lam, w = np.linalg.eigh(m)
    return vecs @ w, lam


def _quantum_number(tag: FastPath | None, lam: float):
    """Map a symmetry eigenvalue to the labeled quantum number."""
    if tag is FastPath.S_TOT_SQ:
        s = 0.5 * (-1.0 + np.sqrt(max(0.0, 1.0 + 4.0 * lam)))
        return "s", round(2 * s) / 2
    if tag is FastPath.S_Z:
        return "s_z", round(2 * lam) / 2
    if tag is FastPath.SPIN_FLIP_X:
        return "flip_parity", int(np.sign(lam)) if lam != 0 else 0
    return None, lam


_MULTIPLET_PREFIX = {0.0: "S", 0.5: "D", 1.0: "T", 1.5: "Q4", 2.0: "Q5"}


def _attach_labels(states: list[LabeledEigenstate]) -> None:
    """Paper-style multiplet names: S1, T1(-1), T1(0), T1(+1), S2, ..."""
    counters: dict[float, int] = {}
    i = 0
    while i < len(states):
        st = states[i]
        if st.s is None:
            sign = {1: "(+)", -1: "(-)"}.get(st.flip_parity, "")
            st.label = f"E{st.index}{sign}"
            i += 1
            continue
        mult = int(round(2 * st.s + 1))
        counters[st.s] = counters.get(st.s, 0) + 1
        ordinal = counters[st.s]
        prefix = _MULTIPLET_PREFIX.get(st.s, f"m{mult}")
        for member in states[i:i + mult]:
            if member.s != st.s:
                break
            if member.s == 0:
                member.label = f"{prefix}{ordinal}"
            else:
                sz_txt = "0" if member.s_z == 0 else f"{member.s_z:+g}"
                member.label = f"{prefix}{ordinal}({sz_txt})"
        i += mult


def diagonalize_labeled(obs: Observable, k: int,
                        symmetries: list[Observable] | None = None) -> list[LabeledEigenstate]:
    """k lowest eigenstates, simultaneously diagonalized with the given
    symmetry operators inside each degenerate energy subspace.

    Ordering: ascending energy, then ascending (s, s_z) within a degenerate
    group.  Labels follow the multiplet naming of the spin chain (S1, T1(0), ...).
    """
    n = obs.n_qubits
    dim = 1 << n
    if not 1 <= k <= dim:
        raise ConfigurationError(f"k={k} out of range [1, {dim}]")
    if n > MAX_QUBITS_ED:
        raise ConfigurationError(f"exact diagonalization limited to {MAX_QUBITS_ED} qubits")
    symmetries = symmetries or []
    for sym in symmetries:
        if sym.n_qubits != n:
            raise ConfigurationError("symmetry size mismatch")
        if not check_commutes(obs, sym):
            raise ValidationError("supplied symmetry does not commute with the observable")

    if n <= DENSE_LIMIT:
        vals, vecs = _solve_dense(obs, k)
        scale = max(1.0, np.abs(vals).max())
        groups = _group_by(vals, 1e-9 * scale)
        # keep whole degenerate groups up to and including the one containing k-1
        n_keep = next(g[-1] + 1 for g in groups if g[-1] >= k - 1)
        vals, vecs = vals[:n_keep], vecs[:, :n_keep]
    else:
        if not _commutes_with_sz(obs):
            raise ConfigurationError(
                f"dense diagonalization is limited to {DENSE_LIMIT} qubits and the "
                "sector solver needs an S_z-conserving observable")
        vals, vecs = _solve_sector_sweep(obs, k)
        scale = max(1.0, np.abs(vals).max())

    states = _label_pool(obs, vals, vecs, symmetries, scale)
    states = states[:k]
    for i, st in enumerate(states):
        st.index = i + 1
    _attach_labels(states)
    return states


def _solve_sector_sweep(obs: Observable, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Merge fixed-S_z sector solves, expanding |s_z| until the k lowest are safe."""
    n = obs.n_qubits
    buffer = k + 12
    half = n / 2.0
    pool_vals, pool_vecs = [], []
    kth = np.inf
    for dev in range(n + 1):                       # dev = |n_ones - n/2| rings
        ring = sorted({int(np.floor(half - dev)), int(np.ceil(half + dev))})
        ring = [m for m in ring if 0 <= m <= n]
        ring_min = np.inf
        for n_ones in ring:
            vals, vecs = _solve_sector(obs, n_ones, buffer)
            pool_vals.append(vals)
            pool_vecs.append(vecs)
            ring_min = min(ring_min, vals[0])
        allv = np.concatenate(pool_vals)
        if allv.shape[0] >= k:
            kth = np.sort(allv)[k - 1]
        if dev >= 1 and ring_min > kth + 1e-9:
            break
    vals = np.concatenate(pool_vals)
    vecs = np.concatenate(pool_vecs, axis=1)
    order = np.argsort(vals, kind="stable")
    keep = order[:min(len(order), k + 8)]
    return vals[keep], vecs[:, keep]


def _label_pool(obs: Observable, vals: np.ndarray, vecs: np.ndarray,
                symmetries: list[Observable], scale: float) -> list[LabeledEigenstate]:
    """Resolve degeneracies against each symmetry in turn, then sort and wrap."""
    n = obs.n_qubits
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    records = []
    for grp in _group_by(vals, 1e-9 * scale):
        blocks = [(vecs[:, grp], {})]
        for sym in symmetries:
            new_blocks = []
            for block, qn in blocks:
                if block.shape[1] == 1:
                    v, lam = block, np.array(
                        [expectation(StateVector(n, block[:, 0]), sym)])
                else:
                    v, lam = _refine_with_symmetry(block, sym)
                for sub in _group_by(lam, 1e-6):
                    key, value = _quantum_number(sym.tag, float(np.mean(lam[sub])))
                    sub_qn = dict(qn)
                    if key is not None:
                        sub_qn[key] = value
                    new_blocks.append((v[:, sub], sub_qn))
            blocks = new_blocks
        energy = float(np.mean(vals[grp]))
        for block, qn in blocks:
            for j in range(block.shape[1]):
                records.append((energy, qn, block[:, j]))
    records.sort(key=lambda r: (r[0], r[1].get("s", 0.0), r[1].get("s_z", 0.0)))
    states = []
    for pos, (energy, qn, vec) in enumerate(records):
        states.append(LabeledEigenstate(
            index=pos + 1, energy=energy, vector=StateVector(n, vec),
            s=qn.get("s"), s_z=qn.get("s_z"), flip_parity=qn.get("flip_parity")))
    return states
