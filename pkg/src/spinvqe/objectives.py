"""Differentiable cost functions: plain energy, weighted subspace search,
symmetry penalties, and overlap deflation.

Every cost here is a smooth function of expectation values, so its gradient
folds into a single adjoint sweep per target: the reverse pass runs with
lambda = sum_j (dC/d<O_j>) O_j|psi⟩ instead of one sweep per observable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .circuits import Circuit, InitSpec, adjoint_accumulate, evaluate, initial_state
from .errors import ConfigurationError, ValidationError
from .operators import Observable, apply_observable, s_tot_sq, spin_flip_x
from .statevector import StateVector, apply_gate_inplace, init_basis, zero_state


class PenaltyKind(Enum):
    STOT_SQ_SQUARED = "stot_sq_squared"   # beta * <S_tot^2>^2, drives s -> 0
    STOT_SHIFTED = "stot_shifted"         # beta * <(S_tot^2 - 2)^2>, drives s -> 1
    FLIP_PARITY = "flip_parity"           # beta * (<flip> + 1)^2, drives parity -> -1
    DEFLATION = "deflation"               # sum_i beta_i |<E_i|psi>|^2

_DEFAULT_BETA = {PenaltyKind.STOT_SQ_SQUARED: 1000.0,
                 PenaltyKind.STOT_SHIFTED: 2.0,
                 PenaltyKind.FLIP_PARITY: 1.0,
                 PenaltyKind.DEFLATION: 50.0}


@dataclass(frozen=True)
class PenaltyTerm:
    kind: PenaltyKind
    beta: float | None = None
    reference_states: tuple[StateVector, ...] = ()   # DEFLATION only
    reference_betas: tuple[float, ...] | None = None  # per-state overrides

    def __post_init__(self):
        if self.beta is not None and self.beta <= 0:
            raise ConfigurationError("penalty beta must be positive")
        if self.kind is PenaltyKind.DEFLATION:
            if not self.reference_states:
                raise ConfigurationError("deflation needs reference states")
            for st in self.reference_states:
                if abs(st.norm() - 1.0) > 1e-8:
                    raise ValidationError("deflation reference state not normalized")
            if (self.reference_betas is not None
                    and len(self.reference_betas) != len(self.reference_states)):
                raise ConfigurationError("one beta per reference state")
        elif self.reference_states:
            raise ConfigurationError(f"{self.kind} takes no reference states")

    @property
    def beta_value(self) -> float:
        return self.beta if self.beta is not None else _DEFAULT_BETA[self.kind]


@dataclass(frozen=True)
class TargetSpec:
    """One subspace-search target: input state, weight, attached penalties.

    ``initial_state`` is a basis bitstring, a fixed-(s, s_z) preparation
    spec, an explicit StateVector, or None for the circuit's own prep.
    """

    initial_state: str | InitSpec | StateVector | None = None
    weight: float = 1.0
    penalties: tuple[PenaltyTerm, ...] = ()

    def __post_init__(self):
        if self.weight <= 0:
            raise ConfigurationError("target weight must be positive")


@lru_cache(maxsize=16)
def _stot_sq(n: int) -> Observable:
    return s_tot_sq(n)


@lru_cache(maxsize=16)
def _flip(n: int) -> Observable:
    return spin_flip_x(n)


def circuit_input_state(circuit: Circuit) -> StateVector:
    """Output of the circuit's own preparation subcircuit on |0...0⟩."""
    st = zero_state(circuit.n_qubits)
    empty = np.empty(0)
    for g in circuit.prep:
        apply_gate_inplace(st.amplitudes, circuit.n_qubits, g.action(empty))
    return st


def resolve_initial_state(n_qubits: int, spec) -> StateVector:
    """Bitstring, preparation spec, or explicit state -> StateVector."""
    if isinstance(spec, StateVector):
        if spec.n_qubits != n_qubits:
            raise ConfigurationError("initial state size mismatch")
        return spec
    if isinstance(spec, str):
        if len(spec) != n_qubits or not set(spec) <= {"0", "1"}:
            raise ConfigurationError(f"bad basis bitstring {spec!r}")
        return init_basis(n_qubits, [int(c) for c in spec])
    if isinstance(spec, InitSpec):
        return initial_state(n_qubits, spec)
    raise ConfigurationError(f"unrecognized initial-state spec {spec!r}")


def _penalty_contribution(term: PenaltyTerm, psi: StateVector):
    """(value, lambda-contribution, trace aux) for one evaluated state.

    The lambda contribution is dP/d<psi| as a ket, ready for the adjoint pass.
    """
    n = psi.n_qubits
    beta = term.beta_value
    if term.kind is PenaltyKind.STOT_SQ_SQUARED:
        op_psi = apply_observable(psi, _stot_sq(n)).amplitudes
        v = float(np.real(np.vdot(psi.amplitudes, op_psi)))
        return beta * v * v, (2.0 * beta * v) * op_psi, {"stot_sq": v}
    if term.kind is PenaltyKind.STOT_SHIFTED:
        shifted = apply_observable(psi, _stot_sq(n)).amplitudes - 2.0 * psi.amplitudes
        sq = apply_observable(StateVector(n, shifted), _stot_sq(n)).amplitudes \
            - 2.0 * shifted
        value = float(np.real(np.vdot(psi.amplitudes, sq)))
        return beta * value, beta * sq, {"stot_shifted": value}
    if term.kind is PenaltyKind.FLIP_PARITY:
        op_psi = apply_observable(psi, _flip(n)).amplitudes
        v = float(np.real(np.vdot(psi.amplitudes, op_psi)))
        return beta * (v + 1.0) ** 2, (2.0 * beta * (v + 1.0)) * op_psi, {"flip": v}
    if term.kind is PenaltyKind.DEFLATION:
        betas = term.reference_betas or (beta,) * len(term.reference_states)
        value = 0.0
        lam = np.zeros_like(psi.amplitudes)
        for b, ref in zip(betas, term.reference_states):
            ov = np.vdot(ref.amplitudes, psi.amplitudes)
            value += b * float(np.abs(ov) ** 2)
            lam += b * ov * ref.amplitudes
        return value, lam, {"deflation": value}
    raise ConfigurationError(f"unknown penalty kind {term.kind}")


def _check_targets(circuit: Circuit, targets) -> list[StateVector]:
    if not targets:
        raise ConfigurationError("need at least one target")
    weights = [t.weight for t in targets]
    if any(w1 <= w2 for w1, w2 in zip(weights, weights[1:])):
        raise ConfigurationError(f"weights must be strictly decreasing, got {weights}")
    inputs = [circuit_input_state(circuit) if t.initial_state is None
              else resolve_initial_state(circuit.n_qubits, t.initial_state)
              for t in targets]
    for i in range(len(inputs)):
        for j in range(i + 1, len(inputs)):
            ov = abs(np.vdot(inputs[i].amplitudes, inputs[j].amplitudes))
            if ov >= 1e-10:
                raise ValidationError(
                    f"initial states {i} and {j} overlap ({ov:.2e}); orthogonal "
                    "inputs are what makes the subspace outputs orthogonal")
    return inputs


def _ssvqe_eval(circuit: Circuit, theta, hamiltonian: Observable, targets, inputs):
    theta = np.asarray(theta, dtype=float)
    cost = 0.0
    grad = np.zeros(circuit.n_params)
    energies: list[float] = []
    penalty_maps: list[dict] = []
    states: list[StateVector] = []
    for spec, inp in zip(targets, inputs):
        psi = evaluate(circuit, theta, inp)
        h_psi = apply_observable(psi, hamiltonian).amplitudes
        energy = float(np.real(np.vdot(psi.amplitudes, h_psi)))
        lam = h_psi.copy()
        pmap = {}
        total_pen = 0.0
        for term in spec.penalties:
            value, contrib, aux = _penalty_contribution(term, psi)
            total_pen += value
            lam += contrib
            pmap[term.kind.value] = value
            pmap.update(aux)
        cost += spec.weight * (energy + total_pen)
        grad += spec.weight * adjoint_accumulate(circuit, theta, psi, lam)
        energies.append(energy)
        penalty_maps.append(pmap)
        states.append(psi)
    return cost, grad, energies, penalty_maps, states


def ssvqe_cost(circuit: Circuit, theta: np.ndarray, hamiltonian: Observable,
               targets: list[TargetSpec] | tuple[TargetSpec, ...]):
    """Weighted multi-target cost with penalties; one adjoint sweep per target.

    Returns (cost, grad, per_target_energies, per_target_penalties) where the
    penalty list holds {kind: value} maps in target order.
    """
    inputs = _check_targets(circuit, targets)
    cost, grad, energies, penalty_maps, _ = _ssvqe_eval(
        circuit, theta, hamiltonian, targets, inputs)
    return cost, grad, energies, penalty_maps


def penalty_value_and_grad(circuit: Circuit, theta: np.ndarray, term: PenaltyTerm,
                           input_state: StateVector | None = None):
    """Value and full parameter gradient of a single penalty term."""
    theta = np.asarray(theta, dtype=float)
    psi = evaluate(circuit, theta, input_state)
    value, lam, _ = _penalty_contribution(term, psi)
    grad = adjoint_accumulate(circuit, theta, psi, lam)
    return value, grad


def deflation_cost(circuit: Circuit, theta: np.ndarray, hamiltonian: Observable,
                   known_states: list[StateVector], betas,
                   input_state: StateVector | None = None):
    """<H> plus overlap penalties onto already-found eigenstates.

    Overlaps are computed exactly from the statevectors; a measurement
    circuit for them is out of scope.
    """
    known_states = [st if isinstance(st, StateVector)
                    else StateVector(circuit.n_qubits, np.asarray(st, complex))
                    for st in known_states]
    if np.isscalar(betas):
        betas = [float(betas)] * len(known_states)
    if len(betas) != len(known_states):
        raise ConfigurationError("one beta per known state")
    if known_states:
        term = PenaltyTerm(PenaltyKind.DEFLATION, None,
                           tuple(known_states), tuple(float(b) for b in betas))
        penalties = (term,)
    else:
        penalties = ()
    spec = TargetSpec(input_state, 1.0, penalties)
    cost, grad, _, _ = ssvqe_cost(circuit, theta, hamiltonian, [spec])
    return cost, grad


def make_objective(circuit: Circuit, hamiltonian: Observable,
                   targets: list[TargetSpec] | tuple[TargetSpec, ...],
                   fidelity_targets=None):
    """Optimizer-ready closure: theta -> (cost, grad, extras-for-trace).

    ``fidelity_targets``, when given, is one list of reference amplitude
    vectors per target; the trace then carries the summed squared overlap
    (projector fidelity) at every iterate, which threshold-crossing logic
    reads later without re-running the circuit.
    """
    targets = tuple(targets)
    inputs = _check_targets(circuit, targets)   # fail fast

    def objective(theta):
        cost, grad, energies, penalty_maps, states = _ssvqe_eval(
            circuit, theta, hamiltonian, targets, inputs)
        extras = {"per_target_energies": energies,
                  "per_target_penalties": penalty_maps}
        if fidelity_targets is not None:
            extras["per_target_fidelities"] = [
                sum(float(np.abs(np.vdot(ref, psi.amplitudes)) ** 2) for ref in refs)
                for psi, refs in zip(states, fidelity_targets)]
        return cost, grad, extras

    return objective
