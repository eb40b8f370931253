"""Single-system quantumness tests on matrix algebras.

Test A: the means add (``C = A + B``) but some outcome of ``C`` is not a sum
of outcomes of ``A`` and ``B``.  Test B: ``0 <= A <= B`` in mean value for
every state, yet some state has ``sigma(A^2) > sigma(B^2)``.  Both premises
quantify over all states; here they are decided algebraically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .operator_core import (
    DensityState,
    HermitianOperator,
    PremiseError,
    Spectrum,
    ValidationError,
    _check_same_dim,
    cluster_spectrum,
    as_hermitian,
    as_state,
    bloch_state,
    eig_hermitian,
    expectation,
    jacobi_eigh,
    loewner_geq,
    operator_to_json,
    MERGE_REL_TOL,
)

DEFAULT_TOL = 1e-6
PREMISE_TOL = 1e-10

# Named pair with 0 <= A <= B but A^2 not <= B^2.
AV_PAIR = (
    HermitianOperator([[1.0, 0.0], [0.0, 0.0]]),
    HermitianOperator([[1.5, 0.5], [0.5, 0.5]]),
)


@dataclass(frozen=True)
class QTestAReport:
    c_equals_sum: bool
    sum_residual: float
    sp_a: Spectrum
    sp_b: Spectrum
    sp_c: Spectrum
    sumset: tuple[float, ...]
    violation_distance: float
    quantum: bool

    @property
    def premise(self) -> str:
        return "holds" if self.c_equals_sum else "premise fails"

    def to_dict(self) -> dict:
        return {
            "test": "A",
            "premise": {"c_equals_sum": self.c_equals_sum, "residual": self.sum_residual, "status": self.premise},
            "margins": {"violation_distance": self.violation_distance},
            "spectra": {
                "A": self.sp_a.to_dict(),
                "B": self.sp_b.to_dict(),
                "C": self.sp_c.to_dict(),
                "sumset": list(self.sumset),
            },
            "quantum": self.quantum,
            "violating_state": None,
        }


@dataclass(frozen=True)
class QTestBReport:
    order_holds: bool
    order_margin: float
    square_margin: float
    violating_state: Optional[DensityState]
    violation_gap: Optional[float]
    tol: float

    @property
    def quantum(self) -> bool:
        return self.order_holds and self.violating_state is not None

    def to_dict(self) -> dict:
        state = None
        if self.violating_state is not None:
            state = operator_to_json(self.violating_state.entries)
        return {
            "test": "B",
            "premise": {"order_holds": self.order_holds, "order_margin": self.order_margin},
            "margins": {"order_margin": self.order_margin, "square_margin": self.square_margin},
            "spectra": None,
            "violating_state": state,
            "violation_gap": self.violation_gap,
            "quantum": self.quantum,
            "tol": self.tol,
        }


def sumset(sp_a: Spectrum, sp_b: Spectrum) -> np.ndarray:
    """Distinct values of ``lam + mu``; rounding-level duplicates are merged."""
    sums = np.add.outer(sp_a.eigenvalues, sp_b.eigenvalues).ravel()
    scale = float(np.max(np.abs(sums))) if sums.size else 0.0
    return np.asarray(cluster_spectrum(sums, scale).eigenvalues)


def qtest_a(a, b, c, tol: float = DEFAULT_TOL, premise_tol: float = PREMISE_TOL) -> QTestAReport:
    """Compare ``Sp(C)`` with the sum-set ``Sp(A) + Sp(B)``.

    ``violation_distance`` is the largest distance from an eigenvalue of
    ``C`` to the nearest sum-set element; distances within the spectrum merge
    tolerance count as zero.
    """
    a, b, c = as_hermitian(a), as_hermitian(b), as_hermitian(c)
    _check_same_dim(a, b, c)
    residual = float(np.linalg.norm(a.entries + b.entries - c.entries))
    sp_a, sp_b, sp_c = (eig_hermitian(x).spectrum for x in (a, b, c))
    sums = sumset(sp_a, sp_b)
    scale = max(1.0, *(abs(v) for v in sums), *(abs(v) for v in sp_c.eigenvalues))
    merge = MERGE_REL_TOL * scale
    dist = [float(np.min(np.abs(sums - lam))) for lam in sp_c.eigenvalues]
    violation = max(d if d > merge else 0.0 for d in dist)
    equal = residual <= premise_tol
    return QTestAReport(
        c_equals_sum=equal,
        sum_residual=residual,
        sp_a=sp_a,
        sp_b=sp_b,
        sp_c=sp_c,
        sumset=tuple(float(x) for x in sums),
        violation_distance=violation,
        quantum=equal and violation > tol,
    )


def qtest_b(a, b, tol: float = DEFAULT_TOL, premise_tol: float = PREMISE_TOL) -> QTestBReport:
    """Order premise ``0 <= A <= B`` and the second-moment comparison.

    When ``min eig(B^2 - A^2) < -tol`` the violating state is the pure state
    on the first minimal eigenvector returned by the solver.
    """
    a, b = as_hermitian(a), as_hermitian(b)
    _check_same_dim(a, b)
    a_min = float(jacobi_eigh(a.entries)[0][0])
    if a_min < -premise_tol:
        raise PremiseError(f"A is not positive (min eigenvalue {a_min:.3e})")
    order = loewner_geq(b, a, tol=premise_tol)
    diff = b.entries @ b.entries - a.entries @ a.entries
    values, vectors = jacobi_eigh((diff + diff.conj().T) / 2)
    square_margin = float(values[0])
    state = gap = None
    if square_margin < -tol:
        state = DensityState.pure(vectors[:, 0])
        gap = expectation(state, a.square()) - expectation(state, b.square())
    return QTestBReport(order.holds, order.margin, square_margin, state, gap, tol)


@dataclass(frozen=True)
class WitnessResult:
    a: HermitianOperator
    b: HermitianOperator
    square_margin: float
    evaluations: int
    diagonal: bool


def _pair_from_generators(g1: np.ndarray, g2: np.ndarray):
    a = g1.conj().T @ g1
    b = a + g2.conj().T @ g2
    scale = float(jacobi_eigh(a)[0][-1])
    if scale <= 1e-12:
        return None
    return a / scale, b / scale


def _square_margin(g1, g2) -> float:
    pair = _pair_from_generators(g1, g2)
    if pair is None:
        return 0.0
    a, b = pair
    d = b @ b - a @ a
    return float(jacobi_eigh((d + d.conj().T) / 2)[0][0])


def witness_search(
    dim: int,
    seed: int,
    iterations: int = 2000,
    diagonal: bool = False,
    restarts: Optional[int] = None,
) -> WitnessResult:
    """Search for ``0 <= A <= B`` with ``B^2 - A^2`` as negative as possible.

    Pairs are parametrized as ``A = G1^H G1`` and ``B = A + G2^H G2`` (so the
    premise holds by construction) and rescaled to ``||A|| = 1``.  The search
    does random restarts followed by a stochastic pattern search whose step
    halves from 0.5 down to 1e-4.  ``iterations`` counts objective
    evaluations.  With ``diagonal=True`` the generators are diagonal, so the
    pair commutes.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    if restarts is None:
        restarts = max(1, min(10, iterations // 200))
    per_restart = max(1, iterations // restarts)

    def draw(scale=1.0):
        g = rng.normal(size=(2, dim, dim)) + 1j * rng.normal(size=(2, dim, dim))
        if diagonal:
            g = g * np.eye(dim)
        return g * scale

    best_g, best_val = None, np.inf
    used = 0
    for r in range(restarts):
        budget = per_restart if r < restarts - 1 else iterations - used
        if budget <= 0:
            break
        g = draw()
        val = _square_margin(g[0], g[1])
        used += 1
        budget -= 1
        step, fails = 0.5, 0
        while budget > 0 and step >= 1e-4:
            trial = g + draw(step)
            tv = _square_margin(trial[0], trial[1])
            used += 1
            budget -= 1
            if tv < val:
                g, val, fails = trial, tv, 0
            else:
                fails += 1
                if fails >= 4 * dim:
                    step /= 2
                    fails = 0
        if val < best_val:
            best_g, best_val = g, val
    pair = _pair_from_generators(best_g[0], best_g[1])
    if pair is None:
        a = b = np.zeros((dim, dim))
    else:
        a, b = pair
    return WitnessResult(HermitianOperator(a, tol=1e-9), HermitianOperator(b, tol=1e-9), float(best_val), used, diagonal)


@dataclass(frozen=True)
class MinimalityReport:
    accessible_order_holds: bool
    worst_accessible_gap: float
    global_order_holds: bool
    global_margin: float

    @property
    def minimality_holds(self) -> bool:
        return not (self.accessible_order_holds and not self.global_order_holds)

    def to_dict(self) -> dict:
        return {
            "accessible_order_holds": self.accessible_order_holds,
            "worst_accessible_gap": self.worst_accessible_gap,
            "global_order_holds": self.global_order_holds,
            "global_margin": self.global_margin,
            "minimality_holds": self.minimality_holds,
        }


def minimality_check(accessible_states: Sequence, a, b, tol: float = PREMISE_TOL) -> MinimalityReport:
    """Does ``rho(A) <= rho(B)`` on the accessible states extend to ``A <= B``?

    ``worst_accessible_gap`` is ``min rho(B) - rho(A)`` over the accessible
    states.
    """
    states = [as_state(s) for s in accessible_states]
    if not states:
        raise ValidationError("accessible_states is empty")
    a, b = as_hermitian(a), as_hermitian(b)
    _check_same_dim(a, b, *states)
    a_min = float(jacobi_eigh(a.entries)[0][0])
    if a_min < -tol:
        raise PremiseError(f"A is not positive (min eigenvalue {a_min:.3e})")
    gap = min(expectation(s, b) - expectation(s, a) for s in states)
    order = loewner_geq(b, a, tol=tol)
    return MinimalityReport(gap >= -tol, gap, order.holds, order.margin)


def bloch_ball_grid(points_per_axis: int = 5) -> list[DensityState]:
    """Qubit states on a cubic grid clipped to the Bloch ball."""
    axis = np.linspace(-1, 1, points_per_axis)
    out = []
    for x in axis:
        for y in axis:
            for z in axis:
                if x * x + y * y + z * z <= 1 + 1e-12:
                    out.append(bloch_state((x, y, z), tol=1e-9))
    return out
