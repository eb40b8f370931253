"""Bell's hidden-variable model for a qubit and the BCHSH functional.

Hidden variables are pairs ``(m, n)`` of unit vectors.  A pure state with
Bloch vector ``k`` is the distribution ``delta(n - k)`` times the uniform
measure in ``m``; the observable ``a0 I + a . sigma`` is the function that
returns ``a0 + |a|`` when ``(m + n) . a > 0`` and ``a0 - |a|`` otherwise.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .operator_core import (
    PAULI_I,
    PAULIS,
    BlochVector,
    DensityState,
    ValidationError,
    as_state,
    bloch_state,
    expectation,
    pauli_observable,
)

UNIT_TOL = 1e-10
TSIRELSON = 2 * np.sqrt(2)


@dataclass(frozen=True)
class HVMObservable:
    a0: float
    a: BlochVector

    def __init__(self, a0: float, a: Sequence[float]):
        object.__setattr__(self, "a0", float(a0))
        object.__setattr__(self, "a", BlochVector(*(float(c) for c in a)))

    @property
    def outcomes(self) -> tuple[float, float]:
        """(upper, lower) values, the eigenvalues ``a0 +- |a|``."""
        r = self.a.norm
        return self.a0 + r, self.a0 - r

    def __add__(self, other: "HVMObservable") -> "HVMObservable":
        return HVMObservable(self.a0 + other.a0, np.add(self.a, other.a))

    def values(self, m: np.ndarray, n: np.ndarray) -> np.ndarray:
        """Evaluate on hidden-variable points; ``m``, ``n`` have shape (..., 3)."""
        hi, lo = self.outcomes
        return np.where((m + n) @ np.asarray(self.a) > 0, hi, lo)

    def operator(self):
        return pauli_observable(self.a0, self.a)


class HVMPoint(NamedTuple):
    m: np.ndarray
    n: np.ndarray


def _unit(k: Sequence[float], name: str = "k") -> np.ndarray:
    v = np.asarray(k, dtype=float)
    if v.shape != (3,):
        raise ValidationError(f"{name} must be a 3-vector")
    if abs(np.linalg.norm(v) - 1) > UNIT_TOL:
        raise ValidationError(f"{name} must be a unit vector (|{name}| = {np.linalg.norm(v):.12g})")
    return v


def sample_sphere(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform points on S^2 from normalized Gaussians."""
    g = rng.normal(size=(size, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_hidden(k: Sequence[float], rng: np.random.Generator, size: int) -> HVMPoint:
    """Draw from the state distribution: ``n = k`` exactly, ``m`` uniform."""
    k = _unit(k)
    return HVMPoint(sample_sphere(rng, size), np.broadcast_to(k, (size, 3)))


def hvm_sample(obs: HVMObservable, k: Sequence[float], seed: int) -> float:
    m, n = sample_hidden(k, np.random.default_rng(seed), 1)
    return float(obs.values(m, n)[0])


def hvm_outcome_probability(obs: HVMObservable, k: Sequence[float]) -> float:
    """Probability of the upper outcome: ``(1 + k . a_hat) / 2``.

    ``m . a_hat`` is uniform on ``[-1, 1]`` for ``m`` uniform on the sphere.
    """
    k = _unit(k)
    r = obs.a.norm
    if r == 0:
        return 0.0
    return float((1 + k @ np.asarray(obs.a) / r) / 2)


class HVMMean(NamedTuple):
    mc_mean: float
    analytic_mean: float
    quantum_mean: float
    mc_sigma: float
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return dict(self._asdict())


def hvm_mean(obs: HVMObservable, k: Sequence[float], n_samples: int, seed: int) -> HVMMean:
    """Monte Carlo, closed-form and trace-formula means of ``obs`` in state ``k``.

    ``mc_sigma = |a| / sqrt(n_samples)`` bounds the Monte Carlo standard error.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    k = _unit(k)
    m, n = sample_hidden(k, np.random.default_rng(seed), n_samples)
    mc = float(np.mean(obs.values(m, n)))
    hi, lo = obs.outcomes
    p = hvm_outcome_probability(obs, k)
    analytic = lo + (hi - lo) * p
    quantum = expectation(bloch_state(k), obs.operator())
    return HVMMean(mc, float(analytic), quantum, float(obs.a.norm / np.sqrt(n_samples)), n_samples, seed)


def hvm_additivity_defect(
    obs_a: HVMObservable, obs_b: HVMObservable, k: Sequence[float], n_samples: int, seed: int
) -> float:
    """Mean-square of ``F_A + F_B - F_{A+B}`` under the state ``k``.

    Zero exactly when the two vectors are parallel; the observable map of
    the model is not additive otherwise.
    """
    m, n = sample_hidden(k, np.random.default_rng(seed), n_samples)
    d = obs_a.values(m, n) + obs_b.values(m, n) - (obs_a + obs_b).values(m, n)
    return float(np.mean(d * d))


@dataclass(frozen=True)
class BCHSHSetting:
    a1: BlochVector
    a2: BlochVector
    b1: BlochVector
    b2: BlochVector

    def __init__(self, a1, a2, b1, b2):
        for name, v in (("a1", a1), ("a2", a2), ("b1", b1), ("b2", b2)):
            object.__setattr__(self, name, BlochVector(*_unit(v, name)))

    def correlation_operator(self) -> np.ndarray:
        """``A1 B1 + A1 B2 + A2 B1 - A2 B2`` on C^2 (x) C^2."""
        a1, a2, b1, b2 = (_spin(v) for v in (self.a1, self.a2, self.b1, self.b2))
        return np.kron(a1, b1) + np.kron(a1, b2) + np.kron(a2, b1) - np.kron(a2, b2)


def _spin(v) -> np.ndarray:
    return sum(c * p for c, p in zip(v, PAULIS))


_R2 = 1 / np.sqrt(2)
TSIRELSON_SETTING = BCHSHSetting((0, 0, 1), (1, 0, 0), (-_R2, 0, -_R2), (_R2, 0, -_R2))

SINGLET = DensityState.pure(np.array([0, 1, -1, 0]) / np.sqrt(2))


def bchsh_value(rho, setting: BCHSHSetting) -> float:
    rho = as_state(rho)
    if rho.dim != 4:
        raise ValidationError(f"BCHSH needs a two-qubit state (dim 4), got dim {rho.dim}")
    value = np.sum(rho.entries * setting.correlation_operator().T)
    return float(value.real)


def deterministic_bchsh_max() -> int:
    """Largest ``|A1 B1 + A1 B2 + A2 B1 - A2 B2|`` over all +-1 assignments."""
    return max(
        abs(a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2)
        for a1, a2, b1, b2 in itertools.product((1, -1), repeat=4)
    )


def _random_ball(rng: np.random.Generator, size: int) -> np.ndarray:
    return sample_sphere(rng, size) * rng.uniform(size=(size, 1)) ** (1 / 3)


def _qubit_states(r: np.ndarray) -> np.ndarray:
    return (PAULI_I + np.einsum("...i,ijk->...jk", r, np.asarray(PAULIS))) / 2


class ScanResult(NamedTuple):
    max_abs: float
    values: np.ndarray
    n_trials: int
    seed: int


def _separable_chunk(rng: np.random.Generator, size: int, terms: int) -> np.ndarray:
    weights = rng.dirichlet(np.ones(terms), size=size)
    rho_a = _qubit_states(_random_ball(rng, size * terms)).reshape(size, terms, 2, 2)
    rho_b = _qubit_states(_random_ball(rng, size * terms)).reshape(size, terms, 2, 2)
    rho = np.einsum("tk,tkac,tkbd->tabcd", weights, rho_a, rho_b).reshape(size, 4, 4)
    dirs = sample_sphere(rng, 4 * size).reshape(size, 4, 3)
    spins = np.einsum("tsi,ijk->tsjk", dirs, np.asarray(PAULIS))
    a1, a2, b1, b2 = (spins[:, i] for i in range(4))

    def kron(x, y):
        return np.einsum("tac,tbd->tabcd", x, y).reshape(size, 4, 4)

    w = kron(a1, b1) + kron(a1, b2) + kron(a2, b1) - kron(a2, b2)
    return np.einsum("tij,tji->t", rho, w).real


def separable_bound_scan(n_trials: int, seed: int, terms: int = 4, chunk: int = 50_000) -> ScanResult:
    """Largest ``|F|`` over random separable states and random unit settings.

    Each trial mixes ``terms`` product states with Dirichlet(1, ..., 1)
    weights and Bloch-ball factors, draws four uniform unit settings, and
    evaluates the trace of the correlation operator on the 4x4 density
    matrix.  Trials are drawn in fixed-size chunks from one generator.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    parts = [_separable_chunk(rng, min(chunk, n_trials - i), terms) for i in range(0, n_trials, chunk)]
    values = np.concatenate(parts)
    return ScanResult(float(np.max(np.abs(values))), values, n_trials, seed)
