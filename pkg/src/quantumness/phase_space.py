"""Single-mode oscillator phase space: coherent vectors, Q-functions, P-symbols.

Measure convention: the identity resolves as ``(1/pi) int |a><a| d^2a`` with
``d^2a = dRe dIm``.  A P-symbol ``F`` carries that ``1/pi`` itself, so an
observable is ``A = int F(a) |a><a| d^2a`` and the pairing with a state is
``Tr(rho A) = int Q_rho(a) F(a) d^2a`` where ``Q_rho(a) = <a|rho|a>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .operator_core import (
    DensityState,
    HermitianOperator,
    ValidationError,
    as_state,
    eig_hermitian,
)

DEFAULT_CUTOFF = 40
DEFAULT_SPACING = 0.05
PAIRING_TOL = 1e-3
TAIL_LIMIT = 1e-8
_CHUNK = 20000


@dataclass(frozen=True)
class FockSpace1M:
    """Basis ``|0>, ..., |cutoff>``."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValidationError("cutoff must be >= 1")

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.dim)), k=1).astype(complex)

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.dim)).astype(complex)


def coherent_coefficients(alpha, cutoff: int) -> np.ndarray:
    """``exp(-|a|^2/2) a^n / sqrt(n!)`` for ``n = 0..cutoff``; ``alpha`` may be an array.

    Output has shape ``alpha.shape + (cutoff + 1,)``.
    """
    alpha = np.asarray(alpha, dtype=complex)
    out = np.empty(alpha.shape + (cutoff + 1,), dtype=complex)
    out[..., 0] = np.exp(-np.abs(alpha) ** 2 / 2)
    for n in range(1, cutoff + 1):
        out[..., n] = out[..., n - 1] * alpha / math.sqrt(n)
    return out


def poisson_tail(mean: float, cutoff: int) -> float:
    """``P[X > cutoff]`` for ``X ~ Poisson(mean)``."""
    if mean <= 0:
        return 0.0
    return float(stats.poisson.sf(cutoff, mean))


@dataclass(frozen=True)
class CoherentVector:
    alpha: complex
    coefficients: np.ndarray
    tail_bound: float

    @classmethod
    def build(cls, alpha: complex, cutoff: int) -> "CoherentVector":
        return cls(complex(alpha), coherent_coefficients(alpha, cutoff), poisson_tail(abs(alpha) ** 2, cutoff))


def coherent_state(beta: complex, cutoff: int = DEFAULT_CUTOFF) -> DensityState:
    """Truncated coherent state ``|beta>``, renormalized on the cutoff space."""
    c = coherent_coefficients(beta, cutoff)
    return DensityState.pure(c)


def vacuum_state(cutoff: int = DEFAULT_CUTOFF) -> DensityState:
    return number_state(0, cutoff)


def number_state(n: int, cutoff: int = DEFAULT_CUTOFF) -> DensityState:
    if not 0 <= n <= cutoff:
        raise ValidationError(f"number state |{n}> is outside the cutoff {cutoff}")
    v = np.zeros(cutoff + 1)
    v[n] = 1
    return DensityState.pure(v)


def thermal_state(mean_photons: float, cutoff: int = DEFAULT_CUTOFF) -> DensityState:
    """Geometric photon distribution restricted to ``0..cutoff`` and renormalized."""
    x = mean_photons / (1 + mean_photons)
    p = x ** np.arange(cutoff + 1)
    return DensityState(np.diag(p / p.sum()))


def state_tail(rho, fraction: float = 0.75) -> float:
    """Population above ``fraction * cutoff``, a proxy for truncation error."""
    d = np.real(np.diag(as_state(rho).entries))
    start = int(math.floor(fraction * (len(d) - 1))) + 1
    return float(max(d[start:].sum(), 0.0))


def _q_values(rho: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    cutoff = rho.shape[0] - 1
    flat = alpha.ravel()
    out = np.empty(flat.shape, dtype=float)
    # fixed chunk order keeps sums reproducible
    for i in range(0, flat.size, _CHUNK):
        c = coherent_coefficients(flat[i : i + _CHUNK], cutoff)
        out[i : i + _CHUNK] = np.sum((c.conj() @ rho) * c, axis=1).real
    return out.reshape(alpha.shape)


def q_function(rho, alpha: complex) -> float:
    """Husimi ``Q(alpha) = <alpha|rho|alpha>`` on the truncated space.

    Restricted to ``|alpha|^2 <= cutoff / 4`` where the truncated coherent
    vector is accurate.
    """
    rho = as_state(rho)
    cutoff = rho.dim - 1
    if abs(alpha) ** 2 > cutoff / 4:
        need = math.ceil(4 * abs(alpha) ** 2)
        raise ValidationError(f"|alpha|^2 = {abs(alpha) ** 2:.4g} needs cutoff >= {need} (have {cutoff})")
    return float(_q_values(rho.entries, np.asarray([alpha]))[0])


@dataclass(frozen=True)
class PSymbol:
    """Phase-space function ``F`` with ``A = int F(a) |a><a| d^2a`` (1/pi included)."""

    name: str
    function: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    operator: Callable[[int], np.ndarray] = field(repr=False)
    note: str = ""

    def __call__(self, alpha):
        return self.function(np.asarray(alpha, dtype=complex))

    def observable(self, cutoff: int) -> HermitianOperator:
        return HermitianOperator(self.operator(cutoff))


def _n_op(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff + 1, dtype=float)).astype(complex)


IDENTITY_SYMBOL = PSymbol(
    "identity",
    lambda a: np.full(a.shape, 1 / np.pi),
    lambda m: np.eye(m + 1, dtype=complex),
    "resolution of the identity",
)
# a^dag a = a a^dag - 1 (anti-normal order)
NUMBER_SYMBOL = PSymbol(
    "number",
    lambda a: (np.abs(a) ** 2 - 1) / np.pi,
    _n_op,
    "photon number a^dag a",
)
# (a^dag a)^2 = a^2 a^dag^2 - 3 a a^dag + 1 (anti-normal order)
NUMBER_SQUARED_SYMBOL = PSymbol(
    "number_squared",
    lambda a: (np.abs(a) ** 4 - 3 * np.abs(a) ** 2 + 1) / np.pi,
    lambda m: _n_op(m) @ _n_op(m),
    "squared photon number (a^dag a)^2",
)

SYMBOLS = {s.name: s for s in (IDENTITY_SYMBOL, NUMBER_SYMBOL, NUMBER_SQUARED_SYMBOL)}


def p_symbol(name: str) -> PSymbol:
    """Look up a bounded polynomial symbol; singular symbols are not supported."""
    try:
        return SYMBOLS[name]
    except KeyError:
        raise ValidationError(
            f"no P-symbol {name!r}; only bounded polynomial symbols are available ({', '.join(SYMBOLS)})"
        ) from None


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform Cartesian grid on ``[-R, R]^2``; ``R = 2 + 2 sqrt(cutoff)`` by default."""

    radius: Optional[float] = None
    spacing: float = DEFAULT_SPACING

    def resolve_radius(self, cutoff: int) -> float:
        return self.radius if self.radius is not None else 2 + 2 * math.sqrt(cutoff)

    def points(self, cutoff: int, spacing: Optional[float] = None):
        h = spacing or self.spacing
        r = self.resolve_radius(cutoff)
        n = int(math.floor(r / h))
        axis = h * np.arange(-n, n + 1)
        re, im = np.meshgrid(axis, axis, indexing="ij")
        return re + 1j * im, h


def _integrate(values: np.ndarray, h: float) -> float:
    return float(np.sum(values) * h * h)


def q_normalization(rho, grid: QuadratureGrid = QuadratureGrid()) -> float:
    """``(1/pi) int Q d^2a``; equals 1 for every normalized state."""
    rho = as_state(rho)
    alpha, h = grid.points(rho.dim - 1)
    return _integrate(_q_values(rho.entries, alpha), h) / np.pi


@dataclass(frozen=True)
class PairingReport:
    integral: float
    trace: float
    discrepancy: float
    quadrature_error: float
    tail_bound: float
    cutoff: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pairing_check(
    rho,
    symbol: PSymbol,
    grid: QuadratureGrid = QuadratureGrid(),
    tol: float = PAIRING_TOL,
    tail_bound: Optional[float] = None,
) -> PairingReport:
    """Compare ``int Q_rho F d^2a`` on the grid with ``Tr(rho A)``.

    The quadrature error is estimated by repeating the sum at twice the
    spacing.  ``tail_bound`` defaults to :func:`state_tail`.
    """
    rho = as_state(rho)
    cutoff = rho.dim - 1
    tail = state_tail(rho) if tail_bound is None else tail_bound
    if tail > TAIL_LIMIT:
        raise ValidationError(f"state tail {tail:.3e} exceeds {TAIL_LIMIT:g}; raise the cutoff")
    alpha, h = grid.points(cutoff)
    integrand = _q_values(rho.entries, alpha) * symbol(alpha)
    fine = _integrate(integrand, h)
    coarse = _integrate(integrand[::2, ::2], 2 * h)
    err = abs(fine - coarse)
    if err > tol:
        raise ValidationError(f"grid too coarse: estimated quadrature error {err:.3e} > {tol:g}")
    trace = float(np.sum(rho.entries * symbol.observable(cutoff).entries.T).real)
    return PairingReport(fine, trace, abs(fine - trace), err, tail, cutoff)


@dataclass(frozen=True)
class AsymmetryReport:
    q_sup: float
    f_min: float
    f_max: float
    f_variance: float
    f_roughness: float
    spectrum_head: tuple[float, ...]
    f_values_on_spectrum: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def asymmetry_report(rho, symbol: PSymbol, grid: QuadratureGrid = QuadratureGrid(), head: int = 8) -> AsymmetryReport:
    """Contrast the bounded, smooth Q of the state with the symbol of the observable.

    ``f_roughness`` is the largest finite-difference gradient of ``F`` on the
    grid.  ``f_values_on_spectrum`` is the fraction of grid values of ``F``
    that coincide (within 1e-6) with an eigenvalue of the observable.
    """
    rho = as_state(rho)
    cutoff = rho.dim - 1
    alpha, h = grid.points(cutoff)
    q = _q_values(rho.entries, alpha)
    f = np.broadcast_to(symbol(alpha), alpha.shape)
    grad = np.hypot(*np.gradient(f, h))
    spec = np.asarray(eig_hermitian(symbol.observable(cutoff)).spectrum.eigenvalues)
    flat = f.ravel()
    idx = np.clip(np.searchsorted(spec, flat), 1, max(len(spec) - 1, 1))
    lo = spec[np.minimum(idx - 1, len(spec) - 1)]
    hi = spec[np.minimum(idx, len(spec) - 1)]
    near = np.minimum(np.abs(flat - lo), np.abs(flat - hi)) <= 1e-6
    return AsymmetryReport(
        q_sup=float(q.max()),
        f_min=float(f.min()),
        f_max=float(f.max()),
        f_variance=float(f.var()),
        f_roughness=float(grad.max()),
        spectrum_head=tuple(float(x) for x in spec[:head]),
        f_values_on_spectrum=float(near.mean()),
    )
