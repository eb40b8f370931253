"""Two-mode bosonic Fock space: second quantization and coherent light beams.

Mode 1 is horizontal and mode 2 vertical polarization.  The truncated space
holds every ``|n1, n2>`` with ``n1 + n2 <= total_cutoff``, ordered by total
photon number, so each number sector is a contiguous block.  Operators are
``scipy.sparse`` CSR matrices; the spaces reach several hundred photons.

Second-quantized observables ``sum_j alpha_j a^dag(phi_j) a(phi_j)`` conserve
photon number, so they are exact on every sector of the truncated space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize, sparse
from scipy.special import gammaln

from .operator_core import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BlochVector,
    HermitianOperator,
    PremiseError,
    ValidationError,
    as_hermitian,
    eig_hermitian,
    jacobi_eigh,
    loewner_geq,
)
from .phase_space import poisson_tail

DEFAULT_TOTAL_CUTOFF = 30
TAIL_LIMIT = 1e-8
MOMENT_TOL = 1e-8

# sigma_0..sigma_3 in the (H, V) mode basis; S3 is the H/V intensity difference
STOKES_BASIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class TwoModeFock:
    total_cutoff: int

    def __post_init__(self):
        if self.total_cutoff < 1:
            raise ValidationError("total_cutoff must be >= 1")

    @property
    def dim(self) -> int:
        m = self.total_cutoff
        return (m + 1) * (m + 2) // 2

    @cached_property
    def occupations(self) -> np.ndarray:
        """``(dim, 2)`` array of ``(n1, n2)``; sector ``n`` lists ``n1 = n, ..., 0``."""
        rows = [(n1, n - n1) for n in range(self.total_cutoff + 1) for n1 in range(n, -1, -1)]
        return np.array(rows, dtype=int)

    def sector(self, n: int) -> slice:
        """Indices of the ``n``-photon block."""
        if not 0 <= n <= self.total_cutoff:
            raise ValidationError(f"sector {n} outside 0..{self.total_cutoff}")
        start = n * (n + 1) // 2
        return slice(start, start + n + 1)

    def sectors_up_to(self, n: int) -> slice:
        return slice(0, (n + 1) * (n + 2) // 2)

    def index(self, n1: int, n2: int) -> int:
        n = n1 + n2
        return n * (n + 1) // 2 + (n - n1)

    @cached_property
    def _ladders(self):
        occ = self.occupations
        dim = self.dim
        ops = []
        for mode in (0, 1):
            src = np.flatnonzero(occ[:, mode] > 0)
            lowered = occ[src].copy()
            lowered[:, mode] -= 1
            dst = np.array([self.index(a, b) for a, b in lowered], dtype=int)
            data = np.sqrt(occ[src, mode]).astype(complex)
            ops.append(sparse.csr_array((data, (dst, src)), shape=(dim, dim)))
        return tuple(ops)

    def annihilation(self, phi: Sequence[complex]) -> sparse.csr_array:
        """``a(phi) = conj(phi_1) a_1 + conj(phi_2) a_2`` for a mode ``phi`` in C^2."""
        phi = np.asarray(phi, dtype=complex)
        a1, a2 = self._ladders
        return (np.conj(phi[0]) * a1 + np.conj(phi[1]) * a2).tocsr()

    def creation(self, phi: Sequence[complex]) -> sparse.csr_array:
        return self.annihilation(phi).conj().T.tocsr()

    def number(self) -> sparse.csr_array:
        return sparse.diags_array(self.occupations.sum(axis=1).astype(complex)).tocsr()

    def block(self, op, n: int) -> np.ndarray:
        s = self.sector(n)
        return op[s, s].toarray()


def _qubit_operator(a) -> HermitianOperator:
    a = as_hermitian(a)
    if a.dim != 2:
        raise ValidationError(f"single-photon observable must be 2x2, got dim {a.dim}")
    return a


def second_quantize(a, space: TwoModeFock) -> sparse.csr_array:
    """``Gamma(A) = sum_j alpha_j a^dag(phi_j) a(phi_j)`` over the eigenmodes of ``A``."""
    a = _qubit_operator(a)
    eig = eig_hermitian(a)
    out = sparse.csr_array((space.dim, space.dim), dtype=complex)
    for alpha, phi in zip(eig.values, eig.vectors.T):
        out = out + alpha * (space.creation(phi) @ space.annihilation(phi))
    return out.tocsr()


def normal_ordered_square(a, space: TwoModeFock) -> sparse.csr_array:
    """``sum_ij alpha_i alpha_j a^dag(phi_i) a^dag(phi_j) a(phi_i) a(phi_j)``."""
    eig = eig_hermitian(_qubit_operator(a))
    modes = list(zip(eig.values, eig.vectors.T))
    out = sparse.csr_array((space.dim, space.dim), dtype=complex)
    for ai, pi in modes:
        for aj, pj in modes:
            term = space.creation(pi) @ space.creation(pj) @ space.annihilation(pi) @ space.annihilation(pj)
            out = out + ai * aj * term
    return out.tocsr()


class BeamAmplitude(NamedTuple):
    """Single-photon wave function scaled so that ``<xi|xi> = N``."""

    xi1: complex
    xi2: complex

    @classmethod
    def from_direction(cls, u: Sequence[complex], mean_photons: float) -> "BeamAmplitude":
        u = np.asarray(u, dtype=complex)
        u = u / np.linalg.norm(u)
        r = math.sqrt(mean_photons)
        return cls(complex(r * u[0]), complex(r * u[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2], dtype=complex)

    @property
    def N(self) -> float:
        return abs(self.xi1) ** 2 + abs(self.xi2) ** 2


@dataclass(frozen=True)
class BeamState:
    vector: np.ndarray
    xi: BeamAmplitude
    tail_bound: float
    space: TwoModeFock

    def expect(self, op) -> float:
        return float(np.vdot(self.vector, op @ self.vector).real)

    def second_moment(self, op) -> float:
        """``<Phi, op^2 Phi>`` for Hermitian ``op``."""
        w = op @ self.vector
        return float(np.vdot(w, w).real)


def check_beam_cutoff(N: float, total_cutoff: int):
    """Tail bound of the truncated coherent beam; raises when the cutoff is too small."""
    tail = poisson_tail(N, total_cutoff)
    if N > total_cutoff / 4 * (1 + 1e-12) or tail > TAIL_LIMIT:
        need = max(math.ceil(4 * N * (1 - 1e-12)), total_cutoff + 1)
        while poisson_tail(N, need) > TAIL_LIMIT:
            need += 1
        raise ValidationError(
            f"total cutoff {total_cutoff} too small for N = {N:.6g} (tail {tail:.2e}); use >= {need}"
        )
    return tail


def coherent_beam(xi: BeamAmplitude, space: TwoModeFock) -> BeamState:
    """``Phi(xi)``: product of coherent states ``|xi1> (x) |xi2>``, truncated and renormalized."""
    xi = BeamAmplitude(*xi)
    tail = check_beam_cutoff(xi.N, space.total_cutoff)
    occ = space.occupations
    log_mag = -0.5 * (gammaln(occ[:, 0] + 1) + gammaln(occ[:, 1] + 1))
    phase = np.zeros(space.dim)
    alive = np.ones(space.dim, dtype=bool)
    for k, z in enumerate((xi.xi1, xi.xi2)):
        if z == 0:
            alive &= occ[:, k] == 0
        else:
            log_mag = log_mag + occ[:, k] * math.log(abs(z))
            phase = phase + occ[:, k] * np.angle(z)
    log_mag = log_mag - xi.N / 2
    vec = np.where(alive, np.exp(log_mag) * np.exp(1j * phase), 0)
    vec = vec / np.linalg.norm(vec)
    return BeamState(vec, xi, tail, space)


class MomentReport(NamedTuple):
    mean: float
    second_moment: float
    analytic_mean: float
    analytic_second: float
    tail_bound: float
    total_cutoff: int

    def within(self, tol: float = MOMENT_TOL) -> bool:
        limit = tol + self.tail_bound
        return abs(self.mean - self.analytic_mean) <= limit and abs(self.second_moment - self.analytic_second) <= limit

    def to_dict(self) -> dict:
        return dict(self._asdict())


def analytic_moments(a, xi: BeamAmplitude) -> tuple[float, float]:
    """``<xi, A xi>`` and ``<xi, A xi>^2 + <xi, A^2 xi>``."""
    m = _qubit_operator(a).entries
    v = BeamAmplitude(*xi).vector
    first = float(np.vdot(v, m @ v).real)
    return first, first * first + float(np.vdot(v, m @ m @ v).real)


def moment_check(a, xi: BeamAmplitude, space: Optional[TwoModeFock] = None) -> MomentReport:
    space = space or TwoModeFock(DEFAULT_TOTAL_CUTOFF)
    gamma = second_quantize(a, space)
    state = coherent_beam(xi, space)
    mean, second = analytic_moments(a, xi)
    return MomentReport(state.expect(gamma), state.second_moment(gamma), mean, second, state.tail_bound, space.total_cutoff)


class DecompositionReport(NamedTuple):
    safe_residual: float
    low_sector_residual: float
    sector_gaps: tuple[float, ...]


def product_decomposition_check(a, space: TwoModeFock) -> DecompositionReport:
    """Residual of ``Gamma(A)^2 = normal-ordered part + Gamma(A^2)``.

    ``safe_residual`` is the max entry of the residual on sectors up to
    ``total_cutoff - 2``; ``low_sector_residual`` is the max entry of
    ``Gamma(A)^2 - Gamma(A^2)`` on the 0- and 1-photon sectors.
    ``sector_gaps[n]`` is the max entry of that difference on sector ``n``.
    """
    if space.total_cutoff < 2:
        raise ValidationError("decomposition check needs total_cutoff >= 2")
    a = _qubit_operator(a)
    g = second_quantize(a, space)
    g2 = (g @ g).tocsr()
    g_sq = second_quantize(a.square(), space)
    resid = (g2 - normal_ordered_square(a, space) - g_sq).tocsr()
    safe = space.sectors_up_to(space.total_cutoff - 2)
    low = space.sectors_up_to(1)
    diff = (g2 - g_sq).tocsr()

    def max_abs(m):
        return float(np.max(np.abs(m.toarray()))) if m.nnz else 0.0

    gaps = tuple(max_abs(diff[space.sector(n), space.sector(n)]) for n in range(space.total_cutoff + 1))
    return DecompositionReport(max_abs(resid[safe, safe]), max_abs(diff[low, low]), gaps)


class GammaOrderReport(NamedTuple):
    order_margin: float
    square_margin: float
    sector_order_margins: tuple[float, ...]
    sector_square_margins: tuple[float, ...]

    @property
    def order_preserved(self) -> bool:
        return self.order_margin >= -1e-9

    def to_dict(self) -> dict:
        out = dict(self._asdict())
        out["order_preserved"] = self.order_preserved
        return out


def gamma_order_check(a, b, space: TwoModeFock, tol: float = 1e-10) -> GammaOrderReport:
    """Order of ``Gamma(A)``, ``Gamma(B)`` and of ``Gamma(A^2)``, ``Gamma(B^2)``, per sector.

    ``order_margin`` is the smallest eigenvalue of ``Gamma(B) - Gamma(A)``
    over all sectors; ``square_margin`` is the smallest eigenvalue of
    ``Gamma(B^2) - Gamma(A^2)`` on the 1-photon sector, where it equals
    ``min eig(B^2 - A^2)``.  On the ``n``-photon sector the square margin
    is ``n`` times that.
    """
    a, b = _qubit_operator(a), _qubit_operator(b)
    if jacobi_eigh(a.entries)[0][0] < -tol or not loewner_geq(b, a, tol).holds:
        raise PremiseError("gamma_order_check needs 0 <= A <= B")
    d1 = second_quantize(b, space) - second_quantize(a, space)
    d2 = second_quantize(b.square(), space) - second_quantize(a.square(), space)
    order = []
    squares = []
    for n in range(space.total_cutoff + 1):
        order.append(float(jacobi_eigh(space.block(d1, n))[0][0]))
        squares.append(float(jacobi_eigh(space.block(d2, n))[0][0]))
    return GammaOrderReport(min(order), squares[1], tuple(order), tuple(squares))


class CrossoverRow(NamedTuple):
    N: float
    margin: float
    term1: float
    term2: float
    analytic_margin: float
    tail_bound: float


@dataclass(frozen=True)
class CrossoverTable:
    rows: tuple[CrossoverRow, ...]
    n_star: float
    bracketed_root: Optional[float]
    slope_term1: float
    slope_term2: float
    total_cutoff: int

    def to_dict(self) -> dict:
        return {
            "rows": [r._asdict() for r in self.rows],
            "n_star": self.n_star,
            "bracketed_root": self.bracketed_root,
            "slope_term1": self.slope_term1,
            "slope_term2": self.slope_term2,
            "total_cutoff": self.total_cutoff,
        }


def crossover_coefficients(a, b, u) -> tuple[float, float]:
    """Quadratic and linear coefficients of ``margin(N)`` along direction ``u``."""
    a, b = _qubit_operator(a).entries, _qubit_operator(b).entries
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.norm(u)

    def q(m):
        return float(np.vdot(u, m @ u).real)

    return q(b) ** 2 - q(a) ** 2, q(b @ b) - q(a @ a)


def minimal_direction(a, b) -> np.ndarray:
    """Eigenvector of ``B^2 - A^2`` for its smallest eigenvalue (first column on ties)."""
    a, b = _qubit_operator(a), _qubit_operator(b)
    return jacobi_eigh(b.square().entries - a.square().entries)[1][:, 0]


def crossover_scan(a, b, u, n_list: Sequence[float], total_cutoff: Optional[int] = None) -> CrossoverTable:
    """``<Gamma(B)^2> - <Gamma(A)^2>`` in ``Phi(sqrt(N) u)`` for each ``N``.

    ``term1 = <Gamma B>^2 - <Gamma A>^2`` (order ``N^2``) and
    ``term2 = margin - term1`` (order ``N``).  The cutoff defaults to the
    smallest value (at least 30) that admits ``max(n_list)``.  When the
    margins change sign the root is refined by Brent's method on the
    numerical margin.
    """
    a, b = _qubit_operator(a), _qubit_operator(b)
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.norm(u)
    quad, lin = crossover_coefficients(a, b, u)
    if lin >= 0:
        raise ValidationError("direction u must satisfy <u,B^2 u> < <u,A^2 u>")
    if float(np.vdot(u, (b.entries - a.entries) @ u).real) < -1e-12:
        raise ValidationError("direction u must satisfy <u,A u> <= <u,B u>")
    n_list = [float(n) for n in n_list]
    if not n_list or min(n_list) <= 0:
        raise ValidationError("n_list must hold positive photon numbers")
    if total_cutoff is None:
        total_cutoff = max(DEFAULT_TOTAL_CUTOFF, math.ceil(4 * max(n_list)))
    space = TwoModeFock(total_cutoff)
    ga, gb = second_quantize(a, space), second_quantize(b, space)

    def evaluate(n):
        state = coherent_beam(BeamAmplitude.from_direction(u, n), space)
        margin = state.second_moment(gb) - state.second_moment(ga)
        term1 = state.expect(gb) ** 2 - state.expect(ga) ** 2
        return margin, term1, state.tail_bound

    rows = []
    for n in n_list:
        margin, term1, tail = evaluate(n)
        rows.append(CrossoverRow(n, margin, term1, margin - term1, quad * n * n + lin * n, tail))

    n_star = -lin / quad if quad > 0 else math.inf
    root = None
    ordered = sorted(rows, key=lambda r: r.N)
    for lo, hi in zip(ordered, ordered[1:]):
        if lo.margin < 0 < hi.margin:
            root = optimize.brentq(lambda n: evaluate(n)[0], lo.N, hi.N, xtol=1e-14, rtol=1e-13)
            break

    logs = np.log([r.N for r in rows])
    slope1 = slope2 = math.nan
    if len(rows) >= 2:
        t1 = np.array([abs(r.term1) for r in rows])
        t2 = np.array([abs(r.term2) for r in rows])
        if np.all(t1 > 0):
            slope1 = float(np.polyfit(logs, np.log(t1), 1)[0])
        if np.all(t2 > 0):
            slope2 = float(np.polyfit(logs, np.log(t2), 1)[0])
    return CrossoverTable(tuple(rows), n_star, root, slope1, slope2, total_cutoff)


class StokesVector(NamedTuple):
    S0: float
    S1: float
    S2: float
    S3: float


class StokesReport(NamedTuple):
    stokes: StokesVector
    bloch: BlochVector
    reconstructed: np.ndarray
    target: np.ndarray
    tail_bound: float

    @property
    def state_error(self) -> float:
        return float(np.max(np.abs(self.reconstructed - self.target)))

    def to_dict(self) -> dict:
        return {
            "stokes": dict(self.stokes._asdict()),
            "bloch": list(self.bloch),
            "bloch_norm": self.bloch.norm,
            "state_error": self.state_error,
            "tail_bound": self.tail_bound,
        }


def stokes_reconstruct(xi: BeamAmplitude, space: Optional[TwoModeFock] = None) -> StokesReport:
    """Stokes parameters ``S_mu = <Gamma(sigma_mu)>`` and the single-photon Bloch vector."""
    xi = BeamAmplitude(*xi)
    if xi.N == 0:
        raise ValidationError("Stokes reconstruction needs N > 0")
    space = space or TwoModeFock(DEFAULT_TOTAL_CUTOFF)
    state = coherent_beam(xi, space)
    s = StokesVector(*(state.expect(second_quantize(p, space)) for p in STOKES_BASIS))
    bloch = BlochVector(s.S1 / s.S0, s.S2 / s.S0, s.S3 / s.S0)
    rec = (PAULI_I + bloch.x * PAULI_X + bloch.y * PAULI_Y + bloch.z * PAULI_Z) / 2
    v = xi.vector
    return StokesReport(s, bloch, rec, np.outer(v, v.conj()) / xi.N, state.tail_bound)


def weak_beam_photon_statistics(a, u, mean_photons: float, space: Optional[TwoModeFock] = None):
    """Per-photon first and second moments read off a weak beam.

    Returns ``(<Gamma A>/N, <Gamma(A)^2>/N)`` alongside the single-photon
    values ``(<u,A u>, <u,A^2 u>)``; they agree as ``N -> 0``.
    """
    a = _qubit_operator(a)
    space = space or TwoModeFock(DEFAULT_TOTAL_CUTOFF)
    state = coherent_beam(BeamAmplitude.from_direction(u, mean_photons), space)
    g = second_quantize(a, space)
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.norm(u)
    beam = (state.expect(g) / mean_photons, state.second_moment(g) / mean_photons)
    photon = (float(np.vdot(u, a.entries @ u).real), float(np.vdot(u, a.square().entries @ u).real))
    return beam, photon
