"""Dense Hermitian linear algebra on finite-dimensional matrix algebras.

Operators and states are immutable numpy-backed values.  Eigenvalues come
from a cyclic complex Jacobi solver with round-robin (parallel) ordering, so
every sweep is a handful of vectorized numpy calls.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
MAX_SWEEPS = 100
OFFDIAG_REL_TOL = 1e-12
MERGE_REL_TOL = 1e-8
_DENSE_ROUND_MAX_DIM = 24


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class PremiseError(ValidationError):
    """A quantumness-test premise (e.g. ``A >= 0``) does not hold."""


class NumericalError(ArithmeticError):
    """An iterative routine failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def _as_matrix(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def _hermitize(m: np.ndarray, tol: float) -> np.ndarray:
    dev = np.max(np.abs(m - m.conj().T))
    if dev > tol:
        raise ValidationError(f"matrix is not Hermitian (max |A - A^H| = {dev:.3e} > {tol:g})")
    out = (m + m.conj().T) / 2
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Self-adjoint ``dim x dim`` matrix; symmetrized on construction."""

    entries: np.ndarray

    def __init__(self, entries, tol: float = HERMITIAN_TOL):
        object.__setattr__(self, "entries", _hermitize(_as_matrix(entries), tol))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __add__(self, other):
        return HermitianOperator(self.entries + as_hermitian(other).entries)

    def __sub__(self, other):
        return HermitianOperator(self.entries - as_hermitian(other).entries)

    def __neg__(self):
        return HermitianOperator(-self.entries)

    def __mul__(self, scalar):
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise ValidationError("Hermitian operators only scale by real numbers")
        return HermitianOperator(self.entries * float(np.real(scalar)))

    __rmul__ = __mul__

    def square(self) -> "HermitianOperator":
        return HermitianOperator(self.entries @ self.entries, tol=1e-9 * (1 + self.norm()) ** 2)

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.entries))

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class DensityState:
    """Positive semidefinite, unit-trace ``dim x dim`` matrix."""

    entries: np.ndarray

    def __init__(self, entries, tol: float = TRACE_TOL):
        m = _hermitize(_as_matrix(entries), HERMITIAN_TOL)
        tr = np.trace(m).real
        if abs(tr - 1) > tol:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = jacobi_eigh(m)[0][0]
        if lam_min < -POSITIVITY_TOL:
            raise ValidationError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "entries", m)

    @classmethod
    def pure(cls, vector) -> "DensityState":
        v = np.asarray(vector, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValidationError("cannot build a state from the zero vector")
        v = v / nrm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityState":
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_pure(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.entries @ self.entries - self.entries)) <= tol)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"DensityState(dim={self.dim})"


@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues (ascending) with multiplicities."""

    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    @property
    def min(self) -> float:
        return self.eigenvalues[0]

    @property
    def max(self) -> float:
        return self.eigenvalues[-1]

    def contains(self, value: float, tol: float) -> bool:
        return bool(np.min(np.abs(np.asarray(self.eigenvalues) - value)) <= tol)

    def to_dict(self) -> dict:
        return {"eigenvalues": list(self.eigenvalues), "multiplicities": list(self.multiplicities)}


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self))

    def unit(self) -> "BlochVector":
        n = self.norm
        if n == 0:
            raise ValidationError("zero vector has no direction")
        return BlochVector(*(np.asarray(self) / n))


class EigenSystem(NamedTuple):
    spectrum: Spectrum
    vectors: np.ndarray
    values: np.ndarray


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def as_hermitian(a) -> HermitianOperator:
    return a if isinstance(a, HermitianOperator) else HermitianOperator(a)


def as_state(rho) -> DensityState:
    return rho if isinstance(rho, DensityState) else DensityState(rho)


def _check_same_dim(*ops):
    dims = {op.dim for op in ops}
    if len(dims) != 1:
        raise ValidationError(f"dimension mismatch: {sorted(dims)}")


def _round_robin(n: int):
    """Pairings for one cyclic sweep; every index pair appears exactly once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0)
    return float(np.linalg.norm(off))


def _rotation_params(a: np.ndarray, p: np.ndarray, q: np.ndarray):
    """Unitary 2x2 blocks that zero ``a[p, q]`` for disjoint index pairs.

    Block is ``diag(1, conj(phase)) @ [[c, s], [-s, c]]`` with the small-angle
    choice of ``t = tan(theta)``.
    """
    b = a[p, q]
    mag = np.abs(b)
    safe = np.where(mag > 1e-300, mag, 1.0)
    phase_c = np.where(mag > 1e-300, b.conj() / safe, 1.0)
    theta = (a[q, q].real - a[p, p].real) / (2 * safe)
    big = np.abs(theta) > 1e150
    # sqrt(theta^2 + 1) overflows for huge theta, where t ~ 1 / (2 theta)
    root = np.sqrt(np.where(big, 0.0, theta) ** 2 + 1)
    t = np.where(big, 0.5 / np.where(big, theta, 1.0), np.copysign(1.0, theta) / (np.abs(theta) + root))
    t[mag <= 1e-300] = 0.0
    c = 1 / np.sqrt(t * t + 1)
    s = t * c
    return c, s, -s * phase_c, c * phase_c


def jacobi_eigh(matrix, max_sweeps: int = MAX_SWEEPS, rel_tol: float = OFFDIAG_REL_TOL):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with ``values`` ascending and the columns of
    ``vectors`` orthonormal.  Raises :class:`NumericalError` if the
    off-diagonal norm has not dropped below ``rel_tol * ||A||_F`` after
    ``max_sweeps`` sweeps.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = rel_tol * np.linalg.norm(a)
    if n > 1:
        rounds = _round_robin(n)
        dense = n <= _DENSE_ROUND_MAX_DIM
        for _ in range(max_sweeps):
            if _off_norm(a) <= threshold:
                break
            for p, q in rounds:
                u_pp, u_pq, u_qp, u_qq = _rotation_params(a, p, q)
                if dense:
                    # small n: one matmul per round beats per-column updates
                    j = np.eye(n, dtype=complex)
                    j[p, p] = u_pp
                    j[p, q] = u_pq
                    j[q, p] = u_qp
                    j[q, q] = u_qq
                    a = j.conj().T @ a @ j
                    v = v @ j
                    continue
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = ap * u_pp + aq * u_qp
                a[:, q] = ap * u_pq + aq * u_qq
                rp = a[p, :].copy()
                rq = a[q, :]
                a[p, :] = u_pp[:, None] * rp + np.conj(u_qp)[:, None] * rq
                a[q, :] = u_pq[:, None] * rp + np.conj(u_qq)[:, None] * rq
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = vp * u_pp + vq * u_qp
                v[:, q] = vp * u_pq + vq * u_qq
        else:
            residual = _off_norm(a)
            if residual > threshold:
                raise NumericalError(
                    f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {residual:.3e})",
                    residual=residual,
                )
    values = np.diag(a).real.copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def cluster_spectrum(values, scale: float, rel_tol: float = MERGE_REL_TOL) -> Spectrum:
    """Merge eigenvalues closer than ``rel_tol * max(1, scale)``."""
    tol = rel_tol * max(1.0, scale)
    distinct: list[list[float]] = []
    for lam in np.sort(np.asarray(values, dtype=float)):
        if distinct and lam - distinct[-1][-1] <= tol:
            distinct[-1].append(float(lam))
        else:
            distinct.append([float(lam)])
    return Spectrum(tuple(float(np.mean(g)) for g in distinct), tuple(len(g) for g in distinct))


def eig_hermitian(a) -> EigenSystem:
    """Spectrum and orthonormal eigenbasis of a Hermitian operator.

    ``values`` keeps every eigenvalue (one per column of ``vectors``);
    ``spectrum`` is the clustered, distinct-value view.
    """
    op = as_hermitian(a)
    values, vectors = jacobi_eigh(op.entries)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return EigenSystem(cluster_spectrum(values, scale), vectors, values)


def min_eigenvalue(a) -> float:
    m = a.entries if isinstance(a, HermitianOperator) else np.asarray(a)
    return float(jacobi_eigh(m)[0][0])


class OrderResult(NamedTuple):
    holds: bool
    margin: float


def loewner_geq(b, a, tol: float = 1e-10) -> OrderResult:
    """``B >= A`` in the Loewner order; margin is ``min eig(B - A)``."""
    b, a = as_hermitian(b), as_hermitian(a)
    _check_same_dim(a, b)
    margin = min_eigenvalue(b.entries - a.entries)
    return OrderResult(margin >= -tol, margin)


def pauli_observable(a0: float, a: Sequence[float]) -> HermitianOperator:
    """``a0 * I + a . sigma``; eigenvalues ``a0 +- |a|``."""
    ax, ay, az = (float(c) for c in a)
    return HermitianOperator(a0 * PAULI_I + ax * PAULI_X + ay * PAULI_Y + az * PAULI_Z)


def bloch_state(k: Sequence[float], tol: float = 1e-10) -> DensityState:
    kx, ky, kz = (float(c) for c in k)
    norm = np.sqrt(kx * kx + ky * ky + kz * kz)
    if norm > 1 + tol:
        raise ValidationError(f"Bloch vector norm {norm:.12g} exceeds 1")
    return DensityState((PAULI_I + kx * PAULI_X + ky * PAULI_Y + kz * PAULI_Z) / 2)


def bloch_vector(rho) -> BlochVector:
    """Inverse of :func:`bloch_state` for a qubit."""
    m = as_state(rho).entries
    if m.shape != (2, 2):
        raise ValidationError("Bloch vector is defined for qubit states only")
    return BlochVector(*(float(np.trace(m @ p).real) for p in PAULIS))


def tensor(a, b) -> HermitianOperator:
    return HermitianOperator(np.kron(as_hermitian(a).entries, as_hermitian(b).entries))


def expectation(rho, a, imag_tol: float = 1e-10) -> float:
    """``Tr(rho A)``."""
    rho, a = as_state(rho), as_hermitian(a)
    _check_same_dim(rho, a)
    value = np.sum(rho.entries * a.entries.T)
    scale = max(1.0, a.norm())
    if abs(value.imag) > imag_tol * scale:
        raise NumericalError(f"expectation has imaginary part {value.imag:.3e}", residual=abs(value.imag))
    return float(value.real)


def commutator_norm(a, b) -> float:
    a, b = as_hermitian(a), as_hermitian(b)
    _check_same_dim(a, b)
    return float(np.linalg.norm(a.entries @ b.entries - b.entries @ a.entries))


def operator_from_json(obj, path: str = "$") -> HermitianOperator:
    """Parse ``{"dim": n, "re": [[...]], "im": [[...]]}``; ``im`` is optional.

    Errors name the offending field by JSON path.
    """
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected an object with 'dim', 're', 'im'")
    dim = obj.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ValidationError(f"{path}.dim: expected a positive integer")
    parts = {}
    for key in ("re", "im"):
        rows = obj.get(key)
        if rows is None and key == "im":
            parts[key] = np.zeros((dim, dim))
            continue
        if not isinstance(rows, list) or len(rows) != dim:
            raise ValidationError(f"{path}.{key}: expected {dim} rows")
        out = np.empty((dim, dim))
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != dim:
                raise ValidationError(f"{path}.{key}[{i}]: expected {dim} entries")
            for j, x in enumerate(row):
                if not isinstance(x, (int, float)) or isinstance(x, bool):
                    raise ValidationError(f"{path}.{key}[{i}][{j}]: expected a number")
                out[i, j] = x
        parts[key] = out
    try:
        return HermitianOperator(parts["re"] + 1j * parts["im"])
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def operator_to_json(a) -> dict:
    m = as_hermitian(a).entries
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}
