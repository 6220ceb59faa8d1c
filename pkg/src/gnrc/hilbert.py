"""Weighted finite-dimensional Hilbert spaces and the operator calculus on them.

A :class:`WeightedSpace` is l2(X, mu) for a finite set X with positive point
weights mu. Maps between such spaces are stored as plain complex arrays; all
metric notions (adjoint, norm, spectra) account for the weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    InvalidResolvent,
    NotPositive,
    NotSelfAdjoint,
    SpaceMismatch,
    SpectrumHit,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
SPECTRUM_GAP = 1e-10
NEGATIVE_LIMIT = 1e-8

# Above this size operator norms use a Hermitian eigen-solve instead of SVD.
_SVD_LIMIT = 200


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightedSpace:
    label: str
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise ValueError("a weighted space needs dim >= 1")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError(f"weights of space '{self.label}' must be finite and positive")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, label: str, dim: int, weight: float = 1.0) -> "WeightedSpace":
        return cls(label, np.full(dim, float(weight)))

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    @cached_property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def compatible(self, other: "WeightedSpace") -> bool:
        if self is other:
            return True
        return (
            self.label == other.label
            and self.dim == other.dim
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        return f"WeightedSpace({self.label!r}, dim={self.dim})"


def _require(a: WeightedSpace, b: WeightedSpace, what: str = "operation"):
    if not a.compatible(b):
        raise SpaceMismatch(f"{what}: {a!r} is not compatible with {b!r}")


@dataclass(frozen=True, eq=False)
class Vector:
    space: WeightedSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if c.size != self.space.dim:
            raise SpaceMismatch(
                f"vector of length {c.size} does not fit {self.space!r}"
            )
        object.__setattr__(self, "coeffs", _frozen(c))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.space.weights * np.abs(self.coeffs) ** 2)))

    def __add__(self, other):
        _require(self.space, other.space, "vector sum")
        return Vector(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _require(self.space, other.space, "vector difference")
        return Vector(self.space, self.coeffs - other.coeffs)

    def __mul__(self, alpha):
        return Vector(self.space, alpha * self.coeffs)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class LinearMap:
    domain: WeightedSpace
    codomain: WeightedSpace
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.codomain.dim, self.domain.dim):
            raise SpaceMismatch(
                f"entries of shape {e.shape} do not map {self.domain!r} -> {self.codomain!r}"
            )
        object.__setattr__(self, "entries", _frozen(e))

    @property
    def shape(self):
        return self.entries.shape

    @cached_property
    def symmetrized(self) -> np.ndarray:
        """diag(sqrt mu_cod) A diag(1/sqrt mu_dom): the matrix in orthonormal bases."""
        return (
            self.codomain.sqrt_weights[:, None]
            * self.entries
            / self.domain.sqrt_weights[None, :]
        )

    @cached_property
    def adjoint(self) -> "LinearMap":
        mu_cod = self.codomain.weights
        mu_dom = self.domain.weights
        b = mu_cod[None, :] / mu_dom[:, None] * self.entries.conj().T
        return LinearMap(self.codomain, self.domain, b)

    @property
    def H(self) -> "LinearMap":
        return self.adjoint

    @cached_property
    def norm(self) -> float:
        return _spectral_norm(self.symmetrized)

    def __matmul__(self, other):
        if isinstance(other, Vector):
            _require(self.domain, other.space, "apply")
            return Vector(self.codomain, self.entries @ other.coeffs)
        _require(self.domain, other.codomain, "compose")
        return LinearMap(other.domain, self.codomain, self.entries @ other.entries)

    def __add__(self, other):
        _require(self.domain, other.domain, "sum (domain)")
        _require(self.codomain, other.codomain, "sum (codomain)")
        return LinearMap(self.domain, self.codomain, self.entries + other.entries)

    def __sub__(self, other):
        _require(self.domain, other.domain, "difference (domain)")
        _require(self.codomain, other.codomain, "difference (codomain)")
        return LinearMap(self.domain, self.codomain, self.entries - other.entries)

    def __neg__(self):
        return LinearMap(self.domain, self.codomain, -self.entries)

    def __mul__(self, alpha):
        return LinearMap(self.domain, self.codomain, alpha * self.entries)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return LinearMap(self.domain, self.codomain, self.entries / alpha)

    def __repr__(self):
        return f"LinearMap({self.domain.label} -> {self.codomain.label}, shape={self.shape})"


def identity(space: WeightedSpace) -> LinearMap:
    return LinearMap(space, space, np.eye(space.dim))


def zero_map(domain: WeightedSpace, codomain: WeightedSpace) -> LinearMap:
    return LinearMap(domain, codomain, np.zeros((codomain.dim, domain.dim)))


def diagonal(space: WeightedSpace, values) -> LinearMap:
    return LinearMap(space, space, np.diag(np.asarray(values, dtype=complex)))


def inner(u: Vector, v: Vector) -> complex:
    _require(u.space, v.space, "inner product")
    return complex(np.sum(u.space.weights * np.conj(u.coeffs) * v.coeffs))


def adjoint(a: LinearMap) -> LinearMap:
    return a.adjoint


def _is_hermitian(s: np.ndarray) -> bool:
    if s.shape[0] != s.shape[1]:
        return False
    scale = np.max(np.abs(s)) if s.size else 0.0
    return bool(np.max(np.abs(s - s.conj().T)) <= 1e-14 * max(scale, 1e-300))


def _spectral_norm(s: np.ndarray) -> float:
    m, n = s.shape
    if m == 0 or n == 0 or not np.any(s):
        return 0.0
    if max(m, n) <= _SVD_LIMIT:
        return float(np.linalg.norm(s, 2))
    if _is_hermitian(s):
        lam = scipy.linalg.eigvalsh(s)
        return float(max(abs(lam[0]), abs(lam[-1])))
    # sigma_max^2 is the top eigenvalue of the smaller Gram matrix
    g = s.conj().T @ s if n <= m else s @ s.conj().T
    g = 0.5 * (g + g.conj().T)
    k = g.shape[0]
    top = scipy.linalg.eigh(g, eigvals_only=True, subset_by_index=[k - 1, k - 1])
    return float(np.sqrt(max(top[0], 0.0)))


def operator_norm(a: LinearMap) -> float:
    return a.norm


def self_adjoint_residual(a: LinearMap) -> float:
    _require(a.domain, a.codomain, "self-adjointness")
    return operator_norm(a - a.adjoint)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    space: WeightedSpace
    eigenvalues: np.ndarray
    # columns are eigenvectors, orthonormal in the weighted inner product
    eigenvectors: np.ndarray

    def vector(self, i: int) -> Vector:
        return Vector(self.space, self.eigenvectors[:, i])

    def function_of(self, fn: Callable[[np.ndarray], np.ndarray]) -> LinearMap:
        """fn(A) through the spectral theorem."""
        v = self.eigenvectors
        vals = np.asarray(fn(self.eigenvalues))
        # V diag(f) V* with V* the weighted adjoint: V^H diag(mu)
        mat = (v * vals[None, :]) @ (v.conj().T * self.space.weights[None, :])
        return LinearMap(self.space, self.space, mat)


def self_adjoint_eigen(a: LinearMap, tol: float = DEFAULT_TOL) -> SpectralDecomposition:
    _require(a.domain, a.codomain, "eigen-decomposition")
    s = a.symmetrized
    scale = _spectral_norm(s)
    asym = _spectral_norm(s - s.conj().T)
    if asym > tol * (1.0 + scale):
        raise NotSelfAdjoint(f"symmetry residual {asym:.3e} exceeds tolerance {tol:.1e}")
    s = 0.5 * (s + s.conj().T)
    off = s - np.diag(np.diag(s))
    if not np.any(off):
        d = np.real(np.diag(s))
        order = np.argsort(d, kind="stable")
        lam, u = d[order], np.eye(s.shape[0])[:, order]
    else:
        lam, u = scipy.linalg.eigh(s)
    vecs = u / a.domain.sqrt_weights[:, None]
    return SpectralDecomposition(a.domain, _frozen(lam), _frozen(vecs))


def psd_sqrt(a: LinearMap, clamp: Optional[float] = None) -> LinearMap:
    """Positive square root of a positive semi-definite self-adjoint map.

    Eigenvalues with modulus below ``clamp`` (default 1e-12 * ||A||) are
    treated as exact zeros, so round-off does not turn into spurious
    1e-8-sized square roots.
    """
    dec = self_adjoint_eigen(a)
    lam = dec.eigenvalues
    if lam.size and lam[0] < -NEGATIVE_LIMIT:
        raise NotPositive(f"smallest eigenvalue {lam[0]:.3e} is below {-NEGATIVE_LIMIT:.0e}")
    if clamp is None:
        clamp = 1e-12 * max(abs(lam[0]), abs(lam[-1])) if lam.size else 0.0
    lam = np.where(np.abs(lam) <= clamp, 0.0, lam)
    if np.any(lam < 0):
        log.debug("psd_sqrt: zeroing negative eigenvalues down to %.3e", lam.min())
        lam = np.clip(lam, 0.0, None)
    return dec.function_of(lambda _: np.sqrt(lam))


@dataclass(frozen=True, eq=False)
class ResolventSource:
    """Either an operator with a resolvent point, or a precomputed resolvent.

    Use :meth:`from_operator` or :meth:`from_resolvent` to construct.
    ``family`` (resolvent form only) maps z to R(z); without it, resolvents at
    other points follow from R(z0) through the first resolvent identity.
    """

    z0: complex
    operator: Optional[LinearMap] = None
    resolvent_map: Optional[LinearMap] = None
    family: Optional[Callable[[complex], LinearMap]] = field(default=None, repr=False)
    check_point: Optional[complex] = None

    def __post_init__(self):
        object.__setattr__(self, "z0", complex(self.z0))
        if (self.operator is None) == (self.resolvent_map is None):
            raise ValueError("give exactly one of operator / resolvent_map")
        if self.operator is not None:
            op = self.operator
            _require(op.domain, op.codomain, "resolvent source")
            _check_resolvent_point(op, self.z0)
        else:
            r = self.resolvent_map
            _require(r.domain, r.codomain, "resolvent source")
            if self.check_point is not None:
                w = complex(self.check_point)
                res = pseudo_resolvent_residual(self.at, self.z0, w)
                if res > 1e-10:
                    raise InvalidResolvent(
                        f"pseudo-resolvent residual {res:.3e} between z0 and {w}"
                    )

    @classmethod
    def from_operator(cls, operator: LinearMap, z0: complex) -> "ResolventSource":
        return cls(z0=z0, operator=operator)

    @classmethod
    def from_resolvent(cls, resolvent_map: LinearMap, z0: complex, family=None,
                       check_point=None) -> "ResolventSource":
        return cls(z0=z0, resolvent_map=resolvent_map, family=family,
                   check_point=check_point)

    @property
    def space(self) -> WeightedSpace:
        src = self.operator if self.operator is not None else self.resolvent_map
        return src.domain

    @cached_property
    def resolvent(self) -> LinearMap:
        if self.resolvent_map is not None:
            return self.resolvent_map
        return _solve_resolvent(self.operator, self.z0)

    @cached_property
    def self_adjoint(self) -> bool:
        """Whether the underlying operator is self-adjoint (to 1e-9)."""
        if self.operator is not None:
            a = self.operator
            return self_adjoint_residual(a) <= DEFAULT_TOL * (1.0 + a.norm)
        r = self.resolvent
        if self.z0.imag == 0:
            return self_adjoint_residual(r) <= DEFAULT_TOL * (1.0 + r.norm)
        # R(z0)* = R(conj z0) characterizes self-adjointness
        other = self.at(self.z0.conjugate())
        return operator_norm(r.adjoint - other) <= DEFAULT_TOL * (1.0 + r.norm)

    def at(self, z: complex) -> LinearMap:
        z = complex(z)
        if z == self.z0:
            return self.resolvent
        if self.operator is not None:
            return _solve_resolvent(self.operator, z)
        if self.family is not None:
            return self.family(z)
        # R(z) = R(z0) (I - (z - z0) R(z0))^{-1}
        r = self.resolvent
        m = np.eye(r.shape[0]) - (z - self.z0) * r.entries
        return LinearMap(r.domain, r.codomain, np.linalg.solve(m.T, r.entries.T).T)


def _check_resolvent_point(op: LinearMap, z0: complex):
    s = op.symmetrized
    if _is_hermitian(s) or self_adjoint_residual(op) <= 1e-12 * (1.0 + op.norm):
        lam = scipy.linalg.eigvalsh(0.5 * (s + s.conj().T))
    else:
        lam = np.linalg.eigvals(s)
    gap = float(np.min(np.abs(lam - z0)))
    if gap < SPECTRUM_GAP:
        raise SpectrumHit(f"z0={z0} is within {gap:.2e} of the spectrum")


def _solve_resolvent(op: LinearMap, z: complex) -> LinearMap:
    m = op.entries - z * np.eye(op.shape[0])
    try:
        r = np.linalg.solve(m, np.eye(op.shape[0], dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SpectrumHit(f"z={z} is an eigenvalue") from exc
    resid = np.max(np.abs(m @ r - np.eye(op.shape[0])))
    if not np.isfinite(resid) or resid > 1e-10:
        raise SpectrumHit(f"resolvent at z={z} is ill-conditioned (residual {resid:.2e})")
    return LinearMap(op.domain, op.codomain, r)


def resolvent(src: ResolventSource) -> LinearMap:
    return src.resolvent


def pseudo_resolvent_residual(provider: Callable[[complex], LinearMap], z: complex,
                              w: complex) -> float:
    rz, rw = provider(z), provider(w)
    _require(rz.domain, rw.domain, "pseudo-resolvent check")
    _require(rz.codomain, rw.codomain, "pseudo-resolvent check")
    return operator_norm(rz - rw - (z - w) * (rz @ rw))


@dataclass(frozen=True)
class IsometryReport:
    is_isometry: bool
    is_coisometry: bool
    is_partial_isometry: bool
    isometry_residual: float
    coisometry_residual: float
    partial_residual: float


def isometry_checks(a: LinearMap, tol: float = DEFAULT_TOL) -> IsometryReport:
    ah = a.adjoint
    iso = operator_norm(identity(a.domain) - ah @ a)
    coiso = operator_norm(identity(a.codomain) - a @ ah)
    part = operator_norm(a - a @ ah @ a)
    return IsometryReport(iso <= tol, coiso <= tol, part <= tol, iso, coiso, part)


@dataclass(frozen=True, eq=False)
class DirectSum:
    sum: WeightedSpace
    components: tuple
    inject: tuple
    project: tuple
    offsets: tuple

    def block(self, k: int) -> slice:
        return slice(self.offsets[k], self.offsets[k + 1])


def direct_sum(spaces: Sequence[WeightedSpace], label: Optional[str] = None) -> DirectSum:
    spaces = tuple(spaces)
    if not spaces:
        raise ValueError("direct_sum needs at least one space")
    label = label or " (+) ".join(s.label for s in spaces)
    total = WeightedSpace(label, np.concatenate([s.weights for s in spaces]))
    offsets = np.concatenate([[0], np.cumsum([s.dim for s in spaces])]).astype(int)
    inject = []
    for k, s in enumerate(spaces):
        e = np.zeros((total.dim, s.dim))
        e[offsets[k]:offsets[k + 1], :] = np.eye(s.dim)
        inject.append(LinearMap(s, total, e))
    project = [i.adjoint for i in inject]
    return DirectSum(total, spaces, tuple(inject), tuple(project), tuple(int(o) for o in offsets))
