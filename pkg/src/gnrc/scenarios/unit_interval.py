"""Discrete path graphs converging to the Neumann Laplacian on [0, 1].

Level n uses vertices v 2^-n (v = 0..2^n) with weights mu(v) = 2^-n inside and
2^-n / 2 at the two endpoints, the operator D_n = 2 4^n Delta_G (Delta_G the
degree-normalized path Laplacian) and the identification
J_n f = sum_v f(v) psi_v through the piecewise-linear hat functions psi_v.

The limit space L2(0, 1) is represented exactly enough for all identities
involving J: the Neumann eigenbasis e_0 = 1, e_k = sqrt(2) cos(k pi x) is kept
for k < K, and the remaining modes are replaced by the 2^N functions
chi_r (r = 1..2^N) that the hat functions of level N actually see there. For
k >= K the coefficient of psi_v on e_k only depends on k mod 2^(N+1) (up to a
common factor), so the hats' high-mode parts lie in this finite span and
<psi_v, psi_w> is reproduced exactly. The Laplacian is compressed onto each
chi_r; modes that no hat touches are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import InsufficientModes, SpectrumHit
from ..hilbert import (
    LinearMap,
    ResolventSource,
    WeightedSpace,
    diagonal,
    identity,
    operator_norm,
    psd_sqrt,
)
from ..que import QueInstance

# Gram entries of the hat functions in units of the mesh width h = 2^-n.
GRAM_DIAG = 2.0 / 3.0
GRAM_ADJ = 1.0 / 6.0

_TAIL_TERMS = 2000
MODES_PER_VERTEX = 64


def mesh(n: int) -> float:
    return 2.0 ** -n


def vertices(n: int) -> np.ndarray:
    return np.arange(2 ** n + 1) * mesh(n)


def vertex_weights(n: int) -> np.ndarray:
    mu = np.full(2 ** n + 1, mesh(n))
    mu[[0, -1]] /= 2.0
    return mu


def gram(n: int) -> np.ndarray:
    """Closed-form Gram matrix <psi_v, psi_w> of the level-n hat functions."""
    h = mesh(n)
    nv = 2 ** n + 1
    g = np.diag(np.full(nv, GRAM_DIAG * h))
    g[0, 0] = g[-1, -1] = GRAM_DIAG * h / 2.0
    idx = np.arange(nv - 1)
    g[idx, idx + 1] = g[idx + 1, idx] = GRAM_ADJ * h
    return g


def path_laplacian(n: int) -> np.ndarray:
    """Degree-normalized Laplacian of the path graph; spectrum 1 - cos(k pi / 2^n)."""
    nv = 2 ** n + 1
    adj = np.zeros((nv, nv))
    idx = np.arange(nv - 1)
    adj[idx, idx + 1] = adj[idx + 1, idx] = 1.0
    deg = adj.sum(axis=1)
    return np.eye(nv) - adj / deg[:, None]


def loop_laplacian(n: int, gram_matrix: Optional[np.ndarray] = None) -> np.ndarray:
    """Graph Laplacian whose edge weights are the hat overlaps, loops included.

    (Delta f)(v) = mu(v)^-1 sum_w gamma(v, w) (f(v) - f(w)), where the vertex
    weight mu(v) is the full row sum of gamma (the self-overlap being a loop).
    """
    g = gram(n) if gram_matrix is None else gram_matrix
    mu = g.sum(axis=1)
    lap = -g.copy()
    np.fill_diagonal(lap, 0.0)
    lap[np.diag_indices_from(lap)] = -lap.sum(axis=1)
    return lap / mu[:, None]


def loop_spectrum(n: int) -> np.ndarray:
    k = np.arange(2 ** n + 1)
    return (1.0 - np.cos(k * np.pi / 2 ** n)) / 3.0


def interpolation(n: int, level: int) -> np.ndarray:
    """Values of the level-n hats at the level-`level` vertices."""
    x = vertices(level)
    xv = vertices(n)
    h = mesh(n)
    return np.clip(1.0 - np.abs(x[:, None] - xv[None, :]) / h, 0.0, None)


def _q(k: np.ndarray, h: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return (1.0 - np.cos(k * np.pi * h)) / (h * k ** 2 * np.pi ** 2)


def _class_sums(level: int, modes: int):
    """For r = 1..2^level: sums over the modes k >= K with k = +-r mod 2^(level+1).

    Returns (sum k^-4, sum k^-4 / (1 + k^2 pi^2)), accurate to round-off.
    """
    p = 2 ** (level + 1)
    half = p // 2
    r = np.arange(1, half + 1)
    m = modes // p + np.arange(_TAIL_TERMS)
    offsets = [r]
    offsets.append(np.where(r < half, p - r, -1))
    s4 = np.zeros(half)
    s6 = np.zeros(half)
    a = np.pi ** 2
    for off in offsets:
        valid = off > 0
        k = m[None, :] * p + np.abs(off)[:, None]
        k = k.astype(float)
        s4_part = np.sum(k ** -4.0, axis=1)
        s6_part = np.sum(k ** -4.0 / (1.0 + a * k ** 2), axis=1)
        # remaining terms, by the midpoint rule applied to the tail integral
        x = (m[-1] + 0.5) * p + np.abs(off)
        s4_part += x ** -3.0 / (3.0 * p)
        s6_part += (x ** -5.0 / (5.0 * a) - x ** -7.0 / (7.0 * a * a)) / p
        s4 += np.where(valid, s4_part, 0.0)
        s6 += np.where(valid, s6_part, 0.0)
    return s4, s6


@dataclass(frozen=True, eq=False)
class UnitIntervalLimit:
    """Finite exact model of L2(0, 1) seen by hat functions of level <= ``level``.

    ``modes`` is the number K of explicit cosine modes; it must be a multiple
    of 2^(level+1).
    """

    level: int
    modes: int

    def __post_init__(self):
        p = 2 ** (self.level + 1)
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if self.modes < p or self.modes % p:
            raise ValueError(f"modes must be a positive multiple of {p}")

    @property
    def n_residual(self) -> int:
        return 2 ** self.level

    @cached_property
    def space(self) -> WeightedSpace:
        return WeightedSpace.uniform(f"L2(0,1)[K={self.modes},N={self.level}]",
                                     self.modes + self.n_residual)

    @cached_property
    def _residual(self):
        h = mesh(self.level)
        s4, s6 = _class_sums(self.level, self.modes)
        r = np.arange(1, self.n_residual + 1)
        amp = (1.0 - np.cos(r * np.pi * h)) / (h * np.pi ** 2)
        norms = np.sqrt(2.0 * s4) * amp
        # compression of (A + 1)^-1 onto chi_r, expressed as an eigenvalue
        rho = s6 / s4
        return norms, 1.0 / rho - 1.0

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        k = np.arange(self.modes)
        return np.concatenate([(k * np.pi) ** 2, self._residual[1]])

    @cached_property
    def hat_coefficients(self) -> np.ndarray:
        """Coordinates of the level-N hats: shape (K + 2^N, 2^N + 1)."""
        n = self.level
        h = mesh(n)
        x = vertices(n)
        s = np.full(x.size, 2.0)
        s[[0, -1]] = 1.0
        k = np.arange(1, self.modes)
        c = np.empty((self.modes + self.n_residual, x.size))
        c[0] = vertex_weights(n)
        c[1:self.modes] = math.sqrt(2.0) * _q(k, h)[:, None] * s[None, :] * np.cos(np.pi * k[:, None] * x[None, :])
        r = np.arange(1, self.n_residual + 1)
        norms = self._residual[0]
        c[self.modes:] = norms[:, None] * s[None, :] * np.cos(np.pi * r[:, None] * x[None, :])
        return c

    def identification(self, n: int, space: WeightedSpace) -> LinearMap:
        if n > self.level:
            raise ValueError(f"model of level {self.level} cannot host level {n}")
        c = self.hat_coefficients @ interpolation(n, self.level)
        return LinearMap(space, self.space, c)

    def resolvent_at(self, z: complex) -> LinearMap:
        lam = self.eigenvalues
        if np.min(np.abs(lam - z)) < 1e-10:
            raise SpectrumHit(f"z={z} is an eigenvalue of the limit operator")
        return diagonal(self.space, 1.0 / (lam - z))

    def resolvent_source(self, z0: complex, check: bool = False) -> ResolventSource:
        z0 = complex(z0)
        check_point = z0 - 1.0 if check else None
        return ResolventSource.from_resolvent(self.resolvent_at(z0), z0,
                                              family=self.resolvent_at,
                                              check_point=check_point)


def default_modes(level: int, per_vertex: int = 8) -> int:
    return per_vertex * 2 ** (level + 1) // 2


@dataclass(frozen=True)
class UnitIntervalScenario:
    level: int
    cosine_modes: Optional[int] = None
    z0: complex = -1.0
    limit_level: Optional[int] = None

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level n must be >= 1")
        if self.limit_level is not None and self.limit_level < self.level:
            raise ValueError("limit_level must be >= level")

    @property
    def scale(self) -> float:
        return 2.0 * 4.0 ** self.level

    def limit(self) -> UnitIntervalLimit:
        top = self.limit_level or self.level
        return UnitIntervalLimit(top, self.cosine_modes or default_modes(top))


@dataclass(frozen=True, eq=False)
class UnitIntervalBuild:
    spec: UnitIntervalScenario
    inst: QueInstance
    gram: np.ndarray
    loop_laplacian: np.ndarray
    path_laplacian: np.ndarray
    weights: np.ndarray
    limit: UnitIntervalLimit


def discrete_space(n: int) -> WeightedSpace:
    return WeightedSpace(f"l2(X_{n})", vertex_weights(n))


def build_unit_interval(spec: UnitIntervalScenario,
                        limit: Optional[UnitIntervalLimit] = None) -> UnitIntervalBuild:
    n = spec.level
    lim = limit or spec.limit()
    h_n = discrete_space(n)
    lap = path_laplacian(n)
    op = LinearMap(h_n, h_n, spec.scale * lap)
    r_n = ResolventSource.from_operator(op, spec.z0)
    r_inf = lim.resolvent_source(spec.z0)
    j = lim.identification(n, h_n)
    inst = QueInstance(h_n, lim.space, r_n, r_inf, j)
    return UnitIntervalBuild(spec, inst, gram(n), loop_laplacian(n), lap, vertex_weights(n), lim)


# ---------------------------------------------------------------- norm table


def _fit_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    return float(np.polyfit(np.asarray(ns, float), np.log2(np.asarray(values, float)), 1)[0])


@dataclass(frozen=True)
class NormRow:
    n: int
    w_r: float
    w2_r: float
    w2_rhalf: float
    oracle_w_r: float
    oracle_w2_r: float
    oracle_w2_rhalf: float
    w_r_argmax: int  # k with lambda_k = 1 - cos(k pi / 2^n) maximizing sqrt(l/3) r(l)

    @property
    def max_disagreement(self) -> float:
        return max(abs(self.w_r - self.oracle_w_r), abs(self.w2_r - self.oracle_w2_r),
                   abs(self.w2_rhalf - self.oracle_w2_rhalf))


@dataclass(frozen=True)
class NormTable:
    rows: List[NormRow]
    slopes: Dict[str, float]


def _oracle(n: int):
    k = np.arange(2 ** n + 1)
    lam = 1.0 - np.cos(k * np.pi / 2 ** n)
    w = np.sqrt(lam / 3.0)
    r = 1.0 / (1.0 + 2.0 * 4.0 ** n * lam)
    wr = w * r
    return float(wr.max()), float((w * w * r).max()), float((w * w * np.sqrt(r)).max()), int(np.argmax(wr))


def unit_interval_norm_table(n_range: Sequence[int]) -> NormTable:
    ns = list(n_range)
    if not ns:
        raise ValueError("n_range must be nonempty")
    rows = []
    for n in ns:
        h_n = discrete_space(n)
        w2 = LinearMap(h_n, h_n, loop_laplacian(n))
        w = psd_sqrt(w2)
        op = LinearMap(h_n, h_n, 2.0 * 4.0 ** n * path_laplacian(n))
        r = ResolventSource.from_operator(op, -1.0).resolvent
        r_half = psd_sqrt(r)
        o = _oracle(n)
        rows.append(NormRow(n, operator_norm(w @ r), operator_norm(w2 @ r),
                            operator_norm(w2 @ r_half), *o))
    slopes = {}
    if len(ns) > 1:
        slopes = {
            "w_r": _fit_slope(ns, [r.w_r for r in rows]),
            "w2_r": _fit_slope(ns, [r.w2_r for r in rows]),
            "w2_rhalf": _fit_slope(ns, [r.w2_rhalf for r in rows]),
        }
    return NormTable(rows, slopes)


@dataclass(frozen=True)
class EigenvalueComparison:
    discrete: float
    limit: float
    error: float


def eigenvalue_convergence(n: int, k: int) -> EigenvalueComparison:
    if not 0 <= k <= 2 ** n:
        raise ValueError(f"k must lie in 0..{2 ** n}")
    disc = 2.0 * 4.0 ** n * (1.0 - math.cos(k * math.pi / 2 ** n))
    lim = (k * math.pi) ** 2
    return EigenvalueComparison(disc, lim, abs(disc - lim))


@dataclass(frozen=True)
class WinftyResult:
    ns: List[int]
    modes: int
    w2_r: List[float]
    w2_rhalf: List[float]
    slope_w2_r: float
    slope_w2_rhalf: float


def mode_classes(lim: UnitIntervalLimit) -> np.ndarray:
    """Residue class of every limit coordinate: k mod 2^(N+1), folded to 0..2^N.

    Hats of level N see the modes of one class only through a single common
    vector, and vectors of different classes are orthogonal in l2(X_N, mu),
    so JJ* does not couple different classes.
    """
    p = 2 ** (lim.level + 1)
    k = np.arange(lim.modes) % p
    k = np.minimum(k, p - k)
    return np.concatenate([k, np.arange(1, lim.n_residual + 1)])


def winfty_norms(n: int, modes: int, method: str = "classes"):
    """||W_inf^2 R_inf|| and ||W_inf^2 R_inf^(1/2)|| at level n, z0 = -1.

    ``method="dense"`` works with the full matrices; ``"classes"`` uses that
    W_inf^2 = I - JJ* and R_inf are block diagonal over :func:`mode_classes`.
    """
    lim = UnitIntervalLimit(n, modes)
    j = lim.identification(n, discrete_space(n))
    lam = lim.eigenvalues
    r_diag = 1.0 / (lam + 1.0)
    if method == "dense":
        w2 = identity(lim.space) - j @ j.adjoint
        return (operator_norm(w2 @ diagonal(lim.space, r_diag)),
                operator_norm(w2 @ diagonal(lim.space, np.sqrt(r_diag))))
    if method != "classes":
        raise ValueError(f"unknown method {method!r}")
    cls = mode_classes(lim)
    jm = j.entries.real
    mu = j.domain.weights
    a = b = 0.0
    for c in np.unique(cls):
        idx = np.flatnonzero(cls == c)
        jc = jm[idx]
        w2 = np.eye(idx.size) - (jc / mu[None, :]) @ jc.T
        sub = WeightedSpace.uniform(f"class {c}", idx.size)
        a = max(a, operator_norm(LinearMap(sub, sub, w2 * r_diag[idx][None, :])))
        b = max(b, operator_norm(LinearMap(sub, sub, w2 * np.sqrt(r_diag[idx])[None, :])))
    return a, b


def winfty_order_experiment(n_range: Sequence[int], modes: int) -> WinftyResult:
    """Decay exponents of the limit-side defect norms; exploratory only."""
    ns = list(n_range)
    if not ns:
        raise ValueError("n_range must be nonempty")
    need = MODES_PER_VERTEX * 2 ** max(ns)
    if modes < need:
        raise InsufficientModes(f"K={modes} modes; need at least {need} for n <= {max(ns)}")
    a, b = [], []
    for n in ns:
        x, y = winfty_norms(n, modes)
        a.append(x)
        b.append(y)
    sa = _fit_slope(ns, a) if len(ns) > 1 else float("nan")
    sb = _fit_slope(ns, b) if len(ns) > 1 else float("nan")
    return WinftyResult(ns, modes, a, b, sa, sb)
