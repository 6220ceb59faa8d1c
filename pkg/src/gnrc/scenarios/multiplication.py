"""Multiplication operators on shrinking or growing subsets of a common space.

All spaces are coordinate subspaces of one quadrature grid on a (truncated)
common space X. H_n = l2(X_n) carries multiplication by a_n, H_inf = l2(X_inf)
multiplication by a_inf, and J_n restricts a function extended by zero to
X_inf. The natural parent is l2 of the whole grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Sequence

import numpy as np

from ..errors import EmptyIntersection
from ..hilbert import ResolventSource, WeightedSpace, diagonal
from ..parent import ParentSpace, build_subspace_parent
from ..que import QueInstance


def piecewise_grid(breaks: Sequence[float], points_per_piece: int):
    """Trapezoid nodes on consecutive pieces [breaks[i], breaks[i+1]].

    Every break point is a node, so suprema attained at piece endpoints are
    sampled exactly.
    """
    breaks = np.asarray(breaks, dtype=float)
    if np.any(np.diff(breaks) <= 0):
        raise ValueError("break points must increase")
    xs, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        x = np.linspace(lo, hi, points_per_piece)
        w = np.full(points_per_piece, (hi - lo) / (points_per_piece - 1))
        w[[0, -1]] /= 2.0
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    ux, inv = np.unique(x, return_inverse=True)
    uw = np.zeros(ux.size)
    np.add.at(uw, inv, w)
    return ux, uw


def grid_union(*grids):
    x = np.concatenate([g[0] for g in grids])
    w = np.concatenate([g[1] for g in grids])
    order = np.argsort(x, kind="stable")
    return x[order], w[order]


@dataclass(frozen=True, eq=False)
class MultiplicationScenario:
    """One family of multiplication operators.

    ``approx_set(x, n)`` and ``limit_set(x)`` return membership masks,
    ``symbol(x, n)`` and ``limit_symbol(x)`` the multipliers. ``tail(n)``
    bounds |D_n| on the part of X cut away by the truncation at ``truncation``.
    """

    name: str
    points: np.ndarray
    weights: np.ndarray
    approx_set: Callable[[np.ndarray, int], np.ndarray]
    limit_set: Callable[[np.ndarray], np.ndarray]
    symbol: Callable[[np.ndarray, int], np.ndarray]
    limit_symbol: Callable[[np.ndarray], np.ndarray]
    tail: Callable[[int], float]
    truncation: float
    n_max: int
    z0: complex = -1.0
    rate: Callable[[int], float] = lambda n: 2.0 ** -n

    def __post_init__(self):
        if np.any(np.asarray(self.weights) <= 0):
            raise ValueError("quadrature weights must be positive")
        for n in range(1, self.n_max + 1):
            if not np.any(self.mask(n) & self.limit_mask()):
                raise EmptyIntersection(f"X_{n} and X_inf share no grid point")

    @cached_property
    def space(self) -> WeightedSpace:
        return WeightedSpace(f"L2(X)[{self.name}]", self.weights)

    def mask(self, n: int) -> np.ndarray:
        return np.asarray(self.approx_set(self.points, n), dtype=bool)

    def limit_mask(self) -> np.ndarray:
        return np.asarray(self.limit_set(self.points), dtype=bool)

    def symbol_values(self, n: int) -> np.ndarray:
        return np.asarray(self.symbol(self.points, n), dtype=float)

    def limit_values(self) -> np.ndarray:
        return np.asarray(self.limit_symbol(self.points), dtype=float)

    @cached_property
    def natural_parent(self) -> ParentSpace:
        masks = [self.limit_mask()] + [self.mask(n) for n in range(1, self.n_max + 1)]
        labels = [f"L2(X_inf)[{self.name}]"] + [f"L2(X_{n})[{self.name}]" for n in range(1, self.n_max + 1)]
        return build_subspace_parent(self.space, masks, labels, construction="natural")


def _sup(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def sup_terms(spec: MultiplicationScenario, n: int) -> Dict[str, float]:
    """The three grid suprema describing D_n on the natural parent."""
    x_n, x_inf = spec.mask(n), spec.limit_mask()
    r_n = 1.0 / (spec.symbol_values(n) - spec.z0)
    r_inf = 1.0 / (spec.limit_values() - spec.z0)
    return {
        "limit_only": _sup(r_inf[x_inf & ~x_n]),
        "approx_only": _sup(r_n[x_n & ~x_inf]),
        "overlap": _sup((r_n - r_inf)[x_n & x_inf]),
    }


def mult_sup_conditions(spec: MultiplicationScenario, n: int) -> float:
    """delta'_n: largest of the three suprema, plus the truncation tail bound."""
    return max(sup_terms(spec, n).values()) + spec.tail(n)


@dataclass(frozen=True, eq=False)
class MultiplicationBuild:
    inst: QueInstance
    natural_parent: ParentSpace
    n: int


def build_multiplication(spec: MultiplicationScenario, n: int) -> MultiplicationBuild:
    parent = spec.natural_parent
    parent.check_index(n)
    h_n, h_inf = parent.components[n], parent.components[0]
    x_n, x_inf = spec.mask(n), spec.limit_mask()
    a_n = spec.symbol_values(n)[x_n]
    a_inf = spec.limit_values()[x_inf]
    r_n = ResolventSource.from_operator(diagonal(h_n, a_n), spec.z0)
    r_inf = ResolventSource.from_operator(diagonal(h_inf, a_inf), spec.z0)
    j = parent.iotas[0].adjoint @ parent.iotas[n]
    return MultiplicationBuild(QueInstance(h_n, h_inf, r_n, r_inf, j), parent, n)


def lifted_family(spec: MultiplicationScenario, n: int):
    """z -> (iota_n R_n(z) iota_n*, iota_inf R_inf(z) iota_inf*) on the natural parent."""
    b = build_multiplication(spec, n)
    p = b.natural_parent
    return (
        lambda z: p.iotas[n] @ b.inst.r1.at(z) @ p.iotas[n].adjoint,
        lambda z: p.iotas[0] @ b.inst.r2.at(z) @ p.iotas[0].adjoint,
    )


# ----------------------------------------------------------- built-in examples


def example_a(n_max: int = 6, points_per_piece: int = 17, z0: complex = -1.0) -> MultiplicationScenario:
    """X = [0, T], X_n = [0, 1] u [2^n, T], X_inf = [0, 1], a(x) = x."""
    t = 2.0 ** (n_max + 2)
    breaks = [0.0, 1.0] + [2.0 ** k for k in range(1, n_max + 3)]
    x, w = piecewise_grid(breaks, points_per_piece)
    return MultiplicationScenario(
        name="A",
        points=x,
        weights=w,
        approx_set=lambda x, n: (x <= 1.0) | (x >= 2.0 ** n),
        limit_set=lambda x: x <= 1.0,
        symbol=lambda x, n: x,
        limit_symbol=lambda x: x,
        tail=lambda n: 1.0 / abs(t - z0),
        truncation=t,
        n_max=n_max,
        z0=z0,
    )


def example_b(n_max: int = 6, points_per_piece: int = 17, z0: complex = -1.0) -> MultiplicationScenario:
    """X = [eps, 1] (eps = 2^-(N+2)), X_n = [2^-n, 1], X_inf = X, a(x) = 1/x."""
    eps = 2.0 ** -(n_max + 2)
    breaks = [2.0 ** -k for k in range(n_max + 2, -1, -1)]
    x, w = piecewise_grid(breaks, points_per_piece)
    return MultiplicationScenario(
        name="B",
        points=x,
        weights=w,
        approx_set=lambda x, n: x >= 2.0 ** -n,
        limit_set=lambda x: np.ones_like(x, dtype=bool),
        symbol=lambda x, n: 1.0 / x,
        limit_symbol=lambda x: 1.0 / x,
        # on (0, eps) only X_inf remains: |1/(1/x - z0)| <= eps / (1 - z0 eps)
        tail=lambda n: eps / abs(1.0 - z0 * eps),
        truncation=eps,
        n_max=n_max,
        z0=z0,
    )


def weidmann_exercise(n_max: int = 6, points_per_piece: int = 17, z0: complex = -1.0) -> MultiplicationScenario:
    """X = X_n = [0, 1/2] u [2, T], X_inf = [0, 1/2], a_n(x) = x^n, a_inf = 0."""
    t = 2.0 ** (n_max + 2)
    left = piecewise_grid([0.0, 0.5], points_per_piece)
    right = piecewise_grid([2.0 ** k for k in range(1, n_max + 3)], points_per_piece)
    x, w = grid_union(left, right)
    return MultiplicationScenario(
        name="weidmann",
        points=x,
        weights=w,
        approx_set=lambda x, n: np.ones_like(x, dtype=bool),
        limit_set=lambda x: x <= 0.5,
        symbol=lambda x, n: x ** n,
        limit_symbol=lambda x: np.zeros_like(x),
        tail=lambda n: 1.0 / abs(t ** n - z0),
        truncation=t,
        n_max=n_max,
        z0=z0,
    )


EXAMPLES = {"A": example_a, "B": example_b, "weidmann": weidmann_exercise}


def named_example(name: str, **kwargs) -> MultiplicationScenario:
    try:
        factory = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown multiplication example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return factory(**kwargs)


def rate_table(spec: MultiplicationScenario) -> List[float]:
    return [spec.rate(n) for n in range(1, spec.n_max + 1)]
