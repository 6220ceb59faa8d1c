"""Thin tubular neighbourhoods of a star graph, discretized.

The limit space is L2 of a metric star graph (edges of lengths l_e, each cut
into L cells of width l_e / L). The approximating space at scale n consists of
one block per vertex neighbourhood plus, per edge, an L x m grid: L
longitudinal cells times m transversal points carrying the cross-section B_n
of total mass |B_n| = |B_1| n^-(d-1).

The identification operator averages over the cross-section,
(J f)(e, k) = |B_n|^-1/2 sum_y f(e, k, y) |B_n| / m, and ignores the vertex
blocks. In ``bumpy`` mode the edge cells keep their full width. In
``embedded`` mode the edge tubes are shortened by the vertex neighbourhoods,
l_e -> l_e - 2a/n, and cell k of the short tube is matched with cell k of the
full edge (an affine reparametrization), which scales J by
kappa_e = (1 - 2a/(n l_e))^-1/2 on edge e.

Operators: the limit is a finite-difference Kirchhoff Laplacian on the star;
the approximation applies the same longitudinal difference operator (with the
possibly shortened cells) to every transversal slice, adds a transversal
Neumann Laplacian, and acts on vertex blocks by a multiple of n^2. These are
desk-scale surrogates with the structural properties the identification
operators are meant to exhibit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import DegenerateEdge
from ..hilbert import LinearMap, ResolventSource, WeightedSpace
from ..que import QueInstance, Rescaled, que_report, rescale_identification

MODES = ("bumpy", "embedded")


@dataclass(frozen=True)
class GraphLikeScenario:
    edge_lengths: Tuple[float, ...] = (1.0, 1.5, 2.0)
    vertex_dims: Tuple[int, ...] = (2, 2, 2, 2)
    cells: int = 8
    transversal: int = 4
    mode: str = "bumpy"
    a: float = 0.25
    dim: int = 2
    section_mass: float = 2.0
    z0: complex = -1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        lengths = tuple(float(x) for x in self.edge_lengths)
        object.__setattr__(self, "edge_lengths", lengths)
        object.__setattr__(self, "vertex_dims", tuple(int(d) for d in self.vertex_dims))
        if not lengths or min(lengths) <= 0:
            raise ValueError("edge lengths must be positive")
        if len(self.vertex_dims) != len(lengths) + 1:
            raise ValueError("a star with E edges has E + 1 vertices")
        if min(self.vertex_dims) < 0 or self.cells < 1 or self.transversal < 1:
            raise ValueError("discretization dimensions must be positive")
        if self.a <= 0 or self.dim < 1 or self.section_mass <= 0:
            raise ValueError("a, dim and section_mass must be positive")

    @property
    def ell_ref(self) -> float:
        """Reference length for the embedded rescaling: the shortest edge."""
        return min(self.edge_lengths)

    def section(self, n: int) -> float:
        return self.section_mass * float(n) ** -(self.dim - 1)


def kappa(a: float, n: int, length: float) -> float:
    return (1.0 - 2.0 * a / (n * length)) ** -0.5


def w_hat(a: float, n: int, length: float, ell_ref: float) -> float:
    ratio = (1.0 - 2.0 * a / (n * ell_ref)) / (1.0 - 2.0 * a / (n * length))
    return math.sqrt(max(1.0 - ratio, 0.0))


def _star_stiffness(cell_widths: np.ndarray, n_edges: int, cells: int) -> np.ndarray:
    """Symmetric conductance matrix: chains along edges, all first cells coupled."""
    size = n_edges * cells
    k = np.zeros((size, size))

    def link(i, j, g):
        k[i, i] += g
        k[j, j] += g
        k[i, j] -= g
        k[j, i] -= g

    for e in range(n_edges):
        h = cell_widths[e]
        for c in range(cells - 1):
            link(e * cells + c, e * cells + c + 1, 1.0 / h)
    for e in range(n_edges):
        for f in range(e + 1, n_edges):
            g = 2.0 / ((n_edges - 1) * (cell_widths[e] + cell_widths[f]))
            link(e * cells, f * cells, g)
    return k


def _chain(m: int) -> np.ndarray:
    k = np.zeros((m, m))
    for i in range(m - 1):
        k[i, i] += 1
        k[i + 1, i + 1] += 1
        k[i, i + 1] -= 1
        k[i + 1, i] -= 1
    return k


@dataclass(frozen=True, eq=False)
class GraphLikeBuild:
    spec: GraphLikeScenario
    n: int
    inst: QueInstance
    # the instance actually used for parents: J rescaled to norm one
    inst_hat: QueInstance
    kappa: np.ndarray
    w_hat: np.ndarray
    rescale: Optional[Rescaled]
    ell_ref: float


def limit_space(spec: GraphLikeScenario) -> WeightedSpace:
    h = np.repeat(np.asarray(spec.edge_lengths) / spec.cells, spec.cells)
    return WeightedSpace("L2(metric star)", h)


def limit_operator(spec: GraphLikeScenario) -> LinearMap:
    space = limit_space(spec)
    widths = np.asarray(spec.edge_lengths) / spec.cells
    k = _star_stiffness(widths, len(widths), spec.cells)
    return LinearMap(space, space, k / space.weights[:, None])


def build_graphlike(spec: GraphLikeScenario, n: int) -> GraphLikeBuild:
    if n < 1:
        raise ValueError("n must be >= 1")
    lengths = np.asarray(spec.edge_lengths)
    n_edges, cells, m = lengths.size, spec.cells, spec.transversal
    if spec.mode == "embedded":
        shrink = 2.0 * spec.a / (n * lengths)
        if np.any(shrink >= 1.0):
            bad = int(np.argmax(shrink))
            raise DegenerateEdge(f"edge {bad} of length {lengths[bad]} vanishes at n={n}")
        tube = lengths - 2.0 * spec.a / n
    else:
        tube = lengths.copy()
    section = spec.section(n)

    # approximating space: vertex blocks, then edges (e, k, y) in that order
    vol = float(n) ** -spec.dim
    vert_w = np.concatenate([np.full(d, vol / d) for d in spec.vertex_dims if d > 0])
    edge_w = np.repeat(tube / cells, cells * m) * (section / m)
    h_n = WeightedSpace(f"L2(X_{n})[{spec.mode}]", np.concatenate([vert_w, edge_w]))
    nv = vert_w.size

    widths = tube / cells
    k_long = _star_stiffness(widths, n_edges, cells)
    long_op = np.kron(k_long / np.repeat(widths, cells)[:, None], np.eye(m))
    trans_op = np.kron(np.eye(n_edges * cells), _chain(m) * (m / section) ** 2)
    op = np.zeros((h_n.dim, h_n.dim))
    op[:nv, :nv] = np.eye(nv) * (math.pi * n / spec.section_mass) ** 2
    op[nv:, nv:] = long_op + trans_op
    a_n = LinearMap(h_n, h_n, op)

    h_inf = limit_space(spec)
    j = np.zeros((h_inf.dim, h_n.dim))
    avg = math.sqrt(section) / m
    for i in range(h_inf.dim):
        j[i, nv + i * m: nv + (i + 1) * m] = avg
    j_map = LinearMap(h_n, h_inf, j)

    r_n = ResolventSource.from_operator(a_n, spec.z0)
    r_inf = ResolventSource.from_operator(limit_operator(spec), spec.z0)
    inst = QueInstance(h_n, h_inf, r_n, r_inf, j_map)

    ell = spec.ell_ref
    if spec.mode == "embedded":
        kap = np.array([kappa(spec.a, n, le) for le in lengths])
        wh = np.array([w_hat(spec.a, n, le, ell) for le in lengths])
        resc = rescale_identification(inst, que_report(inst))
        inst_hat = inst.with_j(resc.j_hat)
    else:
        kap = np.ones(n_edges)
        wh = np.zeros(n_edges)
        resc = None
        inst_hat = inst
    return GraphLikeBuild(spec, n, inst, inst_hat, kap, wh, resc, ell)


def minimal_block_dim(spec: GraphLikeScenario) -> int:
    """dim of ker J: all vertex blocks plus the transversally non-constant part."""
    return sum(spec.vertex_dims) + len(spec.edge_lengths) * spec.cells * (spec.transversal - 1)
