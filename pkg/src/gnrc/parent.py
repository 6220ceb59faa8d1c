"""Parent spaces: one Hilbert space into which all approximating spaces embed.

The central construction is the associated parent space
H_inf (+) H_1 (+) ... (+) H_N with isometries

    iota_inf f = (f, 0, ..., 0),
    iota_n f   = (J_n f, 0, ..., W_n f, ..., 0),    W_n = (I - J_n* J_n)^(1/2),

which factorises each identification operator as J_n = iota_inf* iota_n.
Weidmann's resolvent difference D_n = iota_n R_n iota_n* - iota_inf R_inf iota_inf*
is evaluated on such a parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .errors import IndexOutOfRange, MalformedTestVector, NotContraction, SpaceMismatch
from .hilbert import (
    DEFAULT_TOL,
    LinearMap,
    ResolventSource,
    Vector,
    WeightedSpace,
    direct_sum,
    identity,
    isometry_checks,
    operator_norm,
    psd_sqrt,
    self_adjoint_eigen,
)
from .que import QueReport, que_quantities

CONSTRUCTIONS = ("associated", "minimal", "natural", "custom")
CONTRACTION_SLACK = 1e-10
# I - J*J and I - JJ* have scale one for contractions, so round-off is judged
# against 1 rather than against their (possibly vanishing) own norm.
DEFECT_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class DefectPair:
    w_dom: LinearMap
    w_cod: LinearMap


def defect_operators(j: LinearMap) -> DefectPair:
    if operator_norm(j) > 1.0 + CONTRACTION_SLACK:
        raise NotContraction(f"||J|| = {operator_norm(j):.15g} exceeds 1")
    jh = j.adjoint
    return DefectPair(
        psd_sqrt(identity(j.domain) - jh @ j, clamp=DEFECT_CLAMP),
        psd_sqrt(identity(j.codomain) - j @ jh, clamp=DEFECT_CLAMP),
    )


@dataclass(frozen=True)
class DefectPairCheck:
    max_eigenvalue: float
    min_eigenvalue: float
    intertwining: float
    intertwining_adjoint: float
    spectra_mismatch: float


def check_defect_pair(j: LinearMap, pair: DefectPair) -> DefectPairCheck:
    """Residuals for the structural facts relating W and W' to J."""
    ev_dom = self_adjoint_eigen(pair.w_dom).eigenvalues
    ev_cod = self_adjoint_eigen(pair.w_cod).eigenvalues
    jh = j.adjoint
    a = ev_dom[np.abs(ev_dom - 1.0) > 1e-9]
    b = ev_cod[np.abs(ev_cod - 1.0) > 1e-9]
    if a.size != b.size:
        mismatch = float("inf")
    else:
        mismatch = float(np.max(np.abs(a - b))) if a.size else 0.0
    return DefectPairCheck(
        max_eigenvalue=float(max(ev_dom[-1], ev_cod[-1])),
        min_eigenvalue=float(min(ev_dom[0], ev_cod[0])),
        intertwining=operator_norm(j @ pair.w_dom - pair.w_cod @ j),
        intertwining_adjoint=operator_norm(pair.w_dom @ jh - jh @ pair.w_cod),
        spectra_mismatch=mismatch,
    )


@dataclass(frozen=True, eq=False)
class ParentSpace:
    """Components [H_inf, H_1, ..., H_N] with isometries into ``space``.

    For the associated construction ``js`` and ``defects`` hold J_n and the
    defect operators; index n refers to ``components[n]``.
    """

    space: WeightedSpace
    components: tuple
    iotas: tuple
    construction: str
    js: Optional[tuple] = None
    defects: Optional[tuple] = None
    offsets: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if len(self.components) != len(self.iotas) or len(self.components) < 2:
            raise ValueError("need matching components and iotas, at least H_inf and one H_n")
        for comp, iota in zip(self.components, self.iotas):
            if not iota.domain.compatible(comp) or not iota.codomain.compatible(self.space):
                raise SpaceMismatch("each iota must map its component into the parent space")

    @property
    def n_max(self) -> int:
        return len(self.components) - 1

    def check_index(self, n: int):
        if not 1 <= n <= self.n_max:
            raise IndexOutOfRange(f"n={n} not in 1..{self.n_max}")

    def j(self, n: int) -> LinearMap:
        self.check_index(n)
        if self.js is not None:
            return self.js[n - 1]
        return self.iotas[0].adjoint @ self.iotas[n]

    def defect(self, n: int) -> DefectPair:
        self.check_index(n)
        if self.defects is not None:
            return self.defects[n - 1]
        return defect_operators(self.j(n))

    def isometry_residuals(self) -> List[float]:
        return [isometry_checks(i).isometry_residual for i in self.iotas]

    def working_pair(self, n: int):
        """(iota_inf, iota_n) on the smallest space where D_n lives.

        For the associated construction D_n only involves the blocks H_inf and
        H_n, so the pair is rebuilt on H_inf (+) H_n.
        """
        self.check_index(n)
        if self.construction != "associated":
            return self.iotas[0], self.iotas[n]
        h_inf, h_n = self.components[0], self.components[n]
        ds = direct_sum([h_inf, h_n], label=f"{h_inf.label} (+) {h_n.label}")
        w = self.defect(n).w_dom
        iota_n = ds.inject[0] @ self.j(n) + ds.inject[1] @ w
        return ds.inject[0], iota_n


def _stack_blocks(total: WeightedSpace, offsets, k_of_block: Dict[int, np.ndarray], domain):
    e = np.zeros((total.dim, domain.dim), dtype=complex)
    for k, mat in k_of_block.items():
        e[offsets[k]:offsets[k + 1], :] = mat
    return LinearMap(domain, total, e)


def build_associated_parent(js: Sequence[LinearMap], label: str = "H") -> ParentSpace:
    js = tuple(js)
    if not js:
        raise ValueError("need at least one identification operator")
    h_inf = js[0].codomain
    for j in js:
        if not j.codomain.compatible(h_inf):
            raise SpaceMismatch("all identification operators need one common codomain")
    defects = tuple(defect_operators(j) for j in js)
    comps = (h_inf,) + tuple(j.domain for j in js)
    ds = direct_sum(comps, label=label)
    iotas = [ds.inject[0]]
    for n, (j, pair) in enumerate(zip(js, defects), start=1):
        iotas.append(_stack_blocks(ds.sum, ds.offsets, {0: j.entries, n: pair.w_dom.entries}, j.domain))
    return ParentSpace(ds.sum, comps, tuple(iotas), "associated", js, defects, ds.offsets)


def build_subspace_parent(space: WeightedSpace, masks: Sequence[np.ndarray],
                          labels: Optional[Sequence[str]] = None,
                          construction: str = "natural") -> ParentSpace:
    """Parent made of coordinate subspaces (extension by zero); masks[0] is H_inf."""
    comps, iotas = [], []
    for k, mask in enumerate(masks):
        idx = np.flatnonzero(mask)
        label = labels[k] if labels else f"{space.label}[{k}]"
        comp = WeightedSpace(label, space.weights[idx])
        e = np.zeros((space.dim, idx.size))
        e[idx, np.arange(idx.size)] = 1.0
        comps.append(comp)
        iotas.append(LinearMap(comp, space, e))
    return ParentSpace(space, tuple(comps), tuple(iotas), construction)


@dataclass(frozen=True)
class WeidmannReport:
    d_norm: float
    summand_pinf_pn: float
    summand_pinfperp_pn: float
    summand_pinf_pnperp: float
    commutator_norm: float
    decomposition_residual: float


def _check_sources(parent: ParentSpace, r_n: ResolventSource, r_inf: ResolventSource, n: int):
    parent.check_index(n)
    if not r_n.space.compatible(parent.components[n]):
        raise SpaceMismatch(f"r_n does not act on component {n}")
    if not r_inf.space.compatible(parent.components[0]):
        raise SpaceMismatch("r_inf does not act on H_inf")
    if r_n.z0 != r_inf.z0:
        raise ValueError("resolvents must share z0")


def lifted_resolvent(iota: LinearMap, r: LinearMap) -> LinearMap:
    return iota @ r @ iota.adjoint


def _weidmann_parts(parent, r_n, r_inf, n, z=None):
    _check_sources(parent, r_n, r_inf, n)
    iota_inf, iota_n = parent.working_pair(n)
    rn = r_n.resolvent if z is None else r_n.at(z)
    ri = r_inf.resolvent if z is None else r_inf.at(z)
    d = lifted_resolvent(iota_n, rn) - lifted_resolvent(iota_inf, ri)
    return iota_inf, iota_n, d


def weidmann_report(parent: ParentSpace, r_n: ResolventSource, r_inf: ResolventSource,
                    n: int) -> WeidmannReport:
    iota_inf, iota_n, d = _weidmann_parts(parent, r_n, r_inf, n)
    eye = identity(d.domain)
    p_n = iota_n @ iota_n.adjoint
    p_inf = iota_inf @ iota_inf.adjoint
    s1 = p_inf @ d @ p_n
    s2 = (eye - p_inf) @ d @ p_n
    s3 = p_inf @ d @ (eye - p_n)
    return WeidmannReport(
        d_norm=operator_norm(d),
        summand_pinf_pn=operator_norm(s1),
        summand_pinfperp_pn=operator_norm(s2),
        summand_pinf_pnperp=operator_norm(s3),
        commutator_norm=operator_norm(p_n @ p_inf - p_inf @ p_n),
        decomposition_residual=operator_norm(d - s1 - s2 - s3),
    )


@dataclass(frozen=True)
class SummandResiduals:
    intertwine: float
    strong_defect1: float
    strong_defect2: float
    defect_form1: float
    defect_form2: float

    def max(self) -> float:
        return max(self.intertwine, self.strong_defect1, self.strong_defect2,
                   self.defect_form1, self.defect_form2)


def summand_identities(parent: ParentSpace, r_n: ResolventSource, r_inf: ResolventSource,
                       n: int, que_rep: QueReport,
                       report: Optional[WeidmannReport] = None) -> SummandResiduals:
    """Residuals of the exact norm identities for the three summands of D_n."""
    rep = report or weidmann_report(parent, r_n, r_inf, n)
    pair = parent.defect(n)
    w_rn = operator_norm(pair.w_dom @ r_n.resolvent)
    w_rinf = operator_norm(pair.w_cod @ r_inf.resolvent)
    return SummandResiduals(
        intertwine=abs(rep.summand_pinf_pn - que_rep.intertwine),
        strong_defect1=abs(rep.summand_pinfperp_pn ** 2 - que_rep.strong_defect1),
        strong_defect2=abs(rep.summand_pinf_pnperp ** 2 - que_rep.strong_defect2),
        defect_form1=abs(rep.summand_pinfperp_pn - w_rn),
        defect_form2=abs(rep.summand_pinf_pnperp - w_rinf),
    )


@dataclass(frozen=True)
class ProjectionDiagnostics:
    commutator_norm: float
    commutes: bool
    p_diff_norm: float


def projection_diagnostics(parent: ParentSpace, n: int, tol: float = 1e-10) -> ProjectionDiagnostics:
    iota_inf, iota_n = parent.working_pair(n)
    p_n = iota_n @ iota_n.adjoint
    p_inf = iota_inf @ iota_inf.adjoint
    comm = operator_norm(p_n @ p_inf - p_inf @ p_n)
    return ProjectionDiagnostics(comm, comm <= tol, operator_norm(p_n - p_inf))


PANEL_KEYS = (
    "j_partial_isometry",
    "w_projection",
    "w_spectrum_01",
    "j_w_zero",
    "jstar_partial_isometry",
    "w_inf_projection",
    "w_inf_spectrum_01",
    "w_inf_j_zero",
    "projections_commute",
)


@dataclass(frozen=True)
class PanelResult:
    predicates: Dict[str, bool]
    residuals: Dict[str, float]

    @property
    def unanimous(self) -> bool:
        vals = set(self.predicates.values())
        return len(vals) == 1

    @property
    def verdict(self) -> bool:
        """The common value when unanimous."""
        return all(self.predicates.values())


def _spectrum_01_distance(w: LinearMap) -> float:
    ev = self_adjoint_eigen(w).eigenvalues
    return float(np.max(np.minimum(np.abs(ev), np.abs(ev - 1.0))))


def partial_isometry_panel(j: LinearMap, tol: float = DEFAULT_TOL) -> PanelResult:
    """Nine conditions that are all equivalent to J being a partial isometry."""
    pair = defect_operators(j)
    jh = j.adjoint
    w, wi = pair.w_dom, pair.w_cod
    parent = build_associated_parent([j])
    res = {
        "j_partial_isometry": operator_norm(j - j @ jh @ j),
        "w_projection": operator_norm(w @ w - w),
        "w_spectrum_01": _spectrum_01_distance(w),
        "j_w_zero": operator_norm(j @ w),
        "jstar_partial_isometry": operator_norm(jh - jh @ j @ jh),
        "w_inf_projection": operator_norm(wi @ wi - wi),
        "w_inf_spectrum_01": _spectrum_01_distance(wi),
        "w_inf_j_zero": operator_norm(wi @ j),
        "projections_commute": projection_diagnostics(parent, 1).commutator_norm,
    }
    return PanelResult({k: res[k] <= tol for k in PANEL_KEYS}, res)


@dataclass(frozen=True)
class MinimalParent:
    dims: List[int]
    total_dim: int
    smallest_nonzero: List[float]


def minimal_parent(parent: ParentSpace, rank_tol: Optional[float] = None) -> MinimalParent:
    """Block dimensions of the closed span of all embedded copies.

    The n-th block shrinks to the range of W_n, whose dimension is the
    numerical rank at ``rank_tol`` (default 1e-8 * ||W_n||).
    """
    if parent.construction != "associated":
        raise ValueError("minimal_parent needs an associated parent space")
    dims = [parent.components[0].dim]
    smallest = []
    for n in range(1, parent.n_max + 1):
        w = parent.defect(n).w_dom
        ev = np.abs(self_adjoint_eigen(w).eigenvalues)
        top = float(ev.max()) if ev.size else 0.0
        tol = rank_tol if rank_tol is not None else 1e-8 * top
        nz = ev[ev > tol]
        dims.append(int(nz.size))
        smallest.append(float(nz.min()) if nz.size else 0.0)
    return MinimalParent(dims, int(sum(dims)), smallest)


@dataclass(frozen=True, eq=False)
class TestVector:
    """f = (R_inf g, f_1, ..., f_N) with finitely many nonzero blocks."""

    g: Vector
    blocks: Dict[int, Vector] = field(default_factory=dict)

    __test__ = False


def test_vector_from_parent(parent: ParentSpace, r_inf: ResolventSource, f: Vector,
                            tol: float = 1e-10) -> TestVector:
    """Split a parent vector into g (with f_inf = R_inf g) and the other blocks."""
    if not f.space.compatible(parent.space):
        raise MalformedTestVector("vector does not live in the parent space")
    f_inf = parent.iotas[0].adjoint @ f
    r = r_inf.resolvent.entries
    g, *_ = np.linalg.lstsq(r, f_inf.coeffs, rcond=None)
    miss = np.linalg.norm(r @ g - f_inf.coeffs)
    if miss > tol * max(1.0, np.linalg.norm(f_inf.coeffs)):
        raise MalformedTestVector(f"f_inf is not in the range of R_inf (residual {miss:.2e})")
    blocks = {}
    if parent.construction == "associated":
        for n in range(1, parent.n_max + 1):
            sl = slice(parent.offsets[n], parent.offsets[n + 1])
            if np.any(f.coeffs[sl]):
                blocks[n] = Vector(parent.components[n], f.coeffs[sl])
    return TestVector(Vector(parent.components[0], g), blocks)


test_vector_from_parent.__test__ = False


@dataclass(frozen=True)
class StrongConvergenceRow:
    n: int
    vector: int
    measured: float
    bound: float
    commutator: float
    bound_applies: bool

    @property
    def holds(self) -> bool:
        return (not self.bound_applies) or self.measured <= self.bound + 1e-10


@dataclass(frozen=True)
class StrongConvergenceTable:
    rows: List[StrongConvergenceRow]

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows)

    def measured(self, vector: int) -> Dict[int, float]:
        return {r.n: r.measured for r in self.rows if r.vector == vector}


def _parent_vector(parent: ParentSpace, tv: TestVector, r_inf: LinearMap) -> Vector:
    f = parent.iotas[0] @ (r_inf @ tv.g)
    for k, fk in tv.blocks.items():
        parent.check_index(k)
        if not fk.space.compatible(parent.components[k]):
            raise MalformedTestVector(f"block {k} has the wrong space")
        coeffs = np.zeros(parent.space.dim, dtype=complex)
        coeffs[parent.offsets[k]:parent.offsets[k + 1]] = fk.coeffs
        f = f + Vector(parent.space, coeffs)
    return f


def projection_strong_convergence(parent: ParentSpace, r_inf: ResolventSource,
                                  test_g: Sequence[Union[Vector, TestVector]],
                                  ns: Optional[Sequence[int]] = None) -> StrongConvergenceTable:
    if parent.construction != "associated":
        raise ValueError("strong projection convergence is tabulated on the associated parent")
    tvs = []
    for t in test_g:
        tv = t if isinstance(t, TestVector) else TestVector(t)
        if not tv.g.space.compatible(parent.components[0]):
            raise MalformedTestVector("g must live in H_inf")
        tvs.append(tv)
    r = r_inf.resolvent
    p_inf = parent.iotas[0] @ parent.iotas[0].adjoint
    rows = []
    for n in ns or range(1, parent.n_max + 1):
        parent.check_index(n)
        iota_n = parent.iotas[n]
        j = parent.j(n)
        w_inf = parent.defect(n).w_cod
        defect_cod = identity(j.codomain) - j @ j.adjoint
        for idx, tv in enumerate(tvs):
            f = _parent_vector(parent, tv, r)
            pn_f = iota_n @ (iota_n.adjoint @ f)
            pinf_f = p_inf @ f
            measured = (pn_f - pinf_f).norm()
            comm = (iota_n @ (iota_n.adjoint @ pinf_f) - p_inf @ pn_f).norm()
            rg = r @ tv.g
            bound = float(np.sqrt((defect_cod @ rg).norm() ** 2 + (w_inf @ rg).norm() ** 2))
            rows.append(StrongConvergenceRow(n, idx, measured, bound, comm, n not in tv.blocks))
    return StrongConvergenceTable(rows)


def weidmann_to_que(parent: ParentSpace, r_n: ResolventSource, r_inf: ResolventSource,
                    n: int) -> QueReport:
    """QUE report with J = iota_inf* iota_n, computed from compressions of D_n."""
    iota_inf, iota_n, d = _weidmann_parts(parent, r_n, r_inf, n)
    eye = identity(d.domain)
    p_n = iota_n @ iota_n.adjoint
    p_inf = iota_inf @ iota_inf.adjoint
    dh = d.adjoint
    j = iota_inf.adjoint @ iota_n
    rn, ri = r_n.resolvent, r_inf.resolvent
    binding = r_n.z0.imag != 0 or not (r_n.self_adjoint and r_inf.self_adjoint)
    base = que_quantities(j, rn, ri, binding)
    vals = dict(
        defect1=operator_norm(iota_n.adjoint @ (eye - p_inf) @ d @ iota_n),
        defect2=operator_norm(iota_inf.adjoint @ (eye - p_n) @ (-d) @ iota_inf),
        intertwine=operator_norm(iota_inf.adjoint @ d @ iota_n),
        defect1_star=operator_norm(iota_n.adjoint @ (eye - p_inf) @ dh @ iota_n),
        defect2_star=operator_norm(iota_inf.adjoint @ (eye - p_n) @ (-dh) @ iota_inf),
        intertwine_star=operator_norm(iota_inf.adjoint @ dh @ iota_n),
    )
    keys = ["defect1", "defect2", "intertwine"]
    if binding:
        keys += ["defect1_star", "defect2_star", "intertwine_star"]
    delta = max([max(base.norm_j - 1.0, 0.0)] + [vals[k] for k in keys])
    out = base.as_dict()
    out.update(vals, delta=delta)
    return QueReport(**out)
