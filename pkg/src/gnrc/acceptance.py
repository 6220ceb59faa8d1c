"""Built-in acceptance suite: numbered criteria with measured values."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .config import GraphLikeParams, MultiplicationParams, UnitIntervalParams
from .hilbert import (
    LinearMap,
    Vector,
    identity,
    isometry_checks,
    operator_norm,
    pseudo_resolvent_residual,
    self_adjoint_eigen,
)
from .parent import (
    build_associated_parent,
    minimal_parent,
    partial_isometry_panel,
    projection_diagnostics,
    projection_strong_convergence,
    weidmann_report,
    weidmann_to_que,
)
from .que import QueInstance, que_report, rescale_identification, speed_lift
from .random_instances import (
    generic_contraction,
    partial_isometry,
    random_instance,
    random_space,
)
from .scenarios import graphlike as gl
from .scenarios import multiplication as mult
from .scenarios import unit_interval as ui
from .study import case_factory

N_UNIT = range(1, 7)
N_GRAPH = (1, 2, 4, 8)
SEED = 20240611


@dataclass
class CriterionResult:
    id: int
    title: str
    passed: bool
    detail: str
    values: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.id:>2} ({self.seconds:5.1f}s) {self.title}: {self.detail}"


def _builtin_cases() -> Iterable[tuple]:
    for ex in ("A", "B", "weidmann"):
        f = case_factory(MultiplicationParams(example=ex), 6, -1.0)
        for n in range(1, 7):
            yield f"mult-{ex} n={n}", f(n)
    f = case_factory(UnitIntervalParams(), 6, -1.0)
    for n in N_UNIT:
        yield f"unit n={n}", f(n)
    for mode in gl.MODES:
        f = case_factory(GraphLikeParams(mode=mode), max(N_GRAPH), -1.0)
        for n in N_GRAPH:
            yield f"graph-{mode} n={n}", f(n)


def _random_instances(count: int = 200) -> Iterable[tuple]:
    rng = np.random.default_rng(SEED)
    kinds = ("contraction", "partial_isometry", "expanding")
    for i in range(count):
        inst = random_instance(rng, 12, kinds[i % 3], complex_point=bool((i // 3) % 2),
                               related=bool((i // 6) % 2))
        yield f"random #{i} ({kinds[i % 3]})", inst


def _normalized(inst: QueInstance):
    """Instance with J of norm <= 1, plus the predicted bound on its delta."""
    rep = que_report(inst)
    if rep.norm_j <= 1.0 + 1e-12:
        return inst, rep, None
    resc = rescale_identification(inst, rep)
    inst_hat = inst.with_j(resc.j_hat)
    return inst_hat, que_report(inst_hat), resc.delta_hat


@dataclass
class _RoundTrip:
    label: str
    que_excess: float        # max QUE field - d_norm on the factorizing parent
    compress_excess: float   # same for the compression-based report
    lift_excess: float       # d_norm(assoc) - speed_lift
    commute_excess: float    # d_norm(assoc) - 3 delta, or -inf if not commuting
    rescale_excess: float    # delta(J hat) - delta_hat, or -inf


_ROUND_TRIPS: Optional[List[_RoundTrip]] = None


def _round_trip(label, inst, parent=None, index=1, delta_hat=None, rep=None) -> _RoundTrip:
    rep = rep or que_report(inst)
    if parent is None:
        parent = build_associated_parent([inst.j])
        index = 1
    wr = weidmann_report(parent, inst.r1, inst.r2, index)
    fields = list(rep.delta_fields().values()) + [rep.defect1_star, rep.defect2_star,
                                                  rep.intertwine_star, rep.delta]
    que_excess = max(fields) - wr.d_norm
    comp = weidmann_to_que(parent, inst.r1, inst.r2, index)
    compress_excess = max(list(comp.delta_fields().values()) + [comp.delta]) - wr.d_norm
    if parent.construction == "associated":
        wa = wr
    else:
        wa = weidmann_report(build_associated_parent([inst.j]), inst.r1, inst.r2, 1)
    lift_excess = wa.d_norm - speed_lift(rep.delta, rep.norm_r2)
    commute_excess = wa.d_norm - 3.0 * rep.delta if wa.commutator_norm <= 1e-10 else -math.inf
    rescale_excess = rep.delta - delta_hat if delta_hat is not None else -math.inf
    return _RoundTrip(label, que_excess, compress_excess, lift_excess, commute_excess,
                      rescale_excess)


def round_trips() -> List[_RoundTrip]:
    """Both directions of the equivalence on built-in scenarios and random instances (cached)."""
    global _ROUND_TRIPS
    if _ROUND_TRIPS is None:
        out = []
        for label, case in _builtin_cases():
            out.append(_round_trip(label, case.inst, case.parent, case.index))
        for label, inst in _random_instances():
            inst_n, rep, delta_hat = _normalized(inst)
            out.append(_round_trip(label, inst_n, delta_hat=delta_hat, rep=rep))
        _ROUND_TRIPS = out
    return _ROUND_TRIPS


# ------------------------------------------------------------------ criteria


def c1_spectra() -> CriterionResult:
    errs = []
    for n in N_UNIT:
        space = ui.discrete_space(n)
        ev = self_adjoint_eigen(LinearMap(space, space, ui.loop_laplacian(n))).eigenvalues
        errs.append(float(np.max(np.abs(ev - np.sort(ui.loop_spectrum(n))))))
    worst = max(errs)
    return CriterionResult(1, "loop Laplacian spectra (n=1..6)", worst <= 1e-10,
                           f"max |eig - (1-cos(k pi/2^n))/3| = {worst:.2e} (tol 1e-10)",
                           {"errors": errs})


def c2_defect_identity() -> CriterionResult:
    limit = ui.UnitIntervalLimit(6, ui.default_modes(6))
    gram_errs, model_errs = [], []
    for n in N_UNIT:
        space = ui.discrete_space(n)
        mu = ui.vertex_weights(n)
        jtj = LinearMap(space, space, ui.gram(n) / mu[:, None])
        lap3 = LinearMap(space, space, ui.path_laplacian(n) / 3.0)
        gram_errs.append(operator_norm(identity(space) - jtj - lap3))
        j = limit.identification(n, space)
        model_errs.append(operator_norm(j.adjoint @ j - jtj))
    worst = max(gram_errs + model_errs)
    return CriterionResult(
        2, "I - J*J = Delta_G / 3 (n=1..6)", worst <= 1e-12,
        f"closed-form Gram residual {max(gram_errs):.2e}, L2 model vs Gram {max(model_errs):.2e} (tol 1e-12)",
        {"gram": gram_errs, "model": model_errs})


def c3_closed_form() -> CriterionResult:
    table = ui.unit_interval_norm_table(N_UNIT)
    errs = [abs(r.w2_rhalf - 2.0 / (3.0 * math.sqrt(1.0 + 4.0 ** (r.n + 1)))) for r in table.rows]
    agree = max(r.max_disagreement for r in table.rows)
    ok = max(errs) <= 1e-10 and agree <= 1e-12
    return CriterionResult(
        3, "||W^2 R^(1/2)|| = 2/(3 sqrt(1+4^(n+1)))", ok,
        f"n=1 value {table.rows[0].w2_rhalf:.7f}; max error {max(errs):.2e} (tol 1e-10); "
        f"generic vs oracle {agree:.2e} (tol 1e-12)", {"errors": errs})


def c4_o_classes() -> CriterionResult:
    table = ui.unit_interval_norm_table(N_UNIT)
    rows = table.rows
    errs = [abs(r.w2_r - 2.0 / (3.0 * (1.0 + 4.0 ** (r.n + 1)))) for r in rows]
    r2 = [b.w2_r / a.w2_r for a, b in zip(rows, rows[1:])]
    r1 = [b.w_r / a.w_r for a, b in zip(rows, rows[1:])]
    argmax_ok = all(r.w_r_argmax == 1 for r in rows if r.n >= 2)
    agree = max(r.max_disagreement for r in rows)
    ok = (max(errs) <= 1e-10 and all(0.225 <= x <= 0.275 for x in r2)
          and all(0.45 <= x <= 0.55 for x in r1) and argmax_ok and agree <= 1e-12)
    return CriterionResult(
        4, "O(4^-n) for ||W^2 R||, O(2^-n) for ||W R||", ok,
        f"oracle error {max(errs):.2e}; W^2R ratios [{min(r2):.4f}, {max(r2):.4f}]; "
        f"WR ratios [{min(r1):.4f}, {max(r1):.4f}]; argmax at lambda_1: {argmax_ok}",
        {"ratios_w2r": r2, "ratios_wr": r1})


def c5_eigenvalues() -> CriterionResult:
    worst = 0.0
    for n in range(3, 9):
        for k in range(0, 5):
            e = ui.eigenvalue_convergence(n, k)
            if k:
                worst = max(worst, e.error / (k ** 4 * 4.0 ** -n))
    return CriterionResult(5, "|2 4^n (1-cos(k pi/2^n)) - k^2 pi^2| <= 10 k^4 4^-n", worst <= 10.0,
                           f"largest fitted constant C = {worst:.4f} (limit 10)", {"C": worst})


def c6_multiplication() -> CriterionResult:
    worst_rate, worst_three = -math.inf, -math.inf
    for ex in ("A", "B", "weidmann"):
        spec = mult.named_example(ex, n_max=6)
        for n in range(1, 7):
            b = mult.build_multiplication(spec, n)
            d = weidmann_report(b.natural_parent, b.inst.r1, b.inst.r2, n).d_norm
            worst_rate = max(worst_rate, d - (2.0 ** -n + spec.tail(n)))
            worst_three = max(worst_three, d - 3.0 * mult.mult_sup_conditions(spec, n))
    ok = worst_rate <= 0 and worst_three <= 0
    return CriterionResult(
        6, "multiplication examples: ||D_n|| <= 2^-n + tail and <= 3 delta'_n", ok,
        f"max(||D_n|| - 2^-n - tail) = {worst_rate:.3e}; max(||D_n|| - 3 delta') = {worst_three:.3e}")


def c7_weidmann_to_que() -> CriterionResult:
    rts = round_trips()
    worst = max(max(r.que_excess, r.compress_excess) for r in rts)
    bad = [r.label for r in rts if max(r.que_excess, r.compress_excess) > 1e-10]
    return CriterionResult(
        7, f"QUE fields <= ||D_n|| ({len(rts)} instances)", not bad,
        f"max(field - ||D_n||) = {worst:.3e} (tol 1e-10)" + (f"; failures: {bad[:5]}" if bad else ""))


def c8_que_to_weidmann() -> CriterionResult:
    rts = round_trips()
    lift = max(r.lift_excess for r in rts)
    comm = [r.commute_excess for r in rts if r.commute_excess > -math.inf]
    resc = [r.rescale_excess for r in rts if r.rescale_excess > -math.inf]
    bad = [r.label for r in rts if r.lift_excess > 1e-9 or r.commute_excess > 1e-9
           or r.rescale_excess > 1e-9]
    return CriterionResult(
        8, f"||D_n|| <= speed_lift(delta) and <= 3 delta when commuting ({len(rts)} instances)",
        not bad,
        f"max(||D|| - lift) = {lift:.3e}; max(||D|| - 3 delta) = {max(comm):.3e} over {len(comm)} "
        f"commuting; max(delta(J hat) - delta_hat) = {max(resc):.3e} over {len(resc)} rescaled"
        + (f"; failures: {bad[:5]}" if bad else ""))


def c9_panel(count: int = 1000) -> CriterionResult:
    rng = np.random.default_rng(SEED + 9)
    disagree = wrong = 0
    for i in range(count):
        dom = random_space(rng, int(rng.integers(1, 7)), "H_n")
        cod = random_space(rng, int(rng.integers(1, 7)), "H_inf")
        exact = i % 2 == 0
        j = partial_isometry(rng, dom, cod) if exact else generic_contraction(rng, dom, cod)
        panel = partial_isometry_panel(j)
        if not panel.unanimous:
            disagree += 1
        elif panel.verdict != exact:
            wrong += 1
    return CriterionResult(9, f"nine-way partial-isometry panel ({count} contractions)",
                           disagree == 0 and wrong == 0,
                           f"{disagree} disagreements, {wrong} unanimous but wrong verdicts")


PSEUDO_PAIRS = ((-1.0, -2.0), (-0.5, -3.0), (1j, -1j))


def c10_pseudo_resolvent() -> CriterionResult:
    worst = 0.0
    labels = []
    for ex in ("A", "B", "weidmann"):
        labels.append((f"mult-{ex}", case_factory(MultiplicationParams(example=ex), 6, -1.0)(3)))
    labels.append(("unit", case_factory(UnitIntervalParams(), 6, -1.0)(3)))
    for mode in gl.MODES:
        labels.append((f"graph-{mode}", case_factory(GraphLikeParams(mode=mode), 2, -1.0)(2)))
    for _, case in labels:
        iota_inf, iota_n = case.parent.working_pair(case.index)
        fams = (
            lambda z, c=case, i=iota_n: i @ c.inst.r1.at(z) @ i.adjoint,
            lambda z, c=case, i=iota_inf: i @ c.inst.r2.at(z) @ i.adjoint,
        )
        for fam in fams:
            for z, w in PSEUDO_PAIRS:
                worst = max(worst, pseudo_resolvent_residual(fam, z, w))
    return CriterionResult(10, "pseudo-resolvent identity of lifted resolvents", worst <= 1e-10,
                           f"max residual {worst:.2e} over {len(labels)} scenarios x 2 families x 3 pairs")


def unit_test_vectors(limit: ui.UnitIntervalLimit) -> List[Vector]:
    """Five smooth functions on [0, 1], given by Neumann cosine coefficients."""
    k = np.arange(limit.space.dim, dtype=float)
    k[limit.modes:] = 0.0  # no weight on the lumped high modes
    vecs = []
    for coeffs in (
        np.where(k == 1, 1.0, 0.0),
        np.where(k == 2, 1.0, 0.0),
        np.where(k == 1, 1.0, 0.0) + np.where(k == 3, 0.5, 0.0),
        np.where((k >= 1) & (k < limit.modes), 1.0 / np.maximum(k, 1) ** 2, 0.0),
        np.where((k >= 1) & (k < limit.modes), np.cos(k) / np.maximum(k, 1) ** 3, 0.0) + np.where(k == 0, 1.0, 0.0),
    ):
        vecs.append(Vector(limit.space, coeffs))
    return vecs


def c11_strong_projection() -> CriterionResult:
    limit = ui.UnitIntervalLimit(6, ui.default_modes(6))
    js = [limit.identification(n, ui.discrete_space(n)) for n in N_UNIT]
    parent = build_associated_parent(js)
    r_inf = limit.resolvent_source(-1.0)
    table = projection_strong_convergence(parent, r_inf, unit_test_vectors(limit))
    factors = []
    for v in range(5):
        m = table.measured(v)
        factors.append(m[2] / m[6])
    p_diff = []
    for n in N_GRAPH:
        b = gl.build_graphlike(gl.GraphLikeScenario(mode="bumpy"), n)
        p_diff.append(projection_diagnostics(build_associated_parent([b.inst.j]), 1).p_diff_norm)
    p_err = max(abs(x - 1.0) for x in p_diff)
    ok = table.holds and min(factors) >= 1.5 and p_err <= 1e-10
    return CriterionResult(
        11, "strong projection convergence; ||P_n - P_inf|| = 1 for partial isometries", ok,
        f"bounds hold: {table.holds}; decay factors n=2->6 min {min(factors):.1f}; "
        f"| ||P_n - P_inf|| - 1 | = {p_err:.2e}", {"factors": factors})


def c12_graphlike() -> CriterionResult:
    msgs = []
    ok = True
    spec = gl.GraphLikeScenario(mode="bumpy")
    for n in N_GRAPH:
        b = gl.build_graphlike(spec, n)
        j = b.inst.j
        parent = build_associated_parent([j])
        co = isometry_checks(j.adjoint, 1e-10).is_isometry
        w_inf = operator_norm(parent.defect(1).w_cod)
        commutes = projection_diagnostics(parent, 1).commutes
        panel = partial_isometry_panel(j)
        dims = minimal_parent(parent).dims[1]
        good = co and w_inf <= 1e-10 and commutes and panel.verdict and panel.unanimous \
            and dims == gl.minimal_block_dim(spec)
        ok &= good
    msgs.append(f"bumpy battery {'passed' if ok else 'FAILED'} for n in {N_GRAPH}")
    spec = gl.GraphLikeScenario(mode="embedded")
    norm_err, comms, unit_err = 0.0, [], 0.0
    for n in (1, 2, 4, 8, 16):
        b = gl.build_graphlike(spec, n)
        expect = (1.0 - 2.0 * spec.a / (n * min(spec.edge_lengths))) ** -0.5
        norm_err = max(norm_err, abs(operator_norm(b.inst.j) - expect))
        unit_err = max(unit_err, abs(operator_norm(b.inst_hat.j) - 1.0))
        comms.append(projection_diagnostics(build_associated_parent([b.inst_hat.j]), 1).commutator_norm)
    decreasing = all(b < a for a, b in zip(comms, comms[1:])) and comms[-1] > 1e-10
    ok &= norm_err <= 1e-10 and decreasing and unit_err <= 1e-12
    msgs.append(f"embedded | ||J|| - kappa | = {norm_err:.2e}, | ||J hat|| - 1 | = {unit_err:.2e}, "
                f"commutators {', '.join(f'{c:.3f}' for c in comms)}")
    return CriterionResult(12, "graph-like bumpy battery and embedded rescaling", bool(ok), "; ".join(msgs))


def c13_winfty() -> CriterionResult:
    ns = list(N_UNIT)
    res = ui.winfty_order_experiment(ns, ui.MODES_PER_VERTEX * 2 ** max(ns))
    ok = abs(res.slope_w2_rhalf + 1.0) <= 0.15
    return CriterionResult(
        13, "limit-side defect decay (exploratory)", ok,
        f"slope ||W_inf^2 R_inf|| = {res.slope_w2_r:.3f} (conjectured -2, report only); "
        f"slope ||W_inf^2 R_inf^(1/2)|| = {res.slope_w2_rhalf:.3f} (required -1 +- 0.15); K = {res.modes}",
        {"slope_w2_r": res.slope_w2_r, "slope_w2_rhalf": res.slope_w2_rhalf})


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: c1_spectra,
    2: c2_defect_identity,
    3: c3_closed_form,
    4: c4_o_classes,
    5: c5_eigenvalues,
    6: c6_multiplication,
    7: c7_weidmann_to_que,
    8: c8_que_to_weidmann,
    9: c9_panel,
    10: c10_pseudo_resolvent,
    11: c11_strong_projection,
    12: c12_graphlike,
    13: c13_winfty,
}


def run_criterion(cid: int) -> CriterionResult:
    t = time.perf_counter()
    try:
        res = CRITERIA[cid]()
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        res = CriterionResult(cid, "error", False, f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t
    return res


def verify_suite(only: Optional[Iterable[int]] = None, echo: Callable[[str], None] = print) -> int:
    ids = sorted(only) if only else sorted(CRITERIA)
    results = []
    for cid in ids:
        res = run_criterion(cid)
        echo(res.line())
        results.append(res)
    failed = [r.id for r in results if not r.passed]
    echo(f"{len(results) - len(failed)}/{len(results)} criteria passed"
         + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0
