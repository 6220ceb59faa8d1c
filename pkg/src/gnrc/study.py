"""Convergence studies: one row of QUE and Weidmann quantities per n."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .config import (
    GraphLikeParams,
    MultiplicationParams,
    StudyConfig,
    Tolerances,
    UnitIntervalParams,
)
from .errors import GnrcError
from .hilbert import LinearMap, identity, isometry_checks, operator_norm
from .parent import (
    ParentSpace,
    WeidmannReport,
    build_associated_parent,
    summand_identities,
    weidmann_report,
)
from .que import QueInstance, QueReport, que_report, speed_lift
from .scenarios import graphlike as gl
from .scenarios import multiplication as mult
from .scenarios import unit_interval as ui

COLUMNS = (
    "n", "norm_j", "defect1", "defect2", "intertwine", "defect1_star", "defect2_star",
    "intertwine_star", "strong_defect1", "strong_defect2", "delta", "d_norm", "summand1",
    "summand2", "summand3", "commutator_norm", "bound_speed_lift", "bound_3delta",
    "oracle_residual", "pass",
)


@dataclass(frozen=True, eq=False)
class Case:
    """One instance of a family at a given n, with its parent and oracle."""

    inst: QueInstance
    parent: ParentSpace
    index: int
    # (weidmann report, que report) -> (residual, named oracle values)
    oracle: Callable[[WeidmannReport, QueReport], tuple]


def _multiplication_cases(params: MultiplicationParams, n_max: int, z0: complex):
    spec = mult.named_example(params.example, n_max=n_max,
                              points_per_piece=params.points_per_piece, z0=z0)

    def case(n):
        b = mult.build_multiplication(spec, n)
        terms = mult.sup_terms(spec, n)
        grid_sup = max(terms.values())
        tail = spec.tail(n)
        delta_prime = grid_sup + tail

        def oracle(wr, rep):
            rate = spec.rate(n)
            res = max(abs(wr.d_norm - grid_sup),
                      max(wr.d_norm - (rate + tail), 0.0),
                      max(wr.d_norm - 3.0 * delta_prime, 0.0))
            return res, {"rate": rate, "tail": tail, "grid_sup": grid_sup,
                         "delta_prime": delta_prime, "rate_plus_tail": rate + tail}

        return Case(b.inst, b.natural_parent, n, oracle)

    return case


def _unit_interval_cases(params: UnitIntervalParams, n_max: int, z0: complex):
    limit = ui.UnitIntervalLimit(n_max, params.cosine_modes or ui.default_modes(n_max))

    def case(n):
        b = ui.build_unit_interval(ui.UnitIntervalScenario(n, limit.modes, z0, n_max), limit)
        parent = build_associated_parent([b.inst.j])
        j = b.inst.j
        w2 = LinearMap(j.domain, j.domain, b.loop_laplacian)
        lam = 1.0 - np.cos(np.arange(2 ** n + 1) * np.pi / 2 ** n)
        defect1_oracle = float(np.max(np.abs((lam / 3.0) / (2.0 * 4.0 ** n * lam - z0))))

        def oracle(wr, rep):
            gram_res = operator_norm(identity(j.domain) - j.adjoint @ j - w2)
            return max(gram_res, abs(rep.defect1 - defect1_oracle)), {
                "defect1_closed_form": defect1_oracle, "gram_residual": gram_res}

        return Case(b.inst, parent, 1, oracle)

    return case


def _graphlike_cases(params: GraphLikeParams, n_max: int, z0: complex):
    spec = params.scenario(z0)

    def case(n):
        b = gl.build_graphlike(spec, n)
        parent = build_associated_parent([b.inst_hat.j])

        def oracle(wr, rep):
            if spec.mode == "embedded":
                kref = gl.kappa(spec.a, n, spec.ell_ref)
                w_inf = parent.defect(1).w_cod
                diag_w = np.repeat(b.w_hat, spec.cells)
                res = max(abs(operator_norm(b.inst.j) - kref),
                          float(np.max(np.abs(w_inf.entries - np.diag(diag_w)))))
                return res, {"kappa_ref": kref, "w_hat_max": float(b.w_hat.max())}
            res = isometry_checks(b.inst.j.adjoint).isometry_residual
            return res, {"coisometry_residual": res}

        return Case(b.inst_hat, parent, 1, oracle)

    return case


def case_factory(params, n_max: int, z0: complex) -> Callable[[int], Case]:
    if isinstance(params, MultiplicationParams):
        return _multiplication_cases(params, n_max, z0)
    if isinstance(params, UnitIntervalParams):
        return _unit_interval_cases(params, n_max, z0)
    if isinstance(params, GraphLikeParams):
        return _graphlike_cases(params, n_max, z0)
    raise TypeError(f"unsupported scenario parameters {params!r}")


@dataclass
class StudyRow:
    n: int
    norm_j: float = math.nan
    defect1: float = math.nan
    defect2: float = math.nan
    intertwine: float = math.nan
    defect1_star: float = math.nan
    defect2_star: float = math.nan
    intertwine_star: float = math.nan
    strong_defect1: float = math.nan
    strong_defect2: float = math.nan
    delta: float = math.nan
    d_norm: float = math.nan
    summand1: float = math.nan
    summand2: float = math.nan
    summand3: float = math.nan
    commutator_norm: float = math.nan
    bound_speed_lift: float = math.nan
    bound_3delta: float = math.nan
    oracle_residual: float = math.nan
    passed: bool = False
    error: Optional[str] = None
    oracles: Dict[str, float] = field(default_factory=dict)

    def values(self) -> List:
        out = [getattr(self, c) for c in COLUMNS[:-1]]
        return out + [self.passed]


def row_passes(row: StudyRow, tol: Tolerances) -> bool:
    """The pass rule; uses only numeric columns of the row."""
    nums = [getattr(row, c) for c in COLUMNS[1:-1] if c != "bound_3delta"]
    if not all(math.isfinite(v) for v in nums):
        return False
    d = row.d_norm
    que_fields = [max(row.norm_j - 1.0, 0.0), row.defect1, row.defect2, row.intertwine,
                  row.defect1_star, row.defect2_star, row.intertwine_star, row.delta]
    ok = all(v <= d + tol.que for v in que_fields)
    ok &= d <= row.bound_speed_lift + tol.bound
    if row.commutator_norm <= tol.commute:
        ok &= math.isfinite(row.bound_3delta) and d <= row.bound_3delta + tol.bound
    ok &= row.oracle_residual <= tol.oracle
    return bool(ok)


def compute_row(case_fn: Callable[[int], Case], n: int, tol: Tolerances) -> StudyRow:
    row = StudyRow(n)
    try:
        case = case_fn(n)
        inst = case.inst
        rep = que_report(inst)
        wr = weidmann_report(case.parent, inst.r1, inst.r2, case.index)
        summ = summand_identities(case.parent, inst.r1, inst.r2, case.index, rep, wr)
        oracle_res, oracles = case.oracle(wr, rep)
    except (GnrcError, ValueError, np.linalg.LinAlgError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    for name in ("norm_j", "defect1", "defect2", "intertwine", "defect1_star", "defect2_star",
                 "intertwine_star", "strong_defect1", "strong_defect2", "delta"):
        setattr(row, name, getattr(rep, name))
    row.d_norm = wr.d_norm
    row.summand1 = wr.summand_pinf_pn
    row.summand2 = wr.summand_pinfperp_pn
    row.summand3 = wr.summand_pinf_pnperp
    row.commutator_norm = wr.commutator_norm
    row.bound_speed_lift = speed_lift(rep.delta, rep.norm_r2)
    if wr.commutator_norm <= tol.commute:
        row.bound_3delta = 3.0 * rep.delta
    row.oracle_residual = max(summ.max(), wr.decomposition_residual, oracle_res)
    row.oracles = oracles
    row.passed = row_passes(row, tol)
    return row


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "nan" if not math.isfinite(v) else f"{v:.11e}"


@dataclass
class StudyResult:
    rows: List[StudyRow]
    csv_path: Optional[Path] = None
    summary_path: Optional[Path] = None

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)


def study_rows(cfg: StudyConfig, jobs: Optional[int] = None) -> List[StudyRow]:
    try:
        case_fn = case_factory(cfg.scenario, cfg.n_range[1], cfg.z0)
    except (GnrcError, ValueError) as exc:
        return [StudyRow(n, error=f"{type(exc).__name__}: {exc}") for n in cfg.ns]
    workers = jobs or cfg.jobs
    if workers <= 1:
        return [compute_row(case_fn, n, cfg.tolerances) for n in cfg.ns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: compute_row(case_fn, n, cfg.tolerances), cfg.ns))


def write_csv(rows: List[StudyRow], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])


def write_oracles(rows: List[StudyRow], path: Path) -> None:
    keys = sorted({k for r in rows for k in r.oracles})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n"] + keys)
        for r in rows:
            w.writerow([r.n] + [_fmt(r.oracles.get(k, math.nan)) for k in keys])


def write_summary(cfg: StudyConfig, rows: List[StudyRow], path: Path) -> None:
    sc = cfg.scenario
    tol = cfg.tolerances
    lines = [
        f"# Study: {sc.family}",
        "",
        f"- parameters: {sc}",
        f"- n range: {cfg.n_range[0]}..{cfg.n_range[1]}, z0 = {cfg.z0}",
        f"- tolerances: bound {tol.bound:g}, que {tol.que:g}, oracle {tol.oracle:g}, "
        f"commute {tol.commute:g}",
        "",
        "| n | delta | d_norm | speed_lift | 3 delta | commutator | oracle residual | pass |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        lines.append("| " + " | ".join(_fmt(v) for v in (
            r.n, r.delta, r.d_norm, r.bound_speed_lift, r.bound_3delta, r.commutator_norm,
            r.oracle_residual, r.passed)) + " |")
    errors = [r for r in rows if r.error]
    if errors:
        lines += ["", "## Row errors", ""]
        lines += [f"- n={r.n}: {r.error}" for r in errors]
    ok = all(r.passed for r in rows)
    lines += ["", f"**Overall: {'PASS' if ok else 'FAIL'}**", ""]
    path.write_text("\n".join(lines))


def run_study(cfg: StudyConfig, out_dir=None, jobs: Optional[int] = None) -> StudyResult:
    rows = study_rows(cfg, jobs)
    out = out_dir or cfg.outputs
    result = StudyResult(rows)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        result.csv_path = out / "study.csv"
        result.summary_path = out / "summary.md"
        write_csv(rows, result.csv_path)
        write_oracles(rows, out / "oracles.csv")
        write_summary(cfg, rows, result.summary_path)
    return result
