"""Quasi-unitary equivalence (QUE) distances between two resolvents.

Given resolvents R1 on h1, R2 on h2 at a common point z0 and an
identification operator J: h1 -> h2, the QUE distance delta is the smallest
number bounding ||J|| - 1, the two defects ||(I - J*J)R1||, ||(I - JJ*)R2||
and the intertwining error ||R2 J - J R1||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

from .errors import NotContraction, SpaceMismatch, ZeroMap
from .hilbert import (
    LinearMap,
    ResolventSource,
    WeightedSpace,
    identity,
    operator_norm,
)


@dataclass(frozen=True, eq=False)
class QueInstance:
    h1: WeightedSpace
    h2: WeightedSpace
    r1: ResolventSource
    r2: ResolventSource
    j: LinearMap

    def __post_init__(self):
        if not (self.j.domain.compatible(self.h1) and self.j.codomain.compatible(self.h2)):
            raise SpaceMismatch("j must map h1 into h2")
        if not self.r1.space.compatible(self.h1) or not self.r2.space.compatible(self.h2):
            raise SpaceMismatch("resolvent sources must act on h1 and h2")
        if self.r1.z0 != self.r2.z0:
            raise ValueError(f"resolvents use different points {self.r1.z0} and {self.r2.z0}")

    @property
    def z0(self) -> complex:
        return self.r1.z0

    def with_j(self, j: LinearMap) -> "QueInstance":
        return QueInstance(self.h1, self.h2, self.r1, self.r2, j)


@dataclass(frozen=True)
class QueReport:
    norm_j: float
    defect1: float
    defect2: float
    intertwine: float
    defect1_star: float
    defect2_star: float
    intertwine_star: float
    strong_defect1: float
    strong_defect2: float
    norm_r1: float
    norm_r2: float
    # whether the starred quantities enter delta
    starred_binding: bool
    delta: float

    def delta_fields(self) -> dict:
        """The quantities delta has to dominate (starred ones only if binding)."""
        out = {
            "norm_excess": max(self.norm_j - 1.0, 0.0),
            "defect1": self.defect1,
            "defect2": self.defect2,
            "intertwine": self.intertwine,
        }
        if self.starred_binding:
            out.update(
                defect1_star=self.defect1_star,
                defect2_star=self.defect2_star,
                intertwine_star=self.intertwine_star,
            )
        return out

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def que_quantities(j: LinearMap, r1: LinearMap, r2: LinearMap, starred_binding: bool) -> QueReport:
    """QUE report from explicit resolvent arrays."""
    jh = j.adjoint
    defect_dom = identity(j.domain) - jh @ j
    defect_cod = identity(j.codomain) - j @ jh
    r1h, r2h = r1.adjoint, r2.adjoint
    norm_j = operator_norm(j)
    vals = dict(
        norm_j=norm_j,
        defect1=operator_norm(defect_dom @ r1),
        defect2=operator_norm(defect_cod @ r2),
        intertwine=operator_norm(r2 @ j - j @ r1),
        defect1_star=operator_norm(defect_dom @ r1h),
        defect2_star=operator_norm(defect_cod @ r2h),
        intertwine_star=operator_norm(r2h @ j - j @ r1h),
        strong_defect1=operator_norm(r1h @ defect_dom @ r1),
        strong_defect2=operator_norm(r2h @ defect_cod @ r2),
        norm_r1=operator_norm(r1),
        norm_r2=operator_norm(r2),
    )
    keys = ["defect1", "defect2", "intertwine"]
    if starred_binding:
        keys += ["defect1_star", "defect2_star", "intertwine_star"]
    delta = max([max(norm_j - 1.0, 0.0)] + [vals[k] for k in keys])
    return QueReport(starred_binding=starred_binding, delta=delta, **vals)


def starred_binding(inst: QueInstance) -> bool:
    return inst.z0.imag != 0 or not (inst.r1.self_adjoint and inst.r2.self_adjoint)


def que_report(inst: QueInstance) -> QueReport:
    return que_quantities(inst.j, inst.r1.resolvent, inst.r2.resolvent, starred_binding(inst))


@dataclass(frozen=True)
class ResolventNormBound:
    measured: float
    bound: float
    holds: bool


def resolvent_norm_bound(rep: QueReport, norm_r2: Optional[float] = None) -> ResolventNormBound:
    """||R1|| <= ||R2|| + 2 delta, valid for contractive J."""
    if rep.norm_j > 1.0 + 1e-12:
        raise NotContraction(f"||J|| = {rep.norm_j:.15g} > 1")
    if norm_r2 is None:
        norm_r2 = rep.norm_r2
    bound = norm_r2 + 2.0 * rep.delta
    return ResolventNormBound(rep.norm_r1, bound, rep.norm_r1 <= bound + 1e-12)


def speed_lift(delta: float, norm_rinf: float) -> float:
    """Weidmann speed obtained from a QUE speed in the associated parent space."""
    if delta < 0 or norm_rinf < 0:
        raise ValueError("delta and norm_rinf must be nonnegative")
    return math.sqrt(delta) * (2.0 * math.sqrt(norm_rinf + 2.0 * delta) + math.sqrt(delta))


SPEED_FACTORS = {"general-commuting": 3.0, "isometry": 2.0, "coisometry": 2.0}


def speed_commuting(delta: float, j_kind: str) -> float:
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    try:
        return SPEED_FACTORS[j_kind] * delta
    except KeyError:
        raise ValueError(f"unknown kind {j_kind!r}; expected one of {sorted(SPEED_FACTORS)}") from None


def delta_equivalence(j: LinearMap, j2: LinearMap) -> float:
    return operator_norm(j - j2)


def transfer_bound(delta: float, delta_prime: float, max_norm_r: float) -> float:
    """QUE distance after replacing J by a delta_prime-close J'.

    The resolvent terms grow by delta' * max||R|| * (2(1 + delta) + delta').
    The norm condition only grows to delta + delta', which can dominate when
    the resolvents are small, so the larger of the two is returned.
    """
    if min(delta, delta_prime, max_norm_r) < 0:
        raise ValueError("inputs must be nonnegative")
    resolvent_terms = delta + delta_prime * max_norm_r * (2.0 * (1.0 + delta) + delta_prime)
    return max(resolvent_terms, delta + delta_prime)


@dataclass(frozen=True, eq=False)
class Rescaled:
    j_hat: LinearMap
    delta_hat: float


def rescale_identification(inst: QueInstance, rep: QueReport) -> Rescaled:
    """Normalize J to norm one; the QUE distance grows at most to delta_hat."""
    norm_j = operator_norm(inst.j)
    if norm_j == 0.0:
        raise ZeroMap("cannot rescale the zero map")
    if rep.norm_j < 1.0:
        return Rescaled(inst.j, rep.delta)
    max_r = max(rep.norm_r1, rep.norm_r2)
    delta_hat = rep.delta * (1.0 + max_r * (2.0 + 3.0 * rep.delta))
    return Rescaled(inst.j / norm_j, delta_hat)
