import math

import numpy as np
import pytest

from gnrc.errors import DegenerateEdge, EmptyIntersection, InsufficientModes
from gnrc.hilbert import LinearMap, identity, isometry_checks, operator_norm, self_adjoint_eigen
from gnrc.parent import (
    build_associated_parent,
    minimal_parent,
    partial_isometry_panel,
    projection_diagnostics,
    weidmann_report,
)
from gnrc.que import que_report
from gnrc.scenarios import graphlike as gl
from gnrc.scenarios import multiplication as mult
from gnrc.scenarios import unit_interval as ui


# ---------------------------------------------------------------- unit interval: closed forms

def test_level_one_weights_and_gram():
    assert np.allclose(ui.vertex_weights(1), [0.25, 0.5, 0.25])
    g = ui.gram(1)
    assert np.allclose(np.diag(g), [1 / 6, 1 / 3, 1 / 6])
    assert g[0, 1] == pytest.approx(1 / 12) and g[1, 2] == pytest.approx(1 / 12)
    assert g[0, 2] == 0


@pytest.mark.parametrize("n", range(1, 7))
def test_gram_rows_sum_to_weights(n):
    assert np.allclose(ui.gram(n).sum(axis=1), ui.vertex_weights(n), atol=1e-15)


def test_gram_matches_quadrature_of_hats():
    # independent check of the closed form: midpoint quadrature of psi_v psi_w
    n = 3
    x = (np.arange(200000) + 0.5) / 200000
    hats = np.clip(1 - np.abs(x[:, None] - ui.vertices(n)[None, :]) / ui.mesh(n), 0, None)
    quad = hats.T @ hats / x.size
    assert np.max(np.abs(quad - ui.gram(n))) <= 1e-9


@pytest.mark.parametrize("n", range(1, 7))
def test_loop_laplacian_is_third_of_path_laplacian(n):
    assert np.max(np.abs(ui.loop_laplacian(n) - ui.path_laplacian(n) / 3)) <= 1e-14


@pytest.mark.parametrize("n", range(1, 7))
def test_loop_spectrum(n):
    sp = ui.discrete_space(n)
    ev = self_adjoint_eigen(LinearMap(sp, sp, ui.loop_laplacian(n))).eigenvalues
    assert np.max(np.abs(ev - ui.loop_spectrum(n))) <= 1e-10


def test_loop_spectrum_level_two():
    k = np.arange(5)
    assert np.allclose(ui.loop_spectrum(2), (1 - np.cos(k * np.pi / 4)) / 3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_defect_identity_and_kernel(n):
    b = ui.build_unit_interval(ui.UnitIntervalScenario(n))
    j = b.inst.j
    defect = identity(j.domain) - j.adjoint @ j
    assert np.max(np.abs(defect.entries - b.loop_laplacian)) <= 1e-12
    dec = self_adjoint_eigen(defect)
    assert abs(dec.eigenvalues[0]) <= 1e-12 and dec.eigenvalues[1] > 1e-3
    v = dec.eigenvectors[:, 0]
    assert np.allclose(v / v[0], 1.0)


@pytest.mark.parametrize("n", range(1, 5))
def test_minimal_parent_block_dims(n):
    b = ui.build_unit_interval(ui.UnitIntervalScenario(n))
    assert minimal_parent(build_associated_parent([b.inst.j])).dims[1] == 2 ** n


@pytest.mark.parametrize("n", range(2, 7))
def test_unit_interval_que_speed(n):
    b = ui.build_unit_interval(ui.UnitIntervalScenario(n))
    assert que_report(b.inst).delta <= (1 + math.sqrt(2)) * 2.0 ** -n * 1.2


def test_defect1_closed_form():
    for n in range(1, 6):
        b = ui.build_unit_interval(ui.UnitIntervalScenario(n))
        assert que_report(b.inst).defect1 == pytest.approx(2 / (3 * (1 + 4 ** (n + 1))), rel=1e-12)


def test_d_norm_stable_under_mode_doubling():
    for n in (1, 2):
        vals = []
        for k in (ui.default_modes(n), 2 * ui.default_modes(n)):
            b = ui.build_unit_interval(ui.UnitIntervalScenario(n, k))
            vals.append(weidmann_report(build_associated_parent([b.inst.j]), b.inst.r1, b.inst.r2, 1).d_norm)
        assert abs(vals[0] - vals[1]) < 1e-10


def test_limit_model_rejects_incommensurate_modes():
    with pytest.raises(ValueError):
        ui.UnitIntervalLimit(3, 20)


def test_limit_resolvent_source_is_pseudo_resolvent():
    lim = ui.UnitIntervalLimit(3, ui.default_modes(3))
    src = lim.resolvent_source(-1.0, check=True)
    assert src.self_adjoint


# ---------------------------------------------------------------- norm table

def test_norm_table_level_one():
    row = ui.unit_interval_norm_table([1]).rows[0]
    assert row.w2_rhalf == pytest.approx(2 / (3 * math.sqrt(17)), abs=1e-12)
    assert f"{row.w2_rhalf:.8f}".startswith("0.161690")
    assert row.w2_r == pytest.approx(2 / 51, abs=1e-12)
    assert row.w_r == pytest.approx(max(math.sqrt(lam / 3) / (1 + 8 * lam) for lam in (0, 1, 2)), abs=1e-12)
    assert f"{row.w_r:.8f}".startswith("0.064150")
    assert row.w_r_argmax == 1


def test_norm_table_agreement_and_classes():
    table = ui.unit_interval_norm_table(range(1, 7))
    assert max(r.max_disagreement for r in table.rows) <= 1e-12
    w2r = [r.w2_r for r in table.rows]
    wr = [r.w_r for r in table.rows]
    for a, b in zip(w2r, w2r[1:]):
        assert 0.25 * 0.9 <= b / a <= 0.25 * 1.1
    for a, b in zip(wr, wr[1:]):
        assert 0.5 * 0.9 <= b / a <= 0.5 * 1.1
    assert all(r.w_r_argmax == 1 for r in table.rows if r.n >= 2)
    assert table.slopes["w2_r"] == pytest.approx(-2, abs=0.1)


def test_norm_table_needs_levels():
    with pytest.raises(ValueError):
        ui.unit_interval_norm_table([])


# ---------------------------------------------------------------- eigenvalue convergence

def test_eigenvalue_convergence_examples():
    zero = ui.eigenvalue_convergence(4, 0)
    assert zero.discrete == 0 and zero.limit == 0
    c = ui.eigenvalue_convergence(3, 1)
    assert c.discrete == pytest.approx(256 * math.sin(math.pi / 16) ** 2, rel=1e-14)
    assert f"{c.discrete:.5f}" == "9.74342"
    assert f"{c.limit:.5f}" == "9.86960"


def test_eigenvalue_error_constant():
    worst = max(ui.eigenvalue_convergence(n, k).error / (k ** 4 * 4.0 ** -n)
                for n in range(3, 9) for k in range(1, 5))
    assert worst <= 10
    # the leading term is k^4 pi^4 / 12
    assert worst == pytest.approx(math.pi ** 4 / 12, rel=0.01)


def test_eigenvalue_convergence_range():
    with pytest.raises(ValueError):
        ui.eigenvalue_convergence(2, 5)


# ---------------------------------------------------------------- limit-side defects

def test_winfty_dense_matches_classes():
    for n in (1, 2):
        k = ui.MODES_PER_VERTEX * 2 ** n
        a = ui.winfty_norms(n, k, "classes")
        b = ui.winfty_norms(n, k, "dense")
        assert a == pytest.approx(b, abs=1e-14)


def test_winfty_mode_doubling():
    k = ui.MODES_PER_VERTEX * 2 ** 3
    a = ui.winfty_norms(3, k)
    b = ui.winfty_norms(3, 2 * k)
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-10


def test_winfty_insufficient_modes():
    with pytest.raises(InsufficientModes):
        ui.winfty_order_experiment([1, 2, 3], 8)


def test_winfty_short_range_slopes():
    res = ui.winfty_order_experiment([1, 2, 3, 4], ui.MODES_PER_VERTEX * 16)
    assert res.slope_w2_rhalf == pytest.approx(-1, abs=0.25)
    assert all(b < a for a, b in zip(res.w2_r, res.w2_r[1:]))


# ---------------------------------------------------------------- multiplication

@pytest.mark.parametrize("name", sorted(mult.EXAMPLES))
def test_multiplication_rates(name):
    spec = mult.named_example(name)
    for n in range(1, 7):
        b = mult.build_multiplication(spec, n)
        rep = weidmann_report(b.natural_parent, b.inst.r1, b.inst.r2, n)
        terms = mult.sup_terms(spec, n)
        assert rep.d_norm == pytest.approx(max(terms.values()), abs=1e-12)
        assert rep.d_norm <= spec.rate(n) + spec.tail(n)
        assert rep.d_norm <= 3 * mult.mult_sup_conditions(spec, n)
        assert rep.commutator_norm == 0


def test_example_a_sup_condition():
    spec = mult.example_a()
    # sup of 1/(x + 1) on [8, T]
    assert max(mult.sup_terms(spec, 3).values()) == pytest.approx(1 / 9, rel=1e-14)
    assert mult.mult_sup_conditions(spec, 3) <= 2.0 ** -3 + spec.tail(3)


def test_example_b_rate():
    spec = mult.example_b(n_max=3)
    b = mult.build_multiplication(spec, 3)
    assert weidmann_report(b.natural_parent, b.inst.r1, b.inst.r2, 3).d_norm <= 2.0 ** -3


def test_weidmann_exercise_n4():
    spec = mult.weidmann_exercise(n_max=4)
    b = mult.build_multiplication(spec, 4)
    assert weidmann_report(b.natural_parent, b.inst.r1, b.inst.r2, 4).d_norm <= 2.0 ** -4 + spec.tail(4)


def test_identical_sets_and_symbols_give_zero():
    base = mult.example_a(n_max=2)
    spec = mult.MultiplicationScenario(
        "same", base.points, base.weights, lambda x, n: x <= 1.0, lambda x: x <= 1.0,
        lambda x, n: x, lambda x: x, tail=lambda n: 0.0, truncation=base.truncation, n_max=2)
    assert mult.mult_sup_conditions(spec, 1) == 0


def test_empty_intersection():
    base = mult.example_a(n_max=2)
    with pytest.raises(EmptyIntersection):
        mult.MultiplicationScenario(
            "disjoint", base.points, base.weights, lambda x, n: x > 3.0, lambda x: x < 1.0,
            lambda x, n: x, lambda x: x, tail=lambda n: 0.0, truncation=base.truncation, n_max=1)


def test_lifted_families_commute_with_indicator_projections():
    spec = mult.example_b(n_max=3)
    b = mult.build_multiplication(spec, 2)
    diag = projection_diagnostics(b.natural_parent, 2)
    assert diag.commutes and diag.commutator_norm == 0


# ---------------------------------------------------------------- graph-like

def test_kappa_and_w_hat_examples():
    assert gl.kappa(1.0, 10, 1.0) == pytest.approx(0.8 ** -0.5, rel=1e-14)
    assert f"{gl.kappa(1.0, 10, 1.0):.6f}" == "1.118034"
    assert gl.w_hat(1.0, 10, 2.0, 1.0) == pytest.approx(1 / 3, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_bumpy_battery(n):
    spec = gl.GraphLikeScenario(mode="bumpy")
    b = gl.build_graphlike(spec, n)
    j = b.inst.j
    assert isometry_checks(j.adjoint, 1e-10).is_isometry
    assert operator_norm(j) == pytest.approx(1.0, abs=1e-12)
    parent = build_associated_parent([j])
    pair = parent.defect(1)
    assert operator_norm(pair.w_cod) <= 1e-10
    assert operator_norm(pair.w_dom @ pair.w_dom - pair.w_dom) <= 1e-10
    panel = partial_isometry_panel(j)
    assert panel.unanimous and panel.verdict
    assert projection_diagnostics(parent, 1).commutes
    # P_inf f = (f_inf, 0) and iota_inf* iota_n = J exactly
    p_inf = parent.iotas[0] @ parent.iotas[0].adjoint
    d_inf = parent.components[0].dim
    expect = np.zeros((parent.space.dim, parent.space.dim))
    expect[:d_inf, :d_inf] = np.eye(d_inf)
    assert np.array_equal(p_inf.entries, expect)
    assert np.array_equal((parent.iotas[0].adjoint @ parent.iotas[1]).entries, j.entries)


@pytest.mark.parametrize("n", [1, 3, 8])
def test_embedded_norms(n):
    spec = gl.GraphLikeScenario(mode="embedded")
    b = gl.build_graphlike(spec, n)
    expect = (1 - 2 * spec.a / (n * min(spec.edge_lengths))) ** -0.5
    assert operator_norm(b.inst.j) == pytest.approx(expect, abs=1e-10)
    assert operator_norm(b.inst_hat.j) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(b.kappa, [gl.kappa(spec.a, n, le) for le in spec.edge_lengths])
    # W_inf for J hat is diagonal with the per-edge values w_hat
    w_inf = build_associated_parent([b.inst_hat.j]).defect(1).w_cod
    assert np.max(np.abs(w_inf.entries - np.diag(np.repeat(b.w_hat, spec.cells)))) <= 1e-12
    assert b.w_hat[0] == 0 and np.all(b.w_hat[1:] > 0)


def test_embedded_commutator_decreases():
    spec = gl.GraphLikeScenario(mode="embedded")
    comms = [projection_diagnostics(build_associated_parent([gl.build_graphlike(spec, n).inst_hat.j]), 1)
             .commutator_norm for n in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(comms, comms[1:]))
    assert comms[-1] > 1e-10


def test_embedded_equilateral_is_coisometric():
    spec = gl.GraphLikeScenario(edge_lengths=(1.0, 1.0, 1.0), mode="embedded")
    b = gl.build_graphlike(spec, 4)
    assert isometry_checks(b.inst_hat.j.adjoint, 1e-10).is_isometry
    assert projection_diagnostics(build_associated_parent([b.inst_hat.j]), 1).commutes


def test_degenerate_edge():
    spec = gl.GraphLikeScenario(edge_lengths=(0.4, 1.0), vertex_dims=(1, 1, 1), mode="embedded", a=0.25)
    with pytest.raises(DegenerateEdge):
        gl.build_graphlike(spec, 1)
    gl.build_graphlike(spec, 2)


def test_graphlike_rejects_bad_shapes():
    with pytest.raises(ValueError):
        gl.GraphLikeScenario(edge_lengths=(1.0, 2.0), vertex_dims=(1, 1))
    with pytest.raises(ValueError):
        gl.GraphLikeScenario(mode="wiggly")


def test_bumpy_minimal_parent():
    spec = gl.GraphLikeScenario(mode="bumpy", transversal=3)
    b = gl.build_graphlike(spec, 2)
    dims = minimal_parent(build_associated_parent([b.inst.j])).dims
    assert dims[1] == sum(spec.vertex_dims) + len(spec.edge_lengths) * spec.cells * 2
