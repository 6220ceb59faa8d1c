import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnrc.errors import IndexOutOfRange, MalformedTestVector, NotContraction
from gnrc.hilbert import (
    LinearMap,
    ResolventSource,
    Vector,
    WeightedSpace,
    direct_sum,
    identity,
    isometry_checks,
    operator_norm,
)
from gnrc.parent import (
    PANEL_KEYS,
    ParentSpace,
    TestVector,
    build_associated_parent,
    build_subspace_parent,
    check_defect_pair,
    defect_operators,
    minimal_parent,
    partial_isometry_panel,
    projection_diagnostics,
    projection_strong_convergence,
    summand_identities,
    test_vector_from_parent,
    weidmann_report,
    weidmann_to_que,
)
from gnrc.que import QueInstance, que_report
from gnrc.random_instances import (
    generic_contraction,
    map_with_singular_values,
    partial_isometry,
    random_instance,
    random_self_adjoint,
    random_space,
)
from gnrc.scenarios import graphlike as gl
from gnrc.scenarios import multiplication as mult
from gnrc.scenarios import unit_interval as ui

seeds = st.integers(0, 2**32 - 1)


def unit_build(n):
    return ui.build_unit_interval(ui.UnitIntervalScenario(n))


# ---------------------------------------------------------------- defect operators

def test_defect_of_isometry_vanishes(rng):
    h1, h2 = random_space(rng, 2, "H1"), random_space(rng, 4, "H2")
    j = map_with_singular_values(rng, h1, h2, [1.0, 1.0])
    pair = defect_operators(j)
    assert operator_norm(pair.w_dom) <= 1e-12
    # W_inf is the projection onto the orthogonal complement of ran J
    assert operator_norm(pair.w_cod @ pair.w_cod - pair.w_cod) <= 1e-10


def test_defect_of_scalar():
    sp = WeightedSpace.uniform("H", 1)
    pair = defect_operators(LinearMap(sp, sp, np.array([[0.6]])))
    assert pair.w_dom.entries[0, 0] == pytest.approx(0.8)
    assert pair.w_cod.entries[0, 0] == pytest.approx(0.8)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_defect_square_is_loop_laplacian(n):
    b = unit_build(n)
    w = defect_operators(b.inst.j).w_dom
    assert np.max(np.abs((w @ w).entries - b.loop_laplacian)) <= 1e-12


def test_defect_requires_contraction(rng):
    h = random_space(rng, 2, "H")
    with pytest.raises(NotContraction):
        defect_operators(map_with_singular_values(rng, h, h, [1.1, 0.2]))


@given(seeds)
def test_defect_pair_invariants(seed):
    rng = np.random.default_rng(seed)
    h1 = random_space(rng, int(rng.integers(1, 8)), "H1")
    h2 = random_space(rng, int(rng.integers(1, 8)), "H2")
    j = generic_contraction(rng, h1, h2)
    chk = check_defect_pair(j, defect_operators(j))
    assert chk.min_eigenvalue >= -1e-12
    assert chk.max_eigenvalue <= 1 + 1e-10
    assert chk.intertwining <= 1e-10
    assert chk.intertwining_adjoint <= 1e-10
    assert chk.spectra_mismatch <= 1e-9


# ---------------------------------------------------------------- associated parent

def test_parent_of_identity(rng):
    h = random_space(rng, 3, "H")
    parent = build_associated_parent([identity(h)])
    assert parent.space.dim == 6
    assert np.allclose(parent.iotas[0].entries, parent.iotas[1].entries)
    assert operator_norm(parent.j(1) - identity(h)) == 0


def test_parent_dimensions(rng):
    h_inf, h1, h2 = (random_space(rng, d, s) for d, s in ((3, "Hi"), (2, "H1"), (4, "H2")))
    parent = build_associated_parent([generic_contraction(rng, h1, h_inf),
                                      generic_contraction(rng, h2, h_inf)])
    assert parent.space.dim == 9
    assert [c.dim for c in parent.components] == [3, 2, 4]


def test_parent_invariants_and_adjoint_action(rng):
    h_inf = random_space(rng, 4, "Hi")
    hs = [random_space(rng, d, f"H{d}") for d in (2, 5, 3)]
    js = [generic_contraction(rng, h, h_inf) for h in hs]
    parent = build_associated_parent(js)
    assert max(parent.isometry_residuals()) <= 1e-10
    for n, j in enumerate(js, start=1):
        assert operator_norm(parent.iotas[0].adjoint @ parent.iotas[n] - j) <= 1e-12
        g = Vector(parent.space, rng.normal(size=parent.space.dim) + 1j * rng.normal(size=parent.space.dim))
        got = parent.iotas[n].adjoint @ g
        g_inf = g.coeffs[parent.offsets[0]:parent.offsets[1]]
        g_n = g.coeffs[parent.offsets[n]:parent.offsets[n + 1]]
        expect = j.adjoint.entries @ g_inf + parent.defect(n).w_dom.entries @ g_n
        assert np.allclose(got.coeffs, expect, atol=1e-12)


def test_parent_rejects_expanding_j(rng):
    h = random_space(rng, 2, "H")
    with pytest.raises(NotContraction):
        build_associated_parent([map_with_singular_values(rng, h, h, [1.2, 0.1])])


def test_index_out_of_range(rng):
    inst = random_instance(rng, 4)
    parent = build_associated_parent([inst.j])
    with pytest.raises(IndexOutOfRange):
        weidmann_report(parent, inst.r1, inst.r2, 2)
    with pytest.raises(IndexOutOfRange):
        projection_diagnostics(parent, 0)


# ---------------------------------------------------------------- Weidmann reports

def test_identical_operators_on_natural_parent(rng):
    h = random_space(rng, 4, "H")
    src = ResolventSource.from_operator(random_self_adjoint(rng, h), -1.0)
    full = np.ones(4, dtype=bool)
    parent = build_subspace_parent(h, [full, full], labels=["H", "H"])
    rep = weidmann_report(parent, src, src, 1)
    assert rep.d_norm == 0
    assert max(rep.summand_pinf_pn, rep.summand_pinfperp_pn, rep.summand_pinf_pnperp) == 0


def test_example_a_n3_rate():
    spec = mult.example_a(n_max=4)
    b = mult.build_multiplication(spec, 3)
    rep = weidmann_report(b.natural_parent, b.inst.r1, b.inst.r2, 3)
    assert rep.d_norm <= 1 / 8
    # multiplication by x: the worst point is x = 2^3 in X_n \ X_inf
    assert rep.d_norm == pytest.approx(1 / 9, rel=1e-12)


def _dense_weidmann_oracle(j, w, r_n, r_inf, mu_inf, mu_n):
    """Assemble D_n on H_inf (+) H_n with plain arrays and return its norm."""
    d_inf, d_n = j.shape
    iota_n = np.vstack([j, w])
    iota_inf = np.vstack([np.eye(d_inf), np.zeros((d_n, d_inf))])
    mu = np.concatenate([mu_inf, mu_n])

    def adj(a, mu_dom, mu_cod):
        return (a.conj().T * mu_cod[None, :]) / mu_dom[:, None]

    d = iota_n @ r_n @ adj(iota_n, mu_n, mu) - iota_inf @ r_inf @ adj(iota_inf, mu_inf, mu)
    s = np.sqrt(mu)[:, None] * d / np.sqrt(mu)[None, :]
    return np.linalg.svd(s, compute_uv=False)[0]


def test_unit_interval_n1_against_dense_oracle():
    b = unit_build(1)
    inst = b.inst
    parent = build_associated_parent([inst.j])
    rep = weidmann_report(parent, inst.r1, inst.r2, 1)
    w = parent.defect(1).w_dom.entries
    ref = _dense_weidmann_oracle(inst.j.entries, w, inst.r1.resolvent.entries,
                                 inst.r2.resolvent.entries, inst.h2.weights, inst.h1.weights)
    assert abs(rep.d_norm - ref) <= 1e-12


def test_two_block_evaluation_matches_full_parent(rng):
    h_inf = random_space(rng, 4, "Hi")
    srcs, js = [], []
    for d in (3, 2, 5):
        h = random_space(rng, d, f"H{d}")
        srcs.append(ResolventSource.from_operator(random_self_adjoint(rng, h), -1.0))
        js.append(generic_contraction(rng, h, h_inf))
    r_inf = ResolventSource.from_operator(random_self_adjoint(rng, h_inf), -1.0)
    parent = build_associated_parent(js)
    custom = ParentSpace(parent.space, parent.components, parent.iotas, "custom")
    for n in (1, 2, 3):
        a = weidmann_report(parent, srcs[n - 1], r_inf, n)
        b = weidmann_report(custom, srcs[n - 1], r_inf, n)
        assert a.d_norm == pytest.approx(b.d_norm, abs=1e-12)
        assert a.commutator_norm == pytest.approx(b.commutator_norm, abs=1e-12)


@given(seeds)
def test_decomposition_and_summand_identities(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 7, ("contraction", "partial_isometry")[seed % 2],
                           complex_point=bool(seed % 3 == 0))
    parent = build_associated_parent([inst.j])
    rep = weidmann_report(parent, inst.r1, inst.r2, 1)
    assert rep.decomposition_residual <= 1e-10
    assert rep.d_norm <= rep.summand_pinf_pn + rep.summand_pinfperp_pn + rep.summand_pinf_pnperp + 1e-10
    assert summand_identities(parent, inst.r1, inst.r2, 1, que_report(inst), rep).max() <= 1e-10


@pytest.mark.parametrize("family", ["unit", "graph-bumpy", "graph-embedded", "mult"])
def test_summand_identities_on_scenarios(family):
    if family == "unit":
        inst = unit_build(3).inst
        parent = build_associated_parent([inst.j])
    elif family == "mult":
        b = mult.build_multiplication(mult.example_b(n_max=4), 2)
        inst, parent = b.inst, build_associated_parent([b.inst.j])
    else:
        b = gl.build_graphlike(gl.GraphLikeScenario(mode=family.split("-")[1]), 2)
        inst = b.inst_hat
        parent = build_associated_parent([inst.j])
    res = summand_identities(parent, inst.r1, inst.r2, 1, que_report(inst))
    assert res.max() <= 1e-10


def test_unitary_j_same_operator_has_zero_summands(rng):
    h = random_space(rng, 3, "H")
    a = random_self_adjoint(rng, h)
    src = ResolventSource.from_operator(a, -1.0)
    inst = QueInstance(h, h, src, src, identity(h))
    parent = build_associated_parent([inst.j])
    rep = weidmann_report(parent, src, src, 1)
    assert max(rep.d_norm, rep.summand_pinf_pn, rep.summand_pinfperp_pn, rep.summand_pinf_pnperp) <= 1e-14


# ---------------------------------------------------------------- projections

def test_partial_isometry_projections(rng):
    h1, h2 = random_space(rng, 4, "H1"), random_space(rng, 3, "H2")
    j = map_with_singular_values(rng, h1, h2, [1.0, 1.0, 0.0])
    diag = projection_diagnostics(build_associated_parent([j]), 1)
    assert diag.commutes
    assert diag.p_diff_norm == pytest.approx(1.0, abs=1e-10)


def test_embedded_graphlike_projections_do_not_commute():
    b = gl.build_graphlike(gl.GraphLikeScenario(mode="embedded"), 4)
    assert not projection_diagnostics(build_associated_parent([b.inst_hat.j]), 1).commutes


def test_commuting_is_invariant_under_padding(rng):
    for make in (partial_isometry, generic_contraction):
        h1, h2 = random_space(rng, 3, "H1"), random_space(rng, 4, "H2")
        j = make(rng, h1, h2)
        assoc = build_associated_parent([j])
        pad = random_space(rng, 2, "P")
        big = direct_sum([assoc.space, pad])
        iotas = tuple(big.inject[0] @ i for i in assoc.iotas)
        alt = ParentSpace(big.sum, assoc.components, iotas, "custom")
        assert operator_norm(alt.j(1) - j) <= 1e-12
        assert projection_diagnostics(alt, 1).commutes == projection_diagnostics(assoc, 1).commutes


# ---------------------------------------------------------------- panel

def test_panel_partial_isometries(rng):
    for _ in range(20):
        h1 = random_space(rng, int(rng.integers(1, 7)), "H1")
        h2 = random_space(rng, int(rng.integers(1, 7)), "H2")
        panel = partial_isometry_panel(partial_isometry(rng, h1, h2))
        assert panel.unanimous and panel.verdict
        assert set(panel.predicates) == set(PANEL_KEYS)


def test_panel_half_singular_value(rng):
    h1, h2 = random_space(rng, 3, "H1"), random_space(rng, 3, "H2")
    panel = partial_isometry_panel(map_with_singular_values(rng, h1, h2, [1.0, 0.5, 0.0]))
    assert panel.unanimous and not panel.verdict
    assert not any(panel.predicates.values())


def test_panel_zero_map(rng):
    h1, h2 = random_space(rng, 3, "H1"), random_space(rng, 2, "H2")
    panel = partial_isometry_panel(LinearMap(h1, h2, np.zeros((2, 3))))
    assert panel.unanimous and panel.verdict


def test_panel_rejects_expanding(rng):
    h = random_space(rng, 2, "H")
    with pytest.raises(NotContraction):
        partial_isometry_panel(map_with_singular_values(rng, h, h, [1.5, 0.0]))


@given(seeds)
def test_panel_unanimity_generic(seed):
    rng = np.random.default_rng(seed)
    h1 = random_space(rng, int(rng.integers(1, 7)), "H1")
    h2 = random_space(rng, int(rng.integers(1, 7)), "H2")
    j = generic_contraction(rng, h1, h2)
    panel = partial_isometry_panel(j)
    assert panel.unanimous
    assert panel.verdict == isometry_checks(j, 1e-9).is_partial_isometry


# ---------------------------------------------------------------- minimal parent

def test_minimal_parent_isometry(rng):
    h1, h2 = random_space(rng, 2, "H1"), random_space(rng, 5, "H2")
    mp = minimal_parent(build_associated_parent([map_with_singular_values(rng, h1, h2, [1, 1])]))
    assert mp.dims == [5, 0]


def test_minimal_parent_partial_isometry_is_kernel(rng):
    h1, h2 = random_space(rng, 5, "H1"), random_space(rng, 4, "H2")
    j = map_with_singular_values(rng, h1, h2, [1, 1, 0, 0])
    # kernel of J: 5 - rank 2
    assert minimal_parent(build_associated_parent([j])).dims[1] == 3


def test_minimal_parent_unit_interval():
    limit = ui.UnitIntervalLimit(4, ui.default_modes(4))
    js = [limit.identification(n, ui.discrete_space(n)) for n in range(1, 5)]
    mp = minimal_parent(build_associated_parent(js))
    assert mp.dims[1:] == [2, 4, 8, 16]
    assert mp.total_dim == limit.space.dim + 30


def test_minimal_parent_bumpy_graphlike():
    spec = gl.GraphLikeScenario(mode="bumpy")
    b = gl.build_graphlike(spec, 3)
    mp = minimal_parent(build_associated_parent([b.inst.j]))
    assert mp.dims[1] == gl.minimal_block_dim(spec)


def test_minimal_parent_needs_associated(rng):
    h = random_space(rng, 2, "H")
    with pytest.raises(ValueError):
        minimal_parent(build_subspace_parent(h, [np.ones(2, bool), np.ones(2, bool)]))


# ---------------------------------------------------------------- strong convergence

@pytest.fixture(scope="module")
def unit_parent():
    limit = ui.UnitIntervalLimit(5, ui.default_modes(5))
    js = [limit.identification(n, ui.discrete_space(n)) for n in range(1, 6)]
    return limit, build_associated_parent(js), limit.resolvent_source(-1.0)


def test_strong_convergence_zero_vector(unit_parent):
    limit, parent, r_inf = unit_parent
    table = projection_strong_convergence(parent, r_inf, [Vector(limit.space, np.zeros(limit.space.dim))])
    assert all(r.measured == 0 and r.bound == 0 and r.commutator == 0 for r in table.rows)


def test_strong_convergence_decays(unit_parent):
    limit, parent, r_inf = unit_parent
    k = np.arange(limit.space.dim)
    gs = [Vector(limit.space, np.where(k == 0, 1.0, 0.0)),
          Vector(limit.space, np.where(k == 1, 1.0, 0.0))]
    table = projection_strong_convergence(parent, r_inf, gs)
    assert table.holds
    # the constant function is reproduced exactly by the hat functions
    assert max(table.measured(0).values()) <= 1e-12
    m = table.measured(1)
    assert all(m[n + 1] < m[n] for n in range(1, 5))
    comms = [r.commutator for r in table.rows if r.vector == 1]
    assert all(b < a for a, b in zip(comms, comms[1:]))


def test_test_vector_round_trip(unit_parent):
    limit, parent, r_inf = unit_parent
    g = Vector(limit.space, np.where(np.arange(limit.space.dim) == 2, 1.0, 0.0))
    f = parent.iotas[0] @ (r_inf.resolvent @ g)
    f_n = np.zeros(parent.space.dim)
    f_n[parent.offsets[3]] = 1.0
    tv = test_vector_from_parent(parent, r_inf, f + Vector(parent.space, f_n))
    assert np.allclose(tv.g.coeffs, g.coeffs, atol=1e-10)
    assert set(tv.blocks) == {3}
    table = projection_strong_convergence(parent, r_inf, [tv])
    assert table.holds
    assert not [r for r in table.rows if r.n == 3][0].bound_applies


def test_malformed_test_vector(rng):
    inst = random_instance(rng, 4)
    h2 = inst.h2
    # a resolvent with a kernel: f_inf outside its range
    r = LinearMap(h2, h2, np.diag(np.r_[np.zeros(1), np.ones(h2.dim - 1)]))
    r_inf = ResolventSource.from_resolvent(r, -1.0)
    parent = build_associated_parent([inst.j])
    f = parent.iotas[0] @ Vector(h2, np.r_[1.0, np.zeros(h2.dim - 1)])
    with pytest.raises(MalformedTestVector):
        test_vector_from_parent(parent, r_inf, f)
    with pytest.raises(MalformedTestVector):
        projection_strong_convergence(parent, r_inf, [TestVector(Vector(inst.h1, np.ones(inst.h1.dim)))])


# ---------------------------------------------------------------- Weidmann to QUE

def test_weidmann_to_que_random_sweep():
    rng = np.random.default_rng(7)
    for i in range(200):
        inst = random_instance(rng, 12, ("contraction", "partial_isometry")[i % 2],
                               complex_point=bool(i % 3 == 0), related=bool(i % 4 == 0))
        parent = build_associated_parent([inst.j])
        wr = weidmann_report(parent, inst.r1, inst.r2, 1)
        rep = weidmann_to_que(parent, inst.r1, inst.r2, 1)
        fields = list(rep.delta_fields().values()) + [rep.defect1_star, rep.defect2_star,
                                                      rep.intertwine_star, rep.delta]
        assert max(fields) <= wr.d_norm + 1e-10
        # the compressions reproduce the direct QUE quantities
        direct = que_report(inst)
        assert rep.intertwine == pytest.approx(direct.intertwine, abs=1e-10)


def test_weidmann_to_que_zero_distance(rng):
    h = random_space(rng, 3, "H")
    src = ResolventSource.from_operator(random_self_adjoint(rng, h), -1.0)
    rep = weidmann_to_que(build_associated_parent([identity(h)]), src, src, 1)
    assert rep.delta <= 1e-14


def test_weidmann_to_que_scenarios():
    spec = mult.weidmann_exercise(n_max=4)
    for n in range(1, 5):
        b = mult.build_multiplication(spec, n)
        wr = weidmann_report(b.natural_parent, b.inst.r1, b.inst.r2, n)
        assert weidmann_to_que(b.natural_parent, b.inst.r1, b.inst.r2, n).delta <= wr.d_norm + 1e-10
