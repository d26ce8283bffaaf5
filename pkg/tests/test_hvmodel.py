"""Hidden-variable models: dilation, classification, combinators, JSON."""

from __future__ import annotations

import numpy as np
import pytest

from bellmeter import (
    Behaviour,
    FactorizedTables,
    SettingsDistribution,
    born_behaviour,
    classify,
    compose,
    dilate,
    dilation_index,
    dilation_label,
    local_content_lp,
    make_model,
    maximally_entangled,
    measures,
    mix,
    model_from_jsonable,
    model_to_jsonable,
    pr_box,
    readjust_settings,
    reconstruct_behaviour,
    reconstruct_settings,
    restrict,
    sample_nonsignalling,
    trivial_free_model,
    tsirelson_settings,
    validate_model,
)
from bellmeter.errors import DomainError, ModelError, StructureError
from oracles import reconstruct_by_loops


def tsirelson_behaviour() -> Behaviour:
    alice, bob = tsirelson_settings()
    return born_behaviour(maximally_entangled(), alice, bob)


def skewed_settings() -> SettingsDistribution:
    return SettingsDistribution.from_table([[0.1, 0.2], [0.3, 0.4]])


def local_mixture(seed: int) -> Behaviour:
    b = sample_nonsignalling(seed=seed)
    return mix([b, Behaviour.from_table(np.full((2, 2, 2, 2), 0.25))], [0.3, 0.7])


def free_local_model(b: Behaviour, s: SettingsDistribution):
    """Fully free *and* fully local model of a local-polytope behaviour:
    hidden variables are the deterministic vertices, weighted by an LP
    decomposition, with conditionals equal to the prior."""
    content = local_content_lp(b)
    assert content.mu == pytest.approx(1.0, abs=1e-9), "behaviour must be local"
    from bellmeter import enumerate_local_vertices

    vertices = enumerate_local_vertices(2)
    weights = np.clip(content.weights, 0.0, None)
    weights = weights / weights.sum()
    tables = np.stack([v.behaviour.table for v in vertices])
    cond = np.repeat(np.repeat(weights[:, None, None], 2, axis=1), 2, axis=2)
    return make_model(weights, cond, tables, s)


# ---------------------------------------------------------------------------
# Construction and validation.
# ---------------------------------------------------------------------------


def test_make_model_shape_checks():
    s = SettingsDistribution.uniform(2)
    with pytest.raises(StructureError):
        make_model(np.ones(2), np.ones((2, 2, 2)) / 2, np.zeros((3, 2, 2, 2, 2)), s)
    with pytest.raises(StructureError):
        make_model(np.ones(1), np.ones((1, 2, 2)), np.zeros((1, 2, 2, 2, 3)), s)


def test_validate_model_catches_bad_columns():
    s = SettingsDistribution.uniform(2)
    tables = np.full((2, 2, 2, 2, 2), 0.25)
    good_cond = np.full((2, 2, 2), 0.5)
    bad_cond = good_cond.copy()
    bad_cond[0, 0, 0] = 0.7  # column (0,0) now sums to 1.2
    assert validate_model(make_model([0.5, 0.5], good_cond, tables, s)).valid
    report = validate_model(make_model([0.5, 0.5], bad_cond, tables, s))
    assert not report.valid


def test_validate_model_checks_factorized_consistency():
    s = SettingsDistribution.uniform(2)
    tables = np.full((1, 2, 2, 2, 2), 0.25)
    fact = FactorizedTables(np.full((1, 2, 2), 0.5), np.full((1, 2, 2), 0.5))
    assert validate_model(make_model([1.0], np.ones((1, 2, 2)), tables, s, fact)).valid
    wrong = FactorizedTables(
        np.tile([[1.0, 0.0]], (1, 2, 1)), np.full((1, 2, 2), 0.5)
    )
    report = validate_model(
        make_model([1.0], np.ones((1, 2, 2)), tables, s, wrong)
    )
    assert not report.valid


# ---------------------------------------------------------------------------
# Dilation.
# ---------------------------------------------------------------------------


def test_dilation_indexing_round_trip():
    for k in range(16):
        u, v, a, b = dilation_label(k, 2)
        assert dilation_index(u, v, a, b, 2) == k


def test_dilate_reconstructs_behaviour_and_settings():
    b = tsirelson_behaviour()
    s = skewed_settings()
    m = dilate(b, s)
    assert m.lambda_count == 16
    assert np.abs(reconstruct_behaviour(m).table - b.table).max() <= 1e-12
    assert np.abs(reconstruct_settings(m).table - s.table).max() <= 1e-12
    assert np.abs(reconstruct_by_loops(m) - b.table).max() <= 1e-12


def test_dilate_is_fully_local_never_free():
    m = dilate(tsirelson_behaviour(), skewed_settings())
    cls = classify(m)
    assert len(cls.local) == m.lambda_count
    assert len(cls.nonlocal_) == 0
    mm = measures(m)
    assert mm.locality_mass == pytest.approx(1.0, abs=1e-12)
    # positive-probability outcomes at positive-probability settings force
    # their lambda's conditional away from the prior
    assert mm.freedom_mass == 0.0


def test_dilate_carries_factorized_tables():
    m = dilate(tsirelson_behaviour(), skewed_settings())
    assert m.factorized is not None
    assert validate_model(m).valid


def test_dilate_rectangular_scenario():
    table = np.full((3, 2, 2, 2), 0.25)
    b = Behaviour.from_table(table)
    s = SettingsDistribution.uniform(3, 2)
    m = dilate(b, s)
    assert m.lambda_count == 4 * 3 * 2
    assert np.abs(reconstruct_behaviour(m).table - table).max() <= 1e-12


def test_dilate_accepts_signalling_behaviour():
    # the construction never uses non-signalling; outcomes may leak settings
    t = np.full((2, 2, 2, 2), 0.25)
    t[0, 1] = np.array([[0.4, 0.4], [0.1, 0.1]])
    b = Behaviour.from_table(t)
    m = dilate(b, SettingsDistribution.uniform(2))
    assert np.abs(reconstruct_behaviour(m).table - t).max() <= 1e-12


def test_trivial_free_model_is_free_and_reconstructs():
    b = tsirelson_behaviour()
    m = trivial_free_model(b)
    cls = classify(m)
    assert cls.free == (0,)
    assert cls.local == ()  # Tsirelson statistics do not factorize
    assert np.abs(reconstruct_behaviour(m).table - b.table).max() == 0.0


# ---------------------------------------------------------------------------
# Bayes bookkeeping.
# ---------------------------------------------------------------------------


def test_reconstruct_settings_rejects_inconsistent_model():
    s = SettingsDistribution.uniform(2)
    tables = np.full((2, 2, 2, 2, 2), 0.25)
    cond = np.full((2, 2, 2), 0.5)
    m = make_model([0.9, 0.1], cond, tables, s)  # cond says 0.5/0.5
    with pytest.raises(ModelError):
        reconstruct_settings(m)


def test_restrict_on_dilation_block():
    s = skewed_settings()
    b = tsirelson_behaviour()
    m = dilate(b, s)
    # hidden variables of the (0, 0) block
    block = [dilation_index(0, 0, a, bb, 2) for a in range(2) for bb in range(2)]
    p, sub = restrict(m, block)
    assert p == pytest.approx(s.table[0, 0], abs=1e-12)
    assert sub.lambda_count == 4
    # conditioned on the block, settings are pinned to (0, 0)
    rs = reconstruct_settings(sub)
    expect = np.zeros((2, 2))
    expect[0, 0] = 1.0
    assert np.abs(rs.table - expect).max() <= 1e-12


def test_restrict_complement_masses_add_up():
    m = dilate(tsirelson_behaviour(), skewed_settings())
    cls = classify(m)
    p_free = measures(m).freedom_mass
    subset = list(range(0, 5))
    rest = list(range(5, 16))
    p1, _ = restrict(m, subset)
    p2, _ = restrict(m, rest)
    assert p1 + p2 == pytest.approx(1.0, abs=1e-12)
    assert p_free == 0.0
    assert cls.nonfree == tuple(range(16))


def test_restrict_validates_subset():
    m = trivial_free_model(tsirelson_behaviour())
    with pytest.raises(DomainError):
        restrict(m, [])
    with pytest.raises(DomainError):
        restrict(m, [5])


def test_compose_mixes_behaviours_and_masses():
    b1 = local_mixture(1)
    b2 = local_mixture(2)
    s = SettingsDistribution.uniform(2)
    m = compose(
        [(0.25, trivial_free_model(b1, s)), (0.75, dilate(b2, s))]
    )
    assert validate_model(m).valid
    expect = 0.25 * b1.table + 0.75 * b2.table
    assert np.abs(reconstruct_behaviour(m).table - expect).max() <= 1e-12
    assert measures(m).freedom_mass == pytest.approx(0.25, abs=1e-12)
    assert np.abs(reconstruct_settings(m).table - s.table).max() <= 1e-12


def test_compose_requires_matching_settings():
    b = local_mixture(3)
    m1 = trivial_free_model(b, SettingsDistribution.uniform(2))
    m2 = trivial_free_model(b, skewed_settings())
    with pytest.raises(ModelError):
        compose([(0.5, m1), (0.5, m2)])


def test_compose_checks_weights():
    b = local_mixture(4)
    m = trivial_free_model(b)
    with pytest.raises(ModelError):
        compose([(0.7, m), (0.7, m)])


def test_restrict_then_compose_round_trips_on_free_nonfree_split():
    # For subsets with setting-independent conditional mass (here: the
    # free part and its complement) restriction keeps the original
    # setting distribution, so the parts recompose exactly.
    s = SettingsDistribution.uniform(2)
    m = compose(
        [(0.4, free_local_model(local_mixture(31), s)), (0.6, dilate(local_mixture(32), s))]
    )
    cls = classify(m)
    p1, m1 = restrict(m, cls.free)
    p2, m2 = restrict(m, cls.nonfree)
    assert p1 == pytest.approx(0.4, abs=1e-12)
    combined = compose([(p1, m1), (p2, m2)])
    assert (
        np.abs(
            reconstruct_behaviour(combined).table - reconstruct_behaviour(m).table
        ).max()
        <= 1e-12
    )
    assert np.abs(
        reconstruct_settings(combined).table - reconstruct_settings(m).table
    ).max() <= 1e-12


def test_restrict_to_skew_subset_of_dilation_shifts_settings():
    # A subset that favours some setting pairs conditions the settings
    # distribution away from the original; such parts no longer share an
    # experiment with their complement and compose refuses the pair.
    m = dilate(tsirelson_behaviour(), skewed_settings())
    p1, m1 = restrict(m, list(range(6)))
    p2, m2 = restrict(m, list(range(6, 16)))
    assert p1 + p2 == pytest.approx(1.0, abs=1e-12)
    assert np.abs(m1.settings.table - m.settings.table).max() > 1e-3
    with pytest.raises(ModelError):
        compose([(p1, m1), (p2, m2)])


# ---------------------------------------------------------------------------
# Setting readjustment.
# ---------------------------------------------------------------------------


def test_readjust_preserves_behaviour_and_freedom_mass():
    b = local_mixture(7)
    s_old = skewed_settings()
    s_new = SettingsDistribution.from_table([[0.4, 0.1], [0.1, 0.4]])
    # freedom mass 0.35: free vertex-decomposition part + dilated part
    m = compose(
        [(0.35, free_local_model(b, s_old)), (0.65, dilate(b, s_old))]
    )
    assert measures(m).freedom_mass == pytest.approx(0.35, abs=1e-12)
    assert measures(m).locality_mass == pytest.approx(1.0, abs=1e-12)

    m2 = readjust_settings(m, s_new)
    assert np.abs(reconstruct_behaviour(m2).table - b.table).max() <= 1e-11
    assert np.abs(reconstruct_settings(m2).table - s_new.table).max() <= 1e-11
    assert measures(m2).freedom_mass == pytest.approx(0.35, abs=1e-11)
    assert measures(m2).locality_mass == pytest.approx(1.0, abs=1e-12)


def test_readjust_fully_free_model_keeps_structure():
    b = local_mixture(8)
    m = free_local_model(b, skewed_settings())
    m2 = readjust_settings(m, SettingsDistribution.uniform(2))
    assert m2.lambda_count == m.lambda_count
    assert measures(m2).freedom_mass == 1.0
    assert np.abs(reconstruct_behaviour(m2).table - b.table).max() <= 1e-9


def test_readjust_fully_nonfree_model_redilates():
    b = local_mixture(9)
    m = dilate(b, skewed_settings())
    s_new = SettingsDistribution.uniform(2)
    m2 = readjust_settings(m, s_new)
    assert np.abs(reconstruct_behaviour(m2).table - b.table).max() <= 1e-12
    assert np.abs(reconstruct_settings(m2).table - s_new.table).max() <= 1e-12
    assert measures(m2).freedom_mass == 0.0


def test_readjust_requires_local_model_and_nontrivial_settings():
    b = tsirelson_behaviour()
    nonlocal_model = trivial_free_model(b)  # single lambda, not local
    with pytest.raises(DomainError):
        readjust_settings(nonlocal_model, SettingsDistribution.uniform(2))
    local_model = dilate(b, SettingsDistribution.uniform(2))
    degenerate = SettingsDistribution.from_table([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DomainError):
        readjust_settings(local_model, degenerate)


# ---------------------------------------------------------------------------
# Freedom never beats the LP bound.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed,weight", [(11, 0.2), (12, 0.5), (13, 0.05)])
def test_freedom_mass_is_a_lower_bound_witness(seed, weight):
    # w * (free local model of a local behaviour) + (1-w) * dilation
    # has freedom mass exactly w, and the mixed behaviour's LP local
    # content can only be larger.
    local_b = local_mixture(seed)
    any_b = sample_nonsignalling(seed=seed + 1000)
    s = SettingsDistribution.uniform(2)
    m = compose(
        [(weight, trivial_free_model(local_b, s)), (1.0 - weight, dilate(any_b, s))]
    )
    mixed = reconstruct_behaviour(m)
    assert measures(m).freedom_mass == pytest.approx(weight, abs=1e-12)
    assert local_content_lp(mixed).mu >= weight - 1e-9


# ---------------------------------------------------------------------------
# JSON round-trip.
# ---------------------------------------------------------------------------


def test_model_json_round_trip():
    m = dilate(tsirelson_behaviour(), skewed_settings())
    doc = model_to_jsonable(m)
    back = model_from_jsonable(doc)
    assert np.array_equal(back.p_lambda, m.p_lambda)
    assert np.array_equal(back.p_lambda_given_xy, m.p_lambda_given_xy)
    assert np.array_equal(back.outcome_tables, m.outcome_tables)
    assert np.array_equal(back.settings.table, m.settings.table)
    assert back.factorized is not None
    assert np.array_equal(back.factorized.alice, m.factorized.alice)


def test_model_json_rejects_missing_and_mismatched_fields():
    m = trivial_free_model(local_mixture(20))
    doc = model_to_jsonable(m)
    broken = {k: v for k, v in doc.items() if k != "p_lambda"}
    with pytest.raises(StructureError):
        model_from_jsonable(broken)
    doc["num_lambda"] = 5
    with pytest.raises(StructureError):
        model_from_jsonable(doc)
