"""The four CHSH expressions, the measure formula, and the pairwise bound."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellmeter import (
    Behaviour,
    chsh_report,
    chsh_values,
    measure_from_smax,
    mix_extremal,
    pairwise_bound_check,
    pr_box,
    s_max_value,
)
from bellmeter.errors import DomainError


def test_pr_box_1_saturates_first_expression():
    # a XOR b = xy correlations: E_00 = E_01 = E_10 = 1, E_11 = -1
    values = chsh_values(pr_box(1).behaviour)
    assert values == (4.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("index", range(1, 9))
def test_each_pr_box_saturates_its_expression(index):
    values = chsh_values(pr_box(index).behaviour)
    expression = (index + 1) // 2
    sign = 1.0 if index % 2 == 1 else -1.0
    assert values[expression - 1] == sign * 4.0
    for i, v in enumerate(values, start=1):
        if i != expression:
            assert v == 0.0


def test_chsh_values_requires_two_settings():
    wide = Behaviour.from_table(np.full((3, 2, 2, 2), 0.25))
    with pytest.raises(DomainError):
        chsh_values(wide)


def test_measure_formula_cases():
    assert measure_from_smax(2.0) == 1.0
    assert measure_from_smax(1.2) == 1.0
    assert measure_from_smax(4.0) == 0.0
    assert measure_from_smax(3.0) == 0.5
    assert measure_from_smax(2 * math.sqrt(2)) == pytest.approx(
        2 - math.sqrt(2), abs=1e-15
    )


def test_measure_formula_domain():
    with pytest.raises(DomainError):
        measure_from_smax(4.5)
    with pytest.raises(DomainError):
        measure_from_smax(-0.5)
    # values inside rounding slack of the endpoints are clamped, not refused
    assert measure_from_smax(4.0 + 1e-12) == 0.0
    assert measure_from_smax(-1e-12) == 1.0


def test_report_bundles_max_and_measure():
    r = chsh_report(pr_box(3).behaviour)
    assert r.s_max == 4.0
    assert r.measure == 0.0
    assert len(r.s_values) == 4
    assert s_max_value(r.s_values) == 4.0


def test_pairwise_bound_on_extremal_points():
    for index in range(1, 9):
        assert pairwise_bound_check(pr_box(index).behaviour)


@settings(max_examples=80, deadline=None)
@given(
    raw=st.lists(
        st.floats(min_value=0.0, max_value=1.0), min_size=24, max_size=24
    ).filter(lambda ws: sum(ws) > 1e-3)
)
def test_pairwise_bound_on_random_extremal_mixtures(raw):
    weights = np.asarray(raw) / sum(raw)
    b = mix_extremal(weights)
    assert pairwise_bound_check(b)
    # at most one |S_i| can exceed the local bound
    values = chsh_values(b)
    assert sum(1 for v in values if abs(v) > 2.0) <= 1
