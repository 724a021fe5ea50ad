import math
from collections import Counter

import numpy as np
import pytest
from scipy import integrate, stats

from lz78source.empirical import (box_mass, empirical_measure_B, empirical_measure_joint, eta_star,
                                  mu_k, tuple_counts)
from lz78source.events import SimplexBox, TestEvent, parse_box, parse_event
from lz78source.lz_source import generate
from lz78source.prior import Atoms, Dirichlet

JEFFREYS = Dirichlet((0.5, 0.5))
TWO_ATOMS = Atoms((((0.05, 0.95), 0.5), ((0.95, 0.05), 0.5)))


def mu_oracle(x, k):
    """Count-weighted empirical conditional entropy from Python counters."""
    x = list(x)
    W = len(x) - k
    tup = Counter(tuple(x[i:i + k + 1]) for i in range(W))
    ctx = Counter(t[:-1] for t in tup.elements())
    return sum(c / W * math.log2(ctx[t[:-1]] / c) for t, c in tup.items())


# -- tuple counts -------------------------------------------------------------------


def test_tuple_count_examples():
    assert tuple_counts("0101", 2).as_dict() == {"01": 2, "10": 1}
    assert tuple_counts("0101", 1).as_dict() == {"0": 2, "1": 2}
    tc = tuple_counts("0101", 2)
    assert tc["01"] == 2 and tc.windows == 3


def test_tuple_count_limits():
    with pytest.raises(ValueError):
        tuple_counts("0101", 5)
    with pytest.raises(ValueError):
        tuple_counts(np.zeros(100, dtype=np.uint8), 13)


@pytest.mark.parametrize("A,r", [(2, 2), (2, 7), (3, 4), (4, 3)])
def test_tuple_count_marginal_consistency(A, r):
    x = np.random.default_rng(r).integers(0, A, 5000)
    hi = tuple_counts(x, r, A).table.reshape(-1, A).sum(axis=1)
    lo = tuple_counts(x[:-1], r - 1, A).table
    assert np.array_equal(hi, lo)


# -- mu_k ---------------------------------------------------------------------------


def test_mu_examples():
    assert mu_k("0101", 1, [4]).curve.final == pytest.approx(0.0, abs=1e-15)
    assert mu_k("0001", 0, [4]).curve.final == pytest.approx(0.811278, abs=1e-6)


def test_mu_checkpoint_too_small():
    with pytest.raises(ValueError):
        mu_k("010110", 3, [2, 6])
    with pytest.raises(ValueError):
        mu_k("01", 3)


@pytest.mark.parametrize("k", [0, 1, 3, 6, 11, 12, 13, 16])
def test_mu_matches_counter_oracle(k):
    x = generate(JEFFREYS, 20_000, k + 1).x
    ck = [k + 1, 100, 1234, 20_000]
    got = mu_k(x, k, ck).curve.value
    assert np.allclose(got, [mu_oracle(x[:m], k) for m in ck], atol=1e-10)


def test_mu_ternary_oracle():
    x = np.random.default_rng(1).integers(0, 3, 3000)
    ck = [50, 3000]
    for k in (0, 2, 5):
        assert np.allclose(mu_k(x, k, ck, 3).curve.value, [mu_oracle(x[:m], k) for m in ck], atol=1e-10)


def test_mu_monotone_in_k():
    rng = np.random.default_rng(4)
    for x in (rng.integers(0, 2, 20_000), generate(JEFFREYS, 20_000, 3).x):
        n = len(x)
        vals = [mu_k(x, k, [n]).curve.final for k in range(10)]
        for k in range(9):
            assert vals[k + 1] <= vals[k] + (k + 1) / n
        assert all(0 <= v <= 1 + 1e-12 for v in vals)


# -- measures of B ------------------------------------------------------------------


def test_full_box_measure_is_one():
    t = generate(JEFFREYS, 1000, 1)
    assert np.all(empirical_measure_B(t, SimplexBox.full(2)).value == 1.0)


def test_joint_full_boxes_equal_tuple_frequency():
    t = generate(JEFFREYS, 50_000, 2)
    for word in ("0", "01", "110", "0100"):
        ev = TestEvent.unconstrained([int(c) for c in word], 2)
        tc = tuple_counts(t.x, len(word))
        assert empirical_measure_joint(t, ev, [t.n]).final == tc[word] / tc.windows


def test_joint_bounded_by_marginals():
    t = generate(JEFFREYS, 50_000, 5)
    b1 = parse_box("box(1:0:0.5)", 2)
    b2 = parse_box("box(0:0.2:0.9)", 2)
    ev = TestEvent((1, 0), (b1, b2))
    L = empirical_measure_joint(t, ev, [t.n]).final
    M = min(empirical_measure_B(t, b, [t.n]).final for b in (b1, b2))
    assert 0 <= L <= M + 2 / t.n


def test_joint_zero_probability_word_is_zero():
    t = generate(Atoms((((0.0, 1.0), 1.0),)), 1000, 1)
    ev = TestEvent.unconstrained((0, 1), 2)
    assert np.all(empirical_measure_joint(t, ev).value == 0.0)


def test_measures_need_b_trace():
    t = generate(JEFFREYS, 100, 1, record_b=False)
    with pytest.raises(ValueError):
        empirical_measure_B(t, SimplexBox.full(2))


# -- eta_star -------------------------------------------------------------------------


def test_eta_star_examples():
    assert eta_star(JEFFREYS, TestEvent.unconstrained((0, 1), 2)).value == pytest.approx(0.25)
    single = Atoms((((0.3, 0.7), 1.0),))
    assert eta_star(single, TestEvent.unconstrained((1, 1), 2)).value == pytest.approx(0.49)


def test_eta_star_box_quadrature_oracle():
    oracle = integrate.quad(lambda t: t * stats.beta.pdf(t, 0.5, 0.5), 0, 0.5)[0]
    assert oracle == pytest.approx(0.25 - 1 / (2 * math.pi), abs=1e-12)
    est = eta_star(JEFFREYS, TestEvent((1,), (parse_box("box(1:0:0.5)", 2),)),
                   np.random.default_rng(0), samples=1_000_000)
    assert est.stderr < 5e-4
    assert abs(est.value - oracle) < 4 * est.stderr


def test_eta_star_atoms_exact():
    ev = TestEvent((1,), (parse_box("box(1:0.9:1)", 2),))
    est = eta_star(TWO_ATOMS, ev)
    assert est.value == pytest.approx(0.5 * 0.95) and est.stderr == 0.0


def test_box_mass():
    assert box_mass(JEFFREYS, parse_box("box(1:0:0.5)", 2)).value == pytest.approx(0.5, abs=2e-3)
    assert box_mass(TWO_ATOMS, parse_box("box(1:0.9:1)", 2)).value == 0.5
    assert box_mass(JEFFREYS, SimplexBox.full(2)).value == 1.0


def test_atoms_event_matches_eta_star():
    ev = TestEvent((1,), (parse_box("box(1:0.9:1)", 2),))
    target = eta_star(TWO_ATOMS, ev).value
    vals = [empirical_measure_joint(generate(TWO_ATOMS, 10 ** 6, s), ev, [10 ** 6]).final
            for s in range(1, 6)]
    assert np.mean(vals) == pytest.approx(target, abs=0.01)


# -- descriptors ----------------------------------------------------------------------


def test_box_and_event_descriptors():
    b = parse_box("box(1:0:0.5)", 2)
    assert b == SimplexBox.coordinate(2, 1, 0.0, 0.5)
    assert parse_box(b.describe(), 2) == b
    ev = parse_event("event(01;box(1:0:0.5);box())", 2)
    assert ev.r == 2 and ev.boxes[1].is_full
    assert parse_event(ev.describe(), 2) == ev
    assert parse_event("event(011)", 2) == TestEvent.unconstrained((0, 1, 1), 2)
    with pytest.raises(ValueError):
        parse_box("box(2:0:1)", 2)
    with pytest.raises(ValueError):
        SimplexBox((0.6, 0.0), (0.5, 1.0))
    assert list(b.contains(np.array([[0.7, 0.3], [0.2, 0.8]]))) == [True, False]
