import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from lz78source.prior import (Atoms, Dirichlet, Mixture, PriorError, as_pmf, describe,
                              dirac_dirichlet, entropy_bits, entropy_of_mean, expected_entropy,
                              flatten, has_full_support, jensen_gap, mean_pmf, parse_prior,
                              sample_theta)


def h2(p):
    return entropy_bits([p, 1 - p])


def beta_entropy_oracle(a, b):
    f = lambda t: stats.beta.pdf(t, a, b) * h2(t)
    val, _ = integrate.quad(f, 0, 1, limit=200, epsabs=1e-13)
    return val


# -- construction ---------------------------------------------------------------


def test_pmf_validation():
    with pytest.raises(PriorError):
        as_pmf([1.0])
    with pytest.raises(PriorError):
        as_pmf([0.5, 0.6])
    with pytest.raises(PriorError):
        as_pmf([1.2, -0.2])


def test_dirichlet_needs_positive_gamma():
    with pytest.raises(PriorError):
        Dirichlet((0.5, 0.0))


def test_mixture_depth_capped_at_two():
    inner = Mixture(((Dirichlet((1.0, 1.0)), 0.5), (Dirichlet((2.0, 2.0)), 0.5)))
    with pytest.raises(PriorError):
        Mixture(((inner, 0.5), (Dirichlet((1.0, 1.0)), 0.5)))


def test_flatten_multiplies_weights():
    flat = flatten(dirac_dirichlet(2.0, 0.05, 0.95))
    assert flat.n_components == 3
    assert np.allclose(sorted(flat.weights), [0.05, 0.475, 0.475])


def test_mixture_alphabet_mismatch():
    with pytest.raises(PriorError):
        Mixture(((Dirichlet((1.0, 1.0)), 0.5), (Dirichlet((1.0, 1.0, 1.0)), 0.5)))


# -- descriptors -----------------------------------------------------------------


@pytest.mark.parametrize("text", [
    "dirichlet(0.5,0.5)",
    "dirichlet( 1e-2 , 2.5E0 ,3)",
    "atoms((0,1)@1)",
    "atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)",
    "mix(dirichlet(2,2)@0.05,atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)@0.95)",
])
def test_descriptor_round_trip(text):
    p = parse_prior(text)
    assert parse_prior(describe(p)) == p
    assert describe(parse_prior(describe(p))) == describe(p)


@pytest.mark.parametrize("text", ["dirichlet(0.5", "dirichlet()", "beta(1,1)", "atoms((0.5,0.5)@0.7)",
                                  "dirichlet(1,1) x"])
def test_descriptor_errors(text):
    with pytest.raises(PriorError):
        parse_prior(text)


gammas = st.lists(st.floats(1e-3, 50.0, allow_nan=False), min_size=2, max_size=4)


@settings(max_examples=60, deadline=None)
@given(gammas)
def test_descriptor_round_trip_property(g):
    p = Dirichlet(tuple(g))
    assert parse_prior(describe(p)) == p


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.0, 1.0), st.floats(0.01, 0.99))
def test_dirac_dirichlet_round_trip_property(gamma, xi, w):
    p = dirac_dirichlet(gamma, xi, w)
    assert parse_prior(describe(p)) == p


# -- moments -----------------------------------------------------------------------


def test_jeffreys_entropy_rate_against_quadrature():
    oracle = beta_entropy_oracle(0.5, 0.5)
    assert oracle == pytest.approx(0.557305, abs=1e-6)
    assert expected_entropy(Dirichlet((0.5, 0.5))) == pytest.approx(oracle, abs=1e-10)


def test_dirichlet_2_2_entropy_rate():
    oracle = beta_entropy_oracle(2.0, 2.0)
    assert oracle == pytest.approx((7 / 12) / math.log(2), abs=1e-10)
    assert expected_entropy(Dirichlet((2.0, 2.0))) == pytest.approx(oracle, abs=1e-10)
    assert expected_entropy(Dirichlet((2.0, 2.0))) == pytest.approx(0.841572, abs=1e-6)


@pytest.mark.parametrize("a,b", [(0.01, 0.01), (0.3, 2.0), (1.0, 1.0), (5.0, 0.7)])
def test_binary_dirichlet_entropy_rate_quadrature(a, b):
    assert expected_entropy(Dirichlet((a, b))) == pytest.approx(beta_entropy_oracle(a, b), abs=1e-8)


def test_ternary_dirichlet_entropy_rate_monte_carlo():
    g = np.array([0.5, 1.0, 3.0])
    th = np.random.default_rng(5).dirichlet(g, size=400_000)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(th > 0, th * np.log2(th), 0.0).sum(axis=1)
    se = h.std() / math.sqrt(h.size)
    assert abs(expected_entropy(Dirichlet(tuple(g))) - h.mean()) < 4 * se


def test_dirac_dirichlet_entropy_rate():
    p = dirac_dirichlet(2.0, 0.05, 0.95)
    oracle = 0.05 * beta_entropy_oracle(2.0, 2.0) + 0.95 * h2(0.05)
    assert expected_entropy(p) == pytest.approx(oracle, abs=1e-10)
    assert expected_entropy(p) == pytest.approx(0.314159, abs=1e-5)


def test_harmonic_closed_form_for_symmetric_binary_dirichlet():
    # E[H] for Dirichlet(g, g) reduces to (H_{2g} - H_g) / ln 2
    from lz78source.special import harmonic
    for g in (0.01, 0.5, 2.0, 7.3):
        assert expected_entropy(Dirichlet((g, g))) == pytest.approx(
            (harmonic(2 * g) - harmonic(g)) / math.log(2), abs=1e-12)


def test_mean_and_entropy_of_mean():
    assert np.allclose(mean_pmf(Dirichlet((0.5, 0.5))), [0.5, 0.5])
    atoms = Atoms((((1.0, 0.0), 0.25), ((0.0, 1.0), 0.75)))
    assert np.allclose(mean_pmf(atoms), [0.25, 0.75])
    assert entropy_of_mean(Dirichlet((0.5, 0.5, 0.5))) == pytest.approx(math.log2(3), abs=1e-12)
    assert entropy_of_mean(Atoms((((1.0, 0.0), 1.0),))) == 0.0
    assert np.allclose(mean_pmf(dirac_dirichlet(2.0, 0.05, 0.95)), [0.5, 0.5])


def test_jensen_gap_examples():
    assert jensen_gap(Dirichlet((0.5, 0.5))) == pytest.approx(0.442695, abs=1e-6)
    assert jensen_gap(Atoms((((0.3, 0.7), 1.0),))) == pytest.approx(0.0, abs=1e-15)
    assert jensen_gap(Atoms((((1.0, 0.0), 0.5), ((0.0, 1.0), 0.5)))) == pytest.approx(1.0)


@pytest.mark.parametrize("text", [
    "dirichlet(0.5,0.5)", "dirichlet(0.2,1,3)", "atoms((0.1,0.9)@0.3,(0.6,0.4)@0.7)",
    "mix(dirichlet(2,2)@0.05,atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)@0.95)",
])
def test_entropy_ordering(text):
    p = parse_prior(text)
    h, mu = expected_entropy(p), entropy_of_mean(p)
    assert -1e-12 <= h <= mu + 1e-12 <= math.log2(p.alphabet_size) + 2e-12


def test_full_support():
    assert has_full_support(dirac_dirichlet(2.0, 0.05, 0.95))
    assert not has_full_support(Atoms((((0.3, 0.7), 1.0),)))


# -- sampling ----------------------------------------------------------------------


def test_sample_two_atoms_frequency():
    p = Atoms((((1.0, 0.0), 0.5), ((0.0, 1.0), 0.5)))
    rng = np.random.default_rng(11)
    draws = np.array([sample_theta(p, rng)[0] for _ in range(100_000)])
    assert set(np.unique(draws)) <= {0.0, 1.0}
    assert draws.mean() == pytest.approx(0.5, abs=0.01)


def test_sample_jeffreys_mean():
    rng = np.random.default_rng(12)
    th = np.array([sample_theta(Dirichlet((0.5, 0.5)), rng)[0] for _ in range(200_000)])
    # 1e6 draws would pin the mean to 0.5 +- 0.002; 2e5 keeps the test fast at the same 4.5 sigma
    assert th.mean() == pytest.approx(0.5, abs=0.0045)


def test_sample_dirac_dirichlet_atom_fraction():
    p = dirac_dirichlet(2.0, 0.05, 0.95)
    rng = np.random.default_rng(13)
    on_atom = 0
    for _ in range(100_000):
        t = sample_theta(p, rng)
        on_atom += t[0] in (0.05, 0.95)
    assert on_atom / 1e5 == pytest.approx(0.95, abs=0.01)


@pytest.mark.parametrize("text", ["dirichlet(0.5,0.5)", "dirichlet(0.01,0.01)", "dirichlet(0.3,1,4)",
                                  "mix(dirichlet(2,2)@0.05,atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)@0.95)"])
def test_sampling_moments_within_three_se(text):
    p = parse_prior(text)
    rng = np.random.default_rng(14)
    th = np.array([sample_theta(p, rng) for _ in range(100_000)])
    assert np.all(th >= 0) and np.allclose(th.sum(axis=1), 1.0)
    se = th.std(axis=0) / math.sqrt(th.shape[0])
    assert np.all(np.abs(th.mean(axis=0) - mean_pmf(p)) < 3.5 * se + 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(th > 0, th * np.log2(th), 0.0).sum(axis=1)
    assert abs(h.mean() - expected_entropy(p)) < 3.5 * h.std() / math.sqrt(h.size)
