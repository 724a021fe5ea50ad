import itertools
import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from lz78source.node_mixture import NodeMixtureState, new_state
from lz78source.prior import Atoms, Dirichlet, dirac_dirichlet, parse_prior

JEFFREYS = Dirichlet((0.5, 0.5))
TWO_ATOMS = Atoms((((0.05, 0.95), 0.5), ((0.95, 0.05), 0.5)))

PRIORS = [
    "dirichlet(0.5,0.5)",
    "dirichlet(2,0.3)",
    "atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)",
    "mix(dirichlet(2,2)@0.05,atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)@0.95)",
    "mix(dirichlet(0.5,0.5)@0.5,dirichlet(3,1)@0.5)",
]
TERNARY = ["dirichlet(0.5,0.5,0.5)", "mix(dirichlet(1,2,3)@0.4,atoms((0.2,0.3,0.5)@1)@0.6)"]


def beta_marginal(a, b, c0, c1):
    """q(counts) for Dirichlet(a, b) by integrating over t = theta[1] ~ Beta(b, a)."""
    f = lambda t: stats.beta.pdf(t, b, a) * (1 - t) ** c0 * t ** c1
    return integrate.quad(f, 0, 1, limit=200, epsabs=1e-14, epsrel=1e-12)[0]


def feed(prior, seq):
    s = new_state(prior)
    for a in seq:
        s.update(a)
    return s


def test_new_state():
    s = new_state(JEFFREYS)
    assert list(s.counts) == [0, 0] and s.log_marginal() == 0.0
    s = new_state(TWO_ATOMS)
    assert np.allclose(s.log_weights, math.log(0.5))
    assert new_state(dirac_dirichlet(2.0, 0.05, 0.95)).log_weights.size == 3


def test_dirichlet_predictive_integration_oracle():
    s = feed(JEFFREYS, [0, 1, 1, 1])
    oracle = beta_marginal(0.5, 0.5, 1, 4) / beta_marginal(0.5, 0.5, 1, 3)
    assert s.predictive()[1] == pytest.approx(oracle, abs=1e-8)
    assert s.predictive()[1] == pytest.approx(0.7, abs=1e-15)


@pytest.mark.parametrize("a,b,c0,c1", [(0.5, 0.5, 2, 5), (2.0, 0.3, 0, 3), (1.5, 4.0, 6, 1)])
def test_dirichlet_marginal_integration_oracle(a, b, c0, c1):
    s = feed(Dirichlet((a, b)), [0] * c0 + [1] * c1)
    assert 2 ** s.log_marginal() == pytest.approx(beta_marginal(a, b, c0, c1), rel=1e-8)


def test_pure_dirichlet_matches_generic_mixture_path():
    # a one-component mixture forces the generic (component-weight) path
    seq = [0, 2, 2, 1, 0, 2, 2, 2]
    fast = feed(Dirichlet((0.3, 1.0, 2.0)), seq)
    generic = NodeMixtureState(Dirichlet((0.3, 1.0, 2.0)))
    generic.log_weights = np.zeros(1)
    for a in seq:
        generic.update(a)
    assert np.allclose(fast.predictive(), generic.predictive(), atol=1e-12)
    assert fast.log_marginal() == pytest.approx(generic.log_marginal(), abs=1e-12)
    assert np.allclose(fast.predictive(), (fast.counts + [0.3, 1.0, 2.0]) / (fast.total + 3.3),
                       atol=0, rtol=0)


def test_atoms_predictive():
    assert np.allclose(new_state(TWO_ATOMS).predictive(), [0.5, 0.5])
    s = feed(TWO_ATOMS, [1, 1, 1])
    oracle = (0.5 * 0.95 ** 4 + 0.5 * 0.05 ** 4) / (0.5 * 0.95 ** 3 + 0.5 * 0.05 ** 3)
    assert s.predictive()[1] == pytest.approx(oracle, abs=1e-12)
    assert s.predictive()[1] == pytest.approx(0.949869, abs=1e-6)


def test_kt_probability_of_0101():
    s = feed(JEFFREYS, [0, 1, 0, 1])
    assert s.log_marginal() == pytest.approx(math.log2(3 / 128), abs=1e-12)
    assert 2 ** s.log_marginal() == pytest.approx(beta_marginal(0.5, 0.5, 2, 2), rel=1e-9)


def test_single_atom():
    s = feed(Atoms((((0.3, 0.7), 1.0),)), [1, 1])
    assert s.log_marginal() == pytest.approx(math.log2(0.49), abs=1e-12)


def test_update_then_predict_matches_scratch():
    for text in PRIORS + TERNARY:
        p = parse_prior(text)
        seq = [i % p.alphabet_size for i in (0, 1, 1, 0, 2, 1)]
        s = feed(p, seq[:-1])
        s.update(seq[-1])
        assert np.allclose(s.predictive(), feed(p, seq).predictive(), atol=1e-12)


def test_exchangeability():
    a = feed(JEFFREYS, [0, 0, 1, 1])
    b = feed(JEFFREYS, [0, 1, 0, 1])
    assert a.log_marginal() == pytest.approx(b.log_marginal(), abs=1e-12)
    for text in PRIORS:
        p = parse_prior(text)
        seq = [0, 1, 1, 0, 1, 0, 0, 1, 1]
        perm = list(np.random.default_rng(3).permutation(seq))
        assert feed(p, seq).log_marginal() == pytest.approx(feed(p, perm).log_marginal(), abs=1e-10)


def test_support_mismatch_is_minus_inf():
    p = Atoms((((1.0, 0.0), 0.5), ((0.0, 1.0), 0.5)))
    s = feed(p, [0, 0, 1])
    assert s.log_marginal() == -math.inf
    with pytest.raises(ValueError):
        s.predictive()


def test_symbol_out_of_range():
    with pytest.raises(IndexError):
        new_state(JEFFREYS).update(2)


def test_copy_is_independent():
    s = feed(TWO_ATOMS, [1])
    c = s.copy().update(0)
    assert s.total == 1 and c.total == 2


@pytest.mark.parametrize("text", PRIORS + TERNARY)
def test_chain_rule(text):
    p = parse_prior(text)
    rng = np.random.default_rng(7)
    for _ in range(10):
        seq = rng.integers(0, p.alphabet_size, size=12)
        s = new_state(p)
        total = 0.0
        for a in seq:
            pred = s.predictive()
            assert np.all(pred > 0) and abs(pred.sum() - 1.0) < 1e-12
            total += math.log2(pred[a])
            s.update(int(a))
        assert total == pytest.approx(s.log_marginal(), abs=1e-10)


@pytest.mark.parametrize("text", PRIORS + TERNARY)
def test_normalization_over_all_strings(text):
    p = parse_prior(text)
    L = 8 if p.alphabet_size == 2 else 6
    total = sum(2 ** feed(p, seq).log_marginal()
                for seq in itertools.product(range(p.alphabet_size), repeat=L))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_ternary_dirichlet_marginal_closed_form():
    g = np.array([1.0, 2.0, 3.0])
    seq = [0, 2, 2, 1, 2]
    c = np.bincount(seq, minlength=3)
    lb = lambda v: special.gammaln(v).sum() - special.gammaln(v.sum())
    assert feed(Dirichlet(tuple(g)), seq).log_marginal() == pytest.approx(
        (lb(g + c) - lb(g)) / math.log(2), abs=1e-12)
