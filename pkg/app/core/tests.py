import math
import warnings
from decimal import Decimal, getcontext

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st

from app.core.belief import (
    apply_floor,
    belief_init,
    belief_update,
    discounted_return,
    log_evidence,
    select_policy,
)
from app.core.constants import BELIEF_FLOOR, SelectionMode, SignalMode
from app.core.types import Belief, DiscountConfig, SignalLayout, TransitionSample
from app.utils.exceptions import (
    DegenerateUpdateWarning,
    DimensionMismatchError,
    EmptyLibraryError,
    InvalidBeliefError,
)

priors = st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=8).map(
    lambda w: np.asarray(w) / np.sum(w)
)


def exact_posterior(prior, log_lik):
    getcontext().prec = 60
    terms = [Decimal(float(p)) * Decimal(float(l)).exp() for p, l in zip(prior, log_lik)]
    total = sum(terms)
    return [float(t / total) for t in terms]


class BeliefInitTests(SimpleTestCase):
    def test_uniform(self):
        self.assertEqual(belief_init(4).as_list(), [0.25] * 4)
        self.assertEqual(belief_init(2).as_list(), [0.5, 0.5])
        self.assertEqual(belief_init(1).as_list(), [1.0])

    def test_empty_library(self):
        with self.assertRaises(EmptyLibraryError):
            belief_init(0)

    def test_belief_validation(self):
        with self.assertRaises(InvalidBeliefError):
            Belief([0.5, 0.6])
        with self.assertRaises(InvalidBeliefError):
            Belief([1.5, -0.5])
        with self.assertRaises(InvalidBeliefError):
            Belief([])


class BeliefUpdateTests(SimpleTestCase):
    def test_hand_example(self):
        posterior = belief_update(Belief([0.5, 0.5]), np.log([0.8, 0.2]))
        np.testing.assert_allclose(posterior.weights, [0.8, 0.2], atol=1e-12)

    def test_equal_likelihoods_keep_prior(self):
        prior = Belief([0.1, 0.2, 0.3, 0.4])
        posterior = belief_update(prior, [-7.5] * 4)
        np.testing.assert_allclose(posterior.weights, prior.weights, atol=1e-15)

    def test_floor_after_extreme_evidence(self):
        posterior = belief_update(belief_init(4), [-1.0, -1001.0, -1001.0, -1001.0])
        self.assertGreaterEqual(posterior[0], 1 - 3e-12 - 1e-15)
        for w in posterior.weights[1:]:
            self.assertEqual(w, BELIEF_FLOOR)

    def test_degenerate_update_keeps_prior(self):
        prior = Belief([0.3, 0.7])
        with self.assertLogs("bprx.core", level="WARNING"):
            with self.assertWarns(DegenerateUpdateWarning):
                posterior = belief_update(prior, [-np.inf, -np.inf])
        self.assertIs(posterior, prior)

    def test_rejects_nan_and_shape_mismatch(self):
        with self.assertRaises(InvalidBeliefError):
            belief_update(belief_init(2), [np.nan, 0.0])
        with self.assertRaises(InvalidBeliefError):
            belief_update(belief_init(2), [np.inf, 0.0])
        with self.assertRaises(DimensionMismatchError):
            belief_update(belief_init(3), [0.0, 0.0])

    @hsettings(max_examples=200, deadline=None)
    @given(priors, st.data())
    def test_normalized_and_floored(self, prior, data):
        log_lik = data.draw(st.lists(st.floats(min_value=-1e6, max_value=0.0), min_size=prior.size, max_size=prior.size))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateUpdateWarning)
            posterior = belief_update(Belief(prior), log_lik)
        self.assertAlmostEqual(float(posterior.weights.sum()), 1.0, delta=1e-9)
        self.assertTrue(np.all(posterior.weights >= BELIEF_FLOOR))
        self.assertTrue(np.all(posterior.weights <= 1.0))

    @hsettings(max_examples=200, deadline=None)
    @given(priors, st.data())
    def test_matches_high_precision_bayes(self, prior, data):
        log_lik = data.draw(st.lists(st.floats(min_value=-50.0, max_value=50.0), min_size=prior.size, max_size=prior.size))
        posterior = belief_update(Belief(prior), log_lik)
        np.testing.assert_allclose(posterior.weights, exact_posterior(prior, log_lik), atol=1e-9, rtol=0)

    @hsettings(max_examples=100, deadline=None)
    @given(priors, st.data(), st.floats(min_value=-100.0, max_value=100.0))
    def test_common_shift_is_irrelevant(self, prior, data, shift):
        log_lik = np.asarray(data.draw(st.lists(st.floats(min_value=-30.0, max_value=0.0),
                                                min_size=prior.size, max_size=prior.size)))
        a = belief_update(Belief(prior), log_lik)
        b = belief_update(Belief(prior), log_lik + shift)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)

    def test_log_evidence(self):
        prior = Belief([0.25, 0.75])
        expected = math.log(0.25 * math.exp(-1.0) + 0.75 * math.exp(-2.0))
        self.assertAlmostEqual(log_evidence(prior, [-1.0, -2.0]), expected, places=12)

    def test_apply_floor_iterates(self):
        w = apply_floor(np.array([1.0 - 2e-13, 1e-13, 1e-13]))
        self.assertEqual(w[1], BELIEF_FLOOR)
        self.assertEqual(w[2], BELIEF_FLOOR)
        self.assertAlmostEqual(float(w.sum()), 1.0, delta=1e-15)


class SelectPolicyTests(SimpleTestCase):
    def test_greedy(self):
        self.assertEqual(select_policy(Belief([0.1, 0.7, 0.2])), 1)

    def test_greedy_tie_takes_smallest_index(self):
        self.assertEqual(select_policy(Belief([0.5, 0.5])), 0)

    def test_sample_degenerate(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            self.assertEqual(select_policy(Belief([1.0, 0.0]), SelectionMode.SAMPLE, rng), 0)

    def test_sample_needs_rng(self):
        with self.assertRaises(ValueError):
            select_policy(Belief([0.5, 0.5]), "sample")

    def test_greedy_invariant_under_monotone_transform(self):
        prior = np.array([0.05, 0.15, 0.45, 0.35])
        transformed = np.sqrt(prior)
        self.assertEqual(select_policy(Belief(prior)), 2)
        self.assertEqual(select_policy(Belief(transformed / transformed.sum())), 2)


class DiscountedReturnTests(SimpleTestCase):
    def test_examples(self):
        self.assertAlmostEqual(discounted_return([1, 1], DiscountConfig(0.9)), 1.9, places=12)
        self.assertEqual(discounted_return([], DiscountConfig(0.5)), 0.0)
        self.assertEqual(discounted_return([1, 1, 1], DiscountConfig(1.0)), 3.0)

    @given(st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=20))
    def test_zero_gamma_is_first_reward(self, rewards):
        self.assertEqual(discounted_return(rewards, DiscountConfig(0.0)), rewards[0])

    def test_gamma_bounds(self):
        with self.assertRaises(ValueError):
            DiscountConfig(1.5)


class SignalLayoutTests(SimpleTestCase):
    def sample(self):
        return TransitionSample(s=[1.0, 2.0], a=[0.5, -0.5], r=-3.0, s_next=[1.5, 1.5])

    def test_dimensions(self):
        self.assertEqual(SignalLayout(SignalMode.SAR, 2, 2).output_dim, 1)
        self.assertEqual(SignalLayout(SignalMode.SAS, 4, 2).output_dim, 4)
        self.assertEqual(SignalLayout(SignalMode.SARS, 4, 2).output_dim, 5)
        self.assertEqual(SignalLayout("SAS", 4, 2).input_dim, 6)

    def test_outputs(self):
        sample = self.sample()
        np.testing.assert_array_equal(SignalLayout("SAR", 2, 2).output_of(sample), [-3.0])
        np.testing.assert_array_equal(SignalLayout("SAS", 2, 2).output_of(sample), [1.5, 1.5])
        np.testing.assert_array_equal(SignalLayout("SARS", 2, 2).output_of(sample), [-3.0, 1.5, 1.5])
        np.testing.assert_array_equal(SignalLayout("SAR", 2, 2).input_of(sample), [1.0, 2.0, 0.5, -0.5])

    def test_dict_round_trip(self):
        layout = SignalLayout("SARS", 4, 2)
        self.assertEqual(SignalLayout.from_dict(layout.to_dict()), layout)

    def test_sample_validation(self):
        with self.assertRaises(DimensionMismatchError):
            TransitionSample(s=[0.0, 0.0], a=[0.0], r=0.0, s_next=[0.0])
        with self.assertRaises(DimensionMismatchError):
            TransitionSample(s=[0.0], a=[0.0], r=float("nan"), s_next=[0.0])
        with self.assertRaises(DimensionMismatchError):
            SignalLayout("SAR", 3, 2).input_of(self.sample())

    def test_sample_is_read_only(self):
        sample = self.sample()
        with self.assertRaises(ValueError):
            sample.s[0] = 10.0
