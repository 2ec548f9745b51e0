import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance, threshold_instance
from dppersuade.model import (
    Approx,
    NoPrivacy,
    PersuasionInstance,
    PosteriorPoint,
    Pure,
    Renyi,
    SignalingScheme,
    ValidationError,
    all_states,
    bayes_plausibility_check,
    best_response,
    evaluate_scheme,
    iid_prior,
    merge_signals,
    posteriors_of_scheme,
    privacy_from_params,
    sender_value_at,
)


def test_full_revelation_posteriors_are_point_masses():
    inst = threshold_instance(mu=0.5)
    posts = posteriors_of_scheme(inst, SignalingScheme.full_revelation(2))
    assert len(posts) == 2
    np.testing.assert_allclose(posts[0].belief, [1, 0])
    np.testing.assert_allclose(posts[1].belief, [0, 1])
    assert [p.weight for p in posts] == pytest.approx([0.5, 0.5])
    assert bayes_plausibility_check(inst, posts)


def test_no_information_posterior_is_prior(threshold):
    posts = posteriors_of_scheme(threshold, SignalingScheme.no_information(2))
    assert len(posts) == 1
    np.testing.assert_allclose(posts[0].belief, threshold.prior)
    assert posts[0].weight == pytest.approx(1.0)


def test_bayes_update_arithmetic(threshold):
    scheme = SignalingScheme(("s0", "s1"), np.array([[0.1, 0.8], [0.9, 0.2]]))
    posts = posteriors_of_scheme(threshold, scheme)
    s1 = posts[1]
    expected = 0.475 * 0.2 / (0.525 * 0.9 + 0.475 * 0.2)
    assert s1.belief[1] == pytest.approx(expected, abs=1e-15)
    assert s1.weight == pytest.approx(0.5675, abs=1e-15)


def test_zero_weight_signals_are_dropped(threshold):
    scheme = SignalingScheme(("s0", "s1"), np.array([[1.0, 1.0], [0.0, 0.0]]))
    assert len(posteriors_of_scheme(threshold, scheme)) == 1


def test_dimension_mismatch_rejected(threshold):
    with pytest.raises(ValidationError):
        posteriors_of_scheme(threshold, SignalingScheme.no_information(3))


@pytest.mark.parametrize("q, action", [(0.6, 1), (0.4, 0), (0.5, 1)])
def test_best_response_threshold(threshold, q, action):
    assert best_response(threshold, [1 - q, q]) == action


@pytest.mark.parametrize("q, value", [(0.49, 0.0), (0.5, 1.0)])
def test_sender_value_step(threshold, q, value):
    assert sender_value_at(threshold, [1 - q, q]) == value


def test_sender_value_constant_payoff():
    inst = PersuasionInstance(
        n=1, states=((0,), (1,)), prior=[0.5, 0.5], actions=("x", "y"),
        receiver_u=[[1.0, 0.0], [0.0, 1.0]], sender_v=[[0.3, 0.3], [0.3, 0.3]],
    )
    assert sender_value_at(inst, [1.0, 0.0]) == pytest.approx(0.3)


def test_evaluate_two_posterior_scheme(threshold):
    posts = [PosteriorPoint([1.0, 0.0], 0.05), PosteriorPoint([0.5, 0.5], 0.95)]
    assert bayes_plausibility_check(threshold, posts)
    scheme = SignalingScheme.from_posteriors(threshold.prior, posts)
    assert evaluate_scheme(threshold, scheme) == pytest.approx(0.95, abs=1e-12)


def test_evaluate_full_revelation(threshold):
    value = evaluate_scheme(threshold, SignalingScheme.full_revelation(2))
    assert value == pytest.approx(0.475, abs=1e-15)


def test_evaluate_no_information_equals_prior_value(threshold):
    scheme = SignalingScheme.no_information(2)
    assert evaluate_scheme(threshold, scheme) == sender_value_at(threshold, threshold.prior)


def test_bayes_check_rejects_single_wrong_posterior(threshold):
    assert not bayes_plausibility_check(threshold, [PosteriorPoint([0.3, 0.7], 1.0)])


def test_instance_validation():
    base = dict(n=1, states=((0,), (1,)), actions=("a",), receiver_u=[[0, 0]], sender_v=[[0, 0]])
    with pytest.raises(ValidationError, match="prior"):
        PersuasionInstance(prior=[0.5, 0.6], **base)
    with pytest.raises(ValidationError, match="positive"):
        PersuasionInstance(prior=[1.0, 0.0], **base)
    with pytest.raises(ValidationError, match="distinct"):
        PersuasionInstance(**{**base, "states": ((0,), (0,))}, prior=[0.5, 0.5])
    with pytest.raises(ValidationError, match="privacy_set"):
        PersuasionInstance(prior=[0.5, 0.5], privacy_set={2}, **base)


def test_scheme_validation():
    with pytest.raises(ValidationError, match="sums"):
        SignalingScheme(("a", "b"), np.array([[0.5, 0.5], [0.4, 0.5]]))
    with pytest.raises(ValidationError):
        SignalingScheme(("a",), np.array([[1.2, 1.0]]))


def test_privacy_specs():
    assert privacy_from_params("none") == NoPrivacy()
    assert privacy_from_params("approx", 0.1, 0.0) == Pure(0.1)
    assert privacy_from_params("approx", 0.1, 0.01) == Approx(0.1, 0.01)
    assert privacy_from_params("renyi", 0.1, alpha=2) == Renyi(2.0, 0.1)
    for bad in (lambda: Pure(0.0), lambda: Approx(0.1, 0.0), lambda: Approx(0.1, 1.0),
                lambda: Renyi(1.0, 0.1), lambda: privacy_from_params("laplace", 1.0)):
        with pytest.raises(ValidationError):
            bad()


def test_iid_prior_binomial():
    states = all_states(3)
    prior = iid_prior(states, 0.5)
    np.testing.assert_allclose(prior, np.full(8, 1 / 8))
    assert iid_prior(all_states(2), 0.3)[0] == pytest.approx(0.49)


@st.composite
def instance_and_scheme(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    S = draw(st.integers(1, 5))
    probs = rng.dirichlet(np.ones(S), size=inst.num_states).T
    return inst, SignalingScheme(tuple(f"s{i}" for i in range(S)), probs)


@settings(max_examples=100, deadline=None)
@given(instance_and_scheme())
def test_posteriors_always_bayes_plausible(pair):
    inst, scheme = pair
    assert bayes_plausibility_check(inst, posteriors_of_scheme(inst, scheme))


@settings(max_examples=100, deadline=None)
@given(instance_and_scheme())
def test_merging_same_response_signals_keeps_value(pair):
    inst, scheme = pair
    responses = [best_response(inst, p.belief) for p in posteriors_of_scheme(inst, scheme)]
    live = [p.signal for p in posteriors_of_scheme(inst, scheme)]
    groups = {}
    for s, a in zip(live, responses):
        groups.setdefault(a, []).append(s)
    dead = [s for s in range(scheme.num_signals) if s not in live]
    merged_groups = list(groups.values())
    if dead:
        merged_groups[0] = merged_groups[0] + dead
    merged = merge_signals(scheme, merged_groups)
    assert evaluate_scheme(inst, merged) == pytest.approx(evaluate_scheme(inst, scheme), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(0.1, 10.0),
    st.floats(-5.0, 5.0),
)
def test_best_response_affine_invariant(seed, scale, shift):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    moved = PersuasionInstance(
        n=inst.n, states=inst.states, prior=inst.prior, actions=inst.actions,
        receiver_u=scale * inst.receiver_u + shift, sender_v=inst.sender_v,
    )
    belief = rng.dirichlet(np.ones(inst.num_states))
    assert best_response(moved, belief) == best_response(inst, belief)
