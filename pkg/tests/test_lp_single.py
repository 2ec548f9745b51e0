import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import THRESHOLD_APPROX_VALUE, random_instance, threshold_instance
from dppersuade.binary import BinaryInstance, solve_binary
from dppersuade.lp import solve_lp
from dppersuade.lp_single import benefits_from_persuasion, build_lp, solve_single
from dppersuade.model import (
    Approx,
    NoPrivacy,
    PersuasionInstance,
    Pure,
    Renyi,
    ValidationError,
    bayes_plausibility_check,
    evaluate_scheme,
)
from dppersuade.privacy import adjacent_pairs, max_privacy_slack


def test_pure_lp_shape():
    problem = build_lp(threshold_instance(privacy=Pure(0.1)))
    assert problem.num_vars == 4
    assert problem.count_rows("obey") == 2
    assert problem.count_rows("simplex") == 2
    assert problem.count_rows("pure") == 4
    assert problem.num_rows == 8


def test_approx_lp_shape():
    problem = build_lp(threshold_instance(privacy=Approx(0.1, 0.01)))
    assert problem.count_vars("pi") == 4
    assert problem.count_vars("z") == 4
    assert problem.count_rows("zdef") == 4
    assert problem.count_rows("budget") == 2


def test_no_privacy_lp_shape():
    problem = build_lp(threshold_instance())
    assert problem.num_rows == problem.count_rows("obey") + problem.count_rows("simplex")


def test_renyi_rejected():
    with pytest.raises(ValidationError):
        build_lp(threshold_instance(privacy=Renyi(2.0, 0.1)))


@pytest.mark.parametrize(
    "privacy, value",
    [(NoPrivacy(), 0.95), (Pure(0.1), 0.0), (Approx(0.095, 0.01), THRESHOLD_APPROX_VALUE)],
)
def test_threshold_values(privacy, value):
    result = solve_single(threshold_instance(privacy=privacy))
    assert result.value == pytest.approx(value, abs=1e-9)
    assert result.diagnostics["lp_objective"] == pytest.approx(result.value, abs=1e-7)


def test_threshold_approx_matches_binary_solver():
    lp = solve_single(threshold_instance(privacy=Approx(0.095, 0.01))).value
    exact = solve_binary(BinaryInstance(0.475, 0.5), Approx(0.095, 0.01)).value
    assert lp == pytest.approx(exact, abs=1e-6)


def test_benefit_predicate():
    assert not benefits_from_persuasion(threshold_instance(privacy=Pure(0.1)))
    assert benefits_from_persuasion(threshold_instance(privacy=Approx(0.095, 0.01)))


def test_aligned_interests_do_not_benefit():
    # sender wants whatever the receiver wants; V is already maximal at the prior
    u = np.array([[1.0, 1.0], [0.0, 0.0]])
    inst = PersuasionInstance(
        n=1, states=((0,), (1,)), prior=[0.4, 0.6], actions=("a", "b"),
        receiver_u=u, sender_v=u, privacy=Approx(0.5, 0.1),
    )
    assert not benefits_from_persuasion(inst)


def test_single_action_instance():
    inst = PersuasionInstance(
        n=1, states=((0,), (1,)), prior=[0.5, 0.5], actions=("only",),
        receiver_u=[[0.0, 0.0]], sender_v=[[0.2, 0.8]], privacy=Pure(0.1),
    )
    result = solve_single(inst)
    assert result.value == pytest.approx(0.5)
    assert max_privacy_slack(inst, result.scheme).satisfied


def test_backends_give_same_value(rng):
    for _ in range(20):
        inst = random_instance(rng, privacy=Approx(0.3, 0.05))
        a = solve_single(inst, backend="simplex").value
        b = solve_single(inst, backend="highs").value
        assert a == pytest.approx(b, abs=1e-8)


def _random_binary(rng, max_pieces=4):
    k = int(rng.integers(1, max_pieces + 1))
    bps = tuple(sorted(rng.uniform(0.02, 0.98, k - 1)))
    if any(b2 - b1 < 1e-3 for b1, b2 in zip(bps, bps[1:])):
        bps = tuple(np.linspace(0.1, 0.9, k - 1))
    vals = tuple(rng.uniform(0, 1, k))
    return BinaryInstance(float(rng.uniform(0.05, 0.95)), 0.5, bps, vals)


def _random_spec(rng):
    eps = float(rng.uniform(0.02, 1.5))
    if rng.random() < 0.5:
        return Pure(eps)
    return Approx(eps, float(rng.uniform(0.001, 0.2)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_binary_solver(seed):
    rng = np.random.default_rng(seed)
    b = _random_binary(rng)
    spec = _random_spec(rng)
    lp = solve_single(b.to_instance(spec))
    assert lp.value == pytest.approx(solve_binary(b, spec).value, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_outputs_pass_audits(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, privacy=_random_spec(rng))
    result = solve_single(inst)
    assert max_privacy_slack(inst, result.scheme).satisfied
    assert bayes_plausibility_check(inst, result.posteriors)
    assert result.value == pytest.approx(evaluate_scheme(inst, result.scheme), abs=1e-7)
    assert result.support_size <= len(inst.actions)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_in_privacy_parameters(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    eps = sorted(rng.uniform(0.05, 2.0, 3))
    pure = [solve_single(inst.with_privacy(Pure(e))).value for e in eps]
    assert all(b >= a - 1e-9 for a, b in zip(pure, pure[1:]))
    deltas = sorted(rng.uniform(0.001, 0.3, 3))
    approx = [solve_single(inst.with_privacy(Approx(eps[0], d))).value for d in deltas]
    assert all(b >= a - 1e-9 for a, b in zip(approx, approx[1:]))
    assert approx[0] >= pure[0] - 1e-9
    free = solve_single(inst).value
    assert max(pure + approx) <= free + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pure_posteriors_in_likelihood_region(seed):
    rng = np.random.default_rng(seed)
    eps = float(rng.uniform(0.05, 2.0))
    inst = random_instance(rng, privacy=Pure(eps))
    result = solve_single(inst)
    mu = inst.prior
    for post in result.posteriors:
        q = post.belief
        for p in adjacent_pairs(inst):
            i, k = p.theta_index, p.theta_prime_index
            assert q[i] * mu[k] <= (math.exp(eps) + 1e-7) * q[k] * mu[i]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_slack_variables_cover_clamps(seed):
    rng = np.random.default_rng(seed)
    spec = Approx(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.001, 0.2)))
    inst = random_instance(rng, privacy=spec)
    problem = build_lp(inst)
    x = solve_lp(problem).values
    A, K = len(inst.actions), inst.num_states
    pi = x[: A * K].reshape(A, K)
    z = dict(zip(problem.var_names, x))
    e = math.exp(spec.epsilon)
    for p in adjacent_pairs(inst):
        i, k = p.theta_index, p.theta_prime_index
        clamps = np.maximum(0.0, pi[:, i] - e * pi[:, k])
        slacks = np.array([z[f"z[{a},{i},{k}]"] for a in range(A)])
        assert np.all(slacks >= clamps - 1e-9)
        assert clamps.sum() <= slacks.sum() + 1e-9 <= spec.delta + 2e-9
