"""Exact LP for a single receiver with signals identified with actions.

Variables are ``pi(a|theta)``. A signal that recommends ``a`` must make ``a`` a
best response (obedience rows). Approximate DP uses one slack per
(action, ordered adjacent pair) bounding the positive part of
``pi(a|theta) - e^eps pi(a|theta')``, and a budget row per pair.
"""

from __future__ import annotations

import math

import numpy as np

from dppersuade.lp import GE, LE, EQ, LpBuilder, LpProblem, LpStatus, solve_lp
from dppersuade.model import (
    OBJECTIVE_TOL,
    Approx,
    NoPrivacy,
    PersuasionInstance,
    Pure,
    SignalingScheme,
    SolveResult,
    SolverError,
    ValidationError,
    evaluate_scheme,
    posteriors_of_scheme,
    sender_value_at,
)
from dppersuade.privacy import adjacent_pairs, max_privacy_slack

BENEFIT_TOL = 1e-7


def _check_privacy(instance: PersuasionInstance):
    if not isinstance(instance.privacy, (NoPrivacy, Pure, Approx)):
        raise ValidationError(
            f"LP solver supports none/pure/approx privacy, not {instance.privacy.kind}"
        )
    if not instance.actions:
        raise ValidationError("action set is empty")


def build_lp(instance: PersuasionInstance) -> LpProblem:
    _check_privacy(instance)
    A, K = len(instance.actions), instance.num_states
    mu = instance.prior
    u, v = instance.receiver_u, instance.sender_v
    lp = LpBuilder()
    pi = np.array(
        [[lp.add_var(f"pi[{a},{j}]", mu[j] * v[a, j]) for j in range(K)] for a in range(A)]
    )
    for a in range(A):
        for b in range(A):
            if a != b:
                coeffs = {int(pi[a, j]): mu[j] * (u[a, j] - u[b, j]) for j in range(K)}
                lp.add_row(coeffs, GE, 0.0, f"obey[{a}>{b}]")
    for j in range(K):
        lp.add_row({int(pi[a, j]): 1.0 for a in range(A)}, EQ, 1.0, f"simplex[{j}]")

    spec = instance.privacy
    if isinstance(spec, (Pure, Approx)):
        e = math.exp(spec.epsilon)
        for p in adjacent_pairs(instance):
            i, k = p.theta_index, p.theta_prime_index
            if isinstance(spec, Pure):
                for a in range(A):
                    lp.add_row(
                        {int(pi[a, i]): 1.0, int(pi[a, k]): -e}, LE, 0.0, f"pure[{a},{i},{k}]"
                    )
                continue
            z = [lp.add_var(f"z[{a},{i},{k}]") for a in range(A)]
            for a in range(A):
                lp.add_row(
                    {int(pi[a, i]): 1.0, int(pi[a, k]): -e, z[a]: -1.0}, LE, 0.0,
                    f"zdef[{a},{i},{k}]",
                )
            lp.add_row({zi: 1.0 for zi in z}, LE, spec.delta, f"budget[{i},{k}]")
    return lp.build()


def _scheme_from_values(instance: PersuasionInstance, x: np.ndarray) -> SignalingScheme:
    A, K = len(instance.actions), instance.num_states
    probs = np.clip(x[: A * K].reshape(A, K), 0.0, 1.0)
    probs /= probs.sum(axis=0, keepdims=True)
    return SignalingScheme(instance.actions, probs)


def solve_single(instance: PersuasionInstance, backend: str = "auto") -> SolveResult:
    problem = build_lp(instance)
    sol = solve_lp(problem, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise SolverError(
            f"persuasion LP ended {sol.status.value}; the no-information scheme should be feasible"
        )
    scheme = _scheme_from_values(instance, sol.values)
    posteriors = posteriors_of_scheme(instance, scheme)
    value = evaluate_scheme(instance, scheme)
    if abs(value - sol.objective_value) > OBJECTIVE_TOL:
        raise SolverError(
            f"LP objective {sol.objective_value:.12g} disagrees with scheme value {value:.12g}"
        )
    slack = None
    if not isinstance(instance.privacy, NoPrivacy):
        report = max_privacy_slack(instance, scheme)
        if not report.satisfied:
            raise SolverError(f"LP scheme violates privacy by {report.worst_slack:.3g}")
        slack = report.worst_slack
    distinct = {tuple(np.round(p.belief, 9)) for p in posteriors}
    return SolveResult(
        scheme=scheme,
        value=value,
        posteriors=tuple(posteriors),
        support_size=len(posteriors),
        privacy_slack=slack,
        solver=f"lp-{sol.backend}",
        diagnostics={
            "lp_objective": sol.objective_value,
            "iterations": sol.iterations,
            "distinct_posteriors": len(distinct),
            "num_vars": problem.num_vars,
            "num_rows": problem.num_rows,
        },
    )


def benefits_from_persuasion(instance: PersuasionInstance) -> bool:
    """True when the optimal scheme strictly beats revealing nothing."""
    baseline = sender_value_at(instance, instance.prior)
    return solve_single(instance).value > baseline + BENEFIT_TOL
