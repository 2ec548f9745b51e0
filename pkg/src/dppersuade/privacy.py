"""Adjacency and exact verification of pure, approximate and Renyi DP."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from dppersuade.model import (
    Approx,
    NoPrivacy,
    PersuasionInstance,
    Pure,
    Renyi,
    SignalingScheme,
    ValidationError,
    _check_dims,
)

VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class AdjacentPair:
    theta_index: int
    theta_prime_index: int
    flipped_bit: int  # 1-based


@dataclass(frozen=True)
class PrivacyReport:
    satisfied: bool
    worst_pair: AdjacentPair | None
    worst_slack: float


def adjacent_pairs(instance: PersuasionInstance) -> list[AdjacentPair]:
    """Ordered pairs of states in the support differing in one protected bit."""
    index = instance.state_index()
    bits = sorted(instance.privacy_set)
    pairs = []
    for i, theta in enumerate(instance.states):
        for b in bits:
            flipped = list(theta)
            flipped[b - 1] ^= 1
            j = index.get(tuple(flipped))
            if j is not None:
                pairs.append(AdjacentPair(i, j, b))
    return pairs


def _report(residuals, pairs) -> PrivacyReport:
    if not pairs:
        return PrivacyReport(True, None, 0.0)
    k = int(np.argmax(residuals))
    worst = float(residuals[k])
    return PrivacyReport(worst <= VERIFY_TOL, pairs[k], worst)


def verify_pure(instance: PersuasionInstance, scheme: SignalingScheme, epsilon: float) -> PrivacyReport:
    _check_dims(instance, scheme)
    pairs = adjacent_pairs(instance)
    e = math.exp(epsilon)
    P = scheme.probs
    res = [float(np.max(P[:, p.theta_index] - e * P[:, p.theta_prime_index])) for p in pairs]
    return _report(res, pairs)


def approx_excess(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    """Worst-subset excess ``max_W sum_W (p - e^eps q)``; the maximiser keeps the positive terms."""
    return float(np.maximum(0.0, p - math.exp(epsilon) * q).sum())


def verify_approx(
    instance: PersuasionInstance, scheme: SignalingScheme, epsilon: float, delta: float
) -> PrivacyReport:
    _check_dims(instance, scheme)
    pairs = adjacent_pairs(instance)
    P = scheme.probs
    res = [
        approx_excess(P[:, p.theta_index], P[:, p.theta_prime_index], epsilon) - delta
        for p in pairs
    ]
    return _report(res, pairs)


def approx_excess_bruteforce(p, q, epsilon: float) -> float:
    """Enumerate every signal subset; exponential, for cross-checking only."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    e = math.exp(epsilon)
    best = 0.0
    idx = range(len(p))
    for r in range(1, len(p) + 1):
        for W in itertools.combinations(idx, r):
            W = list(W)
            best = max(best, p[W].sum() - e * q[W].sum())
    return best


def renyi_moment(p, q, alpha: float) -> float:
    """``sum_s p_s (p_s / q_s)^(alpha-1)``; 0 where p_s = 0, inf where only q_s = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    lp, lq = np.log(p[mask]), np.log(q[mask])
    return float(np.exp(alpha * lp + (1.0 - alpha) * lq).sum())


def verify_renyi(
    instance: PersuasionInstance, scheme: SignalingScheme, alpha: float, epsilon: float
) -> PrivacyReport:
    """Residual is ``moment / e^((alpha-1) eps) - 1`` so the tolerance is relative."""
    if not alpha > 1:
        raise ValidationError(f"alpha must exceed 1, got {alpha}")
    _check_dims(instance, scheme)
    pairs = adjacent_pairs(instance)
    bound = math.exp((alpha - 1.0) * epsilon)
    P = scheme.probs
    res = [
        renyi_moment(P[:, p.theta_index], P[:, p.theta_prime_index], alpha) / bound - 1.0
        for p in pairs
    ]
    return _report(res, pairs)


def max_privacy_slack(instance: PersuasionInstance, scheme: SignalingScheme) -> PrivacyReport:
    spec = instance.privacy
    if isinstance(spec, Pure):
        return verify_pure(instance, scheme, spec.epsilon)
    if isinstance(spec, Approx):
        return verify_approx(instance, scheme, spec.epsilon, spec.delta)
    if isinstance(spec, Renyi):
        return verify_renyi(instance, scheme, spec.alpha, spec.epsilon)
    if isinstance(spec, NoPrivacy):
        raise ValidationError("instance has no privacy requirement to verify")
    raise ValidationError(f"unknown privacy spec {spec!r}")
