"""Single receiver, binary state: feasible posterior regions, exact solvers, gaps.

Beliefs are scalars ``q = P(state 1)``. The sender's value ``V`` is piecewise
constant with sorted breakpoints; at a breakpoint it takes the larger of the two
adjacent values (the receiver breaks ties in the sender's favour).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dppersuade.lp import EQ, LE, LpBuilder, LpStatus, solve_lp
from dppersuade.model import (
    Approx,
    NoPrivacy,
    PersuasionInstance,
    PosteriorPoint,
    Pure,
    Renyi,
    SignalingScheme,
    SolveResult,
    SolverError,
    ValidationError,
    posteriors_of_scheme,
    sender_value_at,
)
from dppersuade.privacy import VERIFY_TOL, max_privacy_slack

FEAS_TOL = 1e-12
GAP_TOL = 1e-6
WITNESS_OMEGA = 1e-6


@dataclass(frozen=True)
class BinaryInstance:
    """Prior ``mu`` on state 1 and a piecewise-constant sender value.

    ``values[j]`` applies on ``(breakpoints[j-1], breakpoints[j])``. Without
    explicit breakpoints the value is the threshold step: 0 below ``threshold``
    and 1 from it on.
    """

    mu: float
    threshold: float = 0.5
    breakpoints: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 < self.mu < 1:
            raise ValidationError(f"mu must lie in (0, 1), got {self.mu}")
        if not 0 < self.threshold < 1:
            raise ValidationError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.breakpoints is None and self.values is None:
            bps, vals = (float(self.threshold),), (0.0, 1.0)
        else:
            bps = tuple(float(b) for b in (self.breakpoints or ()))
            vals = tuple(float(v) for v in (self.values or ()))
        if len(vals) != len(bps) + 1:
            raise ValidationError("value_fn needs exactly one more value than breakpoints")
        if any(not 0 < b < 1 for b in bps) or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValidationError("breakpoints must be strictly increasing inside (0, 1)")
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("value_fn values must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    def piece_of(self, q) -> np.ndarray:
        """Index of the piece the receiver's action lands in at belief ``q``."""
        q = np.asarray(q, dtype=float)
        bps = np.asarray(self.breakpoints)
        left = np.searchsorted(bps, q, side="left")
        right = np.searchsorted(bps, q, side="right")
        vals = np.asarray(self.values)
        return np.where(vals[right] > vals[left], right, left)

    def value_at(self, q) -> np.ndarray | float:
        out = np.asarray(self.values)[self.piece_of(q)]
        return float(out) if out.ndim == 0 else out

    def to_instance(self, privacy=None) -> PersuasionInstance:
        """Equivalent one-bit instance whose actions are the pieces of ``V``.

        Action ``j`` has receiver payoff line ``c_j + j q`` with
        ``c_j = c_{j-1} - b_j``, so action ``j`` beats ``j-1`` exactly when
        ``q >= b_j``.
        """
        k = len(self.values)
        c = np.zeros(k)
        for j in range(1, k):
            c[j] = c[j - 1] - self.breakpoints[j - 1]
        slope = np.arange(k, dtype=float)
        receiver_u = np.column_stack([c, c + slope])
        sender_v = np.column_stack([self.values, self.values])
        return PersuasionInstance(
            n=1,
            states=((0,), (1,)),
            prior=np.array([1.0 - self.mu, self.mu]),
            actions=tuple(f"a{j}" for j in range(k)),
            receiver_u=receiver_u,
            sender_v=sender_v,
            privacy=NoPrivacy() if privacy is None else privacy,
        )


@dataclass(frozen=True)
class PosteriorPair:
    q1: float
    q2: float

    def __post_init__(self):
        object.__setattr__(self, "q1", float(self.q1))
        object.__setattr__(self, "q2", float(self.q2))
        if not 0 <= self.q1 <= self.q2 <= 1:
            raise ValidationError(f"pair needs 0 <= q1 <= q2 <= 1, got ({self.q1}, {self.q2})")

    def weights(self, mu: float) -> tuple[float, float]:
        if self.q2 == self.q1:
            return 1.0, 0.0
        span = self.q2 - self.q1
        return (self.q2 - mu) / span, (mu - self.q1) / span


def _check_pair(mu: float, pair: PosteriorPair):
    if not pair.q1 <= mu <= pair.q2:
        raise ValidationError(f"pair ({pair.q1}, {pair.q2}) does not bracket mu={mu}")


# --------------------------------------------------------------------------
# feasible regions
# --------------------------------------------------------------------------


def pure_interval(mu: float, epsilon: float) -> tuple[float, float]:
    e = math.exp(epsilon)
    lo = mu / (e - e * mu + mu)
    hi = mu / (1.0 / e - mu / e + mu)
    return lo, hi


def approx_coefficients(mu: float, epsilon: float, delta: float) -> tuple[float, ...]:
    """The six constants of the two pair inequalities under (epsilon, delta)-DP."""
    e = math.exp(epsilon)
    slack = delta * mu * (1 - mu)
    c1 = e - mu * e + mu
    c2 = mu * c1 + slack
    c3 = mu - slack
    c4 = 1 - mu + e * mu
    c5 = e * mu + slack
    c6 = mu * c4 - slack
    return c1, c2, c3, c4, c5, c6


def _approx_margins(mu, epsilon, delta, q1, q2):
    """Both inequality margins (nonnegative means satisfied), broadcasting."""
    c1, c2, c3, c4, c5, c6 = approx_coefficients(mu, epsilon, delta)
    e = math.exp(epsilon)
    m1 = q1 * (c1 * q2 - c2) - (c3 * q2 - mu * mu)
    m2 = q1 * (c4 * q2 - c5) - (c6 * q2 - e * mu * mu)
    return m1, m2


def approx_feasible(mu: float, epsilon: float, delta: float, pair: PosteriorPair) -> bool:
    if not pair.q1 <= mu <= pair.q2:
        return False
    m1, m2 = _approx_margins(mu, epsilon, delta, pair.q1, pair.q2)
    return bool(m1 >= -FEAS_TOL and m2 >= -FEAS_TOL)


def min_feasible_q1(mu: float, epsilon: float, delta: float, q2):
    """Smallest q1 making ``(q1, q2)`` approx-feasible, vectorised over ``q2``.

    For fixed ``q2`` both inequalities are linear in ``q1`` and ``q1 = mu``
    always satisfies them, so the feasible set is an interval ending at or
    beyond ``mu`` and its left end comes from the rows with positive slope.
    """
    q2 = np.asarray(q2, dtype=float)
    c1, c2, c3, c4, c5, c6 = approx_coefficients(mu, epsilon, delta)
    e = math.exp(epsilon)
    lower = np.zeros_like(q2)
    for a, b in ((c1 * q2 - c2, c3 * q2 - mu * mu), (c4 * q2 - c5, c6 * q2 - e * mu * mu)):
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(a > 0, b / np.where(a > 0, a, 1.0), 0.0)
        lower = np.maximum(lower, bound)
    lower = np.minimum(lower, mu)
    return float(lower) if lower.ndim == 0 else lower


def _renyi_moments(mu, alpha, q1, q2):
    """Both divergence moments of the two-signal scheme, broadcasting."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    span = q2 - q1
    degenerate = span <= 0
    safe = np.where(degenerate, 1.0, span)
    tau = (np.where(degenerate, 1.0, (q2 - mu) / safe), np.where(degenerate, 0.0, (mu - q1) / safe))
    fwd = np.zeros(np.broadcast(q1, q2).shape)
    bwd = np.zeros_like(fwd)
    total = np.zeros_like(fwd)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for q, w in ((q1, tau[0]), (q2, tau[1])):
            q = np.where(degenerate, mu, q)
            sigma = (1 - q) / (1 - mu) * w
            ratio = q * (1 - mu) / ((1 - q) * mu)
            live = w > 0
            bad = live & ((q <= 0) | (q >= 1))
            ok = live & ~bad
            r = np.where(ok, ratio, 1.0)
            s = np.where(ok, sigma, 0.0)
            fwd = fwd + np.where(ok, s * np.exp(alpha * np.log(r)), np.where(bad, np.inf, 0.0))
            bwd = bwd + np.where(ok, s * np.exp((1 - alpha) * np.log(r)), np.where(bad, np.inf, 0.0))
            total = total + np.where(ok, s * r, 0.0)
    return fwd, bwd, total


def renyi_feasible_binary(mu: float, alpha: float, epsilon: float, pair: PosteriorPair) -> bool:
    """Moment test in likelihood-ratio coordinates.

    ``t_i = q_i (1-mu) / ((1-q_i) mu)`` is the likelihood ratio of signal ``i``
    and ``sigma_i`` its probability under state 0; the scheme is private iff both
    ``E_sigma[t^alpha]`` and ``E_sigma[t^(1-alpha)]`` stay below
    ``e^((alpha-1) eps)`` (relative tolerance matches the scheme verifier).
    """
    if not alpha > 1:
        raise ValidationError(f"alpha must exceed 1, got {alpha}")
    if not pair.q1 <= mu <= pair.q2:
        return False
    fwd, bwd, total = _renyi_moments(mu, alpha, pair.q1, pair.q2)
    if math.isfinite(float(fwd)) and abs(float(total) - 1.0) > 1e-9:
        raise SolverError(f"likelihood ratios average to {float(total)}, not 1")
    bound = math.exp((alpha - 1) * epsilon)
    return bool(fwd / bound - 1 <= VERIFY_TOL and bwd / bound - 1 <= VERIFY_TOL)


def _renyi_feasible_arrays(mu, alpha, epsilon, q1, q2, tol=VERIFY_TOL):
    fwd, bwd, _ = _renyi_moments(mu, alpha, q1, q2)
    bound = math.exp((alpha - 1) * epsilon)
    return (fwd / bound - 1 <= tol) & (bwd / bound - 1 <= tol)


def pair_value(instance: BinaryInstance, pair: PosteriorPair) -> float:
    mu = instance.mu
    _check_pair(mu, pair)
    if pair.q1 == pair.q2:
        return instance.value_at(mu)
    w1, w2 = pair.weights(mu)
    return w1 * instance.value_at(pair.q1) + w2 * instance.value_at(pair.q2)


def _pair_values(instance: BinaryInstance, q1, q2, v1=None, v2=None):
    """Vectorised pair value; ``q1 == q2`` only happens at ``mu``."""
    mu = instance.mu
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    v1 = instance.value_at(q1) if v1 is None else v1
    v2 = instance.value_at(q2) if v2 is None else v2
    span = q2 - q1
    with np.errstate(divide="ignore", invalid="ignore"):
        val = ((q2 - mu) * v1 + (mu - q1) * v2) / span
    return np.where(span > 0, val, instance.value_at(mu))


# --------------------------------------------------------------------------
# exact solver
# --------------------------------------------------------------------------


def _budget_terms(mu: float, epsilon: float, q: np.ndarray):
    """Per-unit-weight clamp contributions of a posterior ``q`` to both pair directions."""
    e = math.exp(epsilon)
    p1 = q / mu
    p0 = (1 - q) / (1 - mu)
    return np.maximum(0.0, p1 - e * p0), np.maximum(0.0, p0 - e * p1)


def _candidate_lp(instance: BinaryInstance, privacy) -> tuple[np.ndarray, np.ndarray]:
    """Optimal weights over the finite candidate set of posteriors.

    Inside any cell between consecutive candidates ``V`` is constant and the
    privacy budget terms are affine, so splitting a posterior toward the cell
    ends keeps every constraint and never lowers ``V``. Hence an optimum is
    supported on the candidates and the problem is a small LP.
    """
    mu = instance.mu
    pts = {0.0, 1.0, mu, *instance.breakpoints}
    if isinstance(privacy, (Pure, Approx)):
        lo, hi = pure_interval(mu, privacy.epsilon)
        pts |= {lo, hi}
        if isinstance(privacy, Pure):
            pts = {min(max(p, lo), hi) for p in pts}
    q = np.array(sorted(pts))
    vals = instance.value_at(q)

    lp = LpBuilder()
    idx = [lp.add_var(f"tau[{x:.17g}]", v) for x, v in zip(q, vals)]
    lp.add_row({i: 1.0 for i in idx}, EQ, 1.0, "mass")
    lp.add_row(dict(zip(idx, q)), EQ, mu, "mean")
    if isinstance(privacy, Approx):
        up, down = _budget_terms(mu, privacy.epsilon, q)
        lp.add_row(dict(zip(idx, up)), LE, privacy.delta, "budget[1->0]")
        lp.add_row(dict(zip(idx, down)), LE, privacy.delta, "budget[0->1]")
    sol = solve_lp(lp.build(), backend="simplex")
    if sol.status is not LpStatus.OPTIMAL:
        raise SolverError(f"posterior LP ended {sol.status.value}; no-information is always feasible")
    return q, sol.values


def _result_from_points(instance: BinaryInstance, privacy, q, w, solver: str) -> SolveResult:
    keep = w > 1e-12
    q, w = q[keep], w[keep] / w[keep].sum()
    pieces = instance.piece_of(q)
    merged = []
    for j in sorted(set(pieces.tolist())):
        sel = pieces == j
        weight = w[sel].sum()
        merged.append((float((q[sel] * w[sel]).sum() / weight), float(weight)))
    return _finish(instance, privacy, merged, solver)


def _finish(instance: BinaryInstance, privacy, points, solver: str) -> SolveResult:
    mu = instance.mu
    posteriors = [PosteriorPoint(np.array([1 - x, x]), wt) for x, wt in points]
    scheme = SignalingScheme.from_posteriors(
        [1 - mu, mu], posteriors, [f"s{i}" for i in range(len(points))]
    )
    inst = instance.to_instance(privacy)
    induced = posteriors_of_scheme(inst, scheme)
    value = float(sum(p.weight * sender_value_at(inst, p.belief) for p in induced))
    slack = None
    if not isinstance(privacy, NoPrivacy):
        report = max_privacy_slack(inst, scheme)
        if not report.satisfied:
            raise SolverError(f"binary solution violates privacy by {report.worst_slack:.3g}")
        slack = report.worst_slack
    qs = sorted(x for x, _ in points)
    pair = None
    if len(points) == 1:
        pair = PosteriorPair(mu, mu)
    elif len(points) == 2:
        pair = PosteriorPair(qs[0], qs[1])
    return SolveResult(
        scheme=scheme,
        value=value,
        posteriors=tuple(induced),
        support_size=len(induced),
        privacy_slack=slack,
        solver=solver,
        diagnostics={"pair": pair, "posterior_q": qs},
    )


def solve_binary(instance: BinaryInstance, privacy=None) -> SolveResult:
    """Optimal scheme for a binary instance.

    None, Pure and Approx are solved exactly by the candidate-posterior LP and
    the support is merged to one posterior per receiver action (a pair when
    ``V`` has two levels). Renyi uses a search over posterior pairs, which is a
    lower bound on the optimum when ``V`` has more than two levels.
    """
    privacy = NoPrivacy() if privacy is None else privacy
    if isinstance(privacy, Renyi):
        pair = _renyi_pair_search(instance, privacy)
        w1, w2 = pair.weights(instance.mu)
        points = [(pair.q1, w1), (pair.q2, w2)] if w2 > 0 else [(instance.mu, 1.0)]
        return _finish(instance, privacy, points, "binary-renyi-pair")
    if not isinstance(privacy, (NoPrivacy, Pure, Approx)):
        raise ValidationError(f"unknown privacy spec {privacy!r}")
    q, w = _candidate_lp(instance, privacy)
    return _result_from_points(instance, privacy, q, w, "binary-lp")


def _renyi_min_q1(mu, alpha, epsilon, q2, iters=60) -> np.ndarray:
    """Bisection for the smallest feasible q1 at each q2 (q1 = mu is feasible)."""
    q2 = np.atleast_1d(np.asarray(q2, dtype=float))
    lo = np.zeros_like(q2)
    hi = np.full_like(q2, mu)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        # strict test so the answer survives scheme reconstruction round-off
        ok = _renyi_feasible_arrays(mu, alpha, epsilon, mid, q2, tol=-1e-12)
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def _renyi_best(instance, privacy, q2) -> tuple[float, float, float]:
    """Best pair value over the given q2 values, q1 at its minimum or a breakpoint."""
    mu = instance.mu
    q2 = np.asarray(q2, dtype=float)
    q1min = _renyi_min_q1(mu, privacy.alpha, privacy.epsilon, q2)
    best = (instance.value_at(mu), mu, mu)
    cands = [q1min] + [np.full_like(q2, b) for b in instance.breakpoints if b <= mu]
    for q1 in cands:
        vals = np.where(q1 >= q1min, _pair_values(instance, q1, q2), -np.inf)
        k = int(np.argmax(vals))
        if vals[k] > best[0] + 1e-15:
            best = (float(vals[k]), float(q1[k]), float(q2[k]))
    return best


def _renyi_pair_search(instance: BinaryInstance, privacy: Renyi) -> PosteriorPair:
    mu = instance.mu
    grid = np.concatenate([mu + (1 - mu) * np.linspace(0, 1, 401)[1:-1], instance.breakpoints])
    grid = np.unique(grid[(grid > mu) & (grid < 1)])
    val, q1, q2 = _renyi_best(instance, privacy, grid)
    step = (1 - mu) / 400
    for _ in range(8):
        if q2 == mu:
            break
        local = np.clip(q2 + step * np.linspace(-1, 1, 21), mu, 1.0)
        local = local[(local > mu) & (local < 1)]
        cand = _renyi_best(instance, privacy, local)
        if cand[0] > val:
            val, q1, q2 = cand
        step /= 10
    return PosteriorPair(q1, q2)


# --------------------------------------------------------------------------
# brute-force pair oracle
# --------------------------------------------------------------------------


def _pair_mask(mu, privacy, q1, q2):
    if isinstance(privacy, NoPrivacy):
        return np.ones(np.broadcast(q1, q2).shape, dtype=bool)
    if isinstance(privacy, Pure):
        lo, hi = pure_interval(mu, privacy.epsilon)
        return (q1 >= lo - FEAS_TOL) & (q2 <= hi + FEAS_TOL) & (q2 >= q1)
    if isinstance(privacy, Approx):
        m1, m2 = _approx_margins(mu, privacy.epsilon, privacy.delta, q1, q2)
        return (m1 >= -FEAS_TOL) & (m2 >= -FEAS_TOL)
    if isinstance(privacy, Renyi):
        return _renyi_feasible_arrays(mu, privacy.alpha, privacy.epsilon, q1, q2)
    raise ValidationError(f"unknown privacy spec {privacy!r}")


def _best_on_axes(instance, privacy, a1, a2, chunk=256):
    mu = instance.mu
    v1 = instance.value_at(a1)
    best = (-math.inf, mu, mu)
    for start in range(0, a2.size, chunk):
        q2 = a2[start:start + chunk][None, :]
        vals = _pair_values(instance, a1[:, None], q2, v1[:, None], instance.value_at(q2))
        vals = np.where(_pair_mask(mu, privacy, a1[:, None], q2), vals, -np.inf)
        k = int(np.argmax(vals))
        i, j = divmod(k, vals.shape[1])
        if vals[i, j] > best[0]:
            best = (float(vals[i, j]), float(a1[i]), float(q2[0, j]))
    return best


def grid_oracle(
    instance: BinaryInstance, privacy=None, step: float = 1e-4, final_step: float = 1e-9
) -> tuple[float, PosteriorPair]:
    """Brute-force search over posterior pairs, then zoomed local grids.

    Independent of the exact solver: it only uses the pair feasibility
    predicates and the pair value formula.
    """
    privacy = NoPrivacy() if privacy is None else privacy
    mu = instance.mu
    bps = np.asarray(instance.breakpoints)
    a1 = np.unique(np.concatenate([np.arange(0, mu, step), [mu], bps[bps <= mu]]))
    a2 = np.unique(np.concatenate([mu + np.arange(0, 1 - mu, step), [1.0], bps[bps >= mu]]))
    val, q1, q2 = _best_on_axes(instance, privacy, a1, a2)
    h = step
    while h > final_step:
        h /= 10
        offs = h * np.arange(-10, 11)
        b1 = np.clip(q1 + offs, 0, mu)
        b2 = np.clip(q2 + offs, mu, 1)
        b1 = np.unique(np.concatenate([b1, bps[(bps >= b1[0]) & (bps <= b1[-1])]]))
        b2 = np.unique(np.concatenate([b2, bps[(bps >= b2[0]) & (bps <= b2[-1])]]))
        cand = _best_on_axes(instance, privacy, b1, b2)
        if cand[0] >= val:
            val, q1, q2 = cand
    return val, PosteriorPair(q1, q2)


# --------------------------------------------------------------------------
# gaps between privacy notions (threshold-step value)
# --------------------------------------------------------------------------


def pure_approx_gap_bound(eps1: float, eps2: float, delta: float) -> float:
    return (math.exp(eps2) - 1) / ((1 + delta) * math.exp(eps1 + eps2) - 1)


def pure_none_gap_bound(epsilon: float, t: float) -> float:
    return 1.0 / ((1 - t) * math.exp(epsilon) + t)


def approx_none_gap_bound(epsilon: float, delta: float, mu: float) -> float:
    e = math.exp(epsilon)
    a = (1 - mu) * (delta + e - 1) / ((1 - mu) * (2 * e - 1) + mu)
    b = (1 - mu) * delta / max(2 * (1 - mu) * delta, (1 - mu) * (2 - e) + e * mu)
    return 0.5 - min(a, b)


def pure_cutoff(epsilon: float, t: float) -> float:
    """Largest prior whose pure-DP interval still reaches ``t``."""
    ie = math.exp(-epsilon)
    return t * ie / (1 - t + t * ie)


def _scan_grid(t: float, extra=()) -> np.ndarray:
    base = t * np.arange(1, 10_001) / 10_001
    return np.unique(np.concatenate([base, [m for m in extra if 0 < m < t]]))


def _pure_values(mu: np.ndarray, epsilon: float, t: float) -> np.ndarray:
    e = math.exp(epsilon)
    lo = mu / (e - e * mu + mu)
    hi = mu / (1 / e - mu / e + mu)
    return np.where(hi >= t, (mu - lo) / (t - lo), 0.0)


def _approx_values(mu: np.ndarray, epsilon: float, delta: float, t: float) -> np.ndarray:
    """Screening lower bound: best pair with q2 on a grid of [t, 1]."""
    q2 = t + (1 - t) * np.concatenate([[0.0], np.geomspace(1e-6, 1, 120)])
    out = np.zeros_like(mu)
    for i, m in enumerate(mu):
        q1 = min_feasible_q1(m, epsilon, delta, q2)
        out[i] = np.max(np.where(q1 < m, (m - q1) / (q2 - q1), 0.0))
    return out


def _exact_gap(t, mus, upper, lower) -> tuple[float, float]:
    best = (-math.inf, float(mus[0]))
    for m in mus:
        inst = BinaryInstance(float(m), t)
        gap = solve_binary(inst, upper).value - solve_binary(inst, lower).value
        if gap > best[0]:
            best = (gap, float(m))
    return best[1], best[0]


def _top(mus, scores, k=20):
    order = np.argsort(-scores, kind="stable")
    return mus[order[:k]]


def _check_t(t):
    if not 0 < t < 1:
        raise ValidationError(f"threshold t must lie in (0, 1), got {t}")


def gap_pure_vs_approx(eps1: float, eps2: float, delta: float, t: float) -> tuple[float, float]:
    """Largest ``V*_(eps2, delta)(mu) - V*_(eps1, 0)(mu)`` over priors below ``t``."""
    _check_t(t)
    if not (eps1 > 0 and eps2 > 0):
        raise ValidationError("need eps1 > 0 and eps2 > 0")
    if not delta > 0:
        raise ValidationError("need delta > 0")
    if eps1 - eps2 > delta:
        raise ValidationError("need eps1 - eps2 <= delta")
    cut = pure_cutoff(eps1, t)
    mus = _scan_grid(t, [cut * (1 - 10.0**-k) for k in range(1, 13)])
    screen = _approx_values(mus, eps2, delta, t) - _pure_values(mus, eps1, t)
    return _exact_gap(t, _top(mus, screen), Approx(eps2, delta), Pure(eps1))


def gap_pure_vs_none(epsilon: float, t: float) -> tuple[float, float]:
    _check_t(t)
    if not epsilon > 0:
        raise ValidationError("need epsilon > 0")
    cut = pure_cutoff(epsilon, t)
    mus = _scan_grid(t, [cut * (1 - 10.0**-k) for k in range(1, 13)])
    screen = mus / t - _pure_values(mus, epsilon, t)
    return _exact_gap(t, _top(mus, screen), NoPrivacy(), Pure(epsilon))


def gap_approx_vs_none(epsilon: float, delta: float, t: float) -> tuple[float, float]:
    _check_t(t)
    if not epsilon > 0 or not delta > 0:
        raise ValidationError("need epsilon > 0 and delta > 0")
    mus = _scan_grid(t, [t / 2])
    coarse = mus[::50]
    screen = coarse / t - _approx_values(coarse, epsilon, delta, t)
    picks = np.unique(np.concatenate([_top(coarse, screen), [t / 2]]))
    return _exact_gap(t, picks, NoPrivacy(), Approx(epsilon, delta))


def ratio_unbounded_witness(
    eps1: float, eps2: float, delta: float, t: float, target_ratio: float = 1.0
) -> float:
    """Prior where the pure optimum is 0 while the approximate one is positive.

    The prior sits just below the pure-DP cutoff, so the ratio of the two
    optima is infinite and exceeds any ``target_ratio``.
    """
    _check_t(t)
    if not target_ratio > 0:
        raise ValidationError("target_ratio must be positive")
    ie = math.exp(-eps1)
    return t * ie / (1 + WITNESS_OMEGA - t + t * ie)


def witness_pair(mu: float, delta: float) -> PosteriorPair:
    """An approx-feasible pair revealing state 1 with certainty."""
    return PosteriorPair(mu * (1 - delta) / (1 - delta * mu), 1.0)
