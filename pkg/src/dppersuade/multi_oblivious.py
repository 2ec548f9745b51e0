"""Many receivers with binary actions, homogeneous agents, oblivious schemes.

A scheme recommends a subset ``T`` of receivers to take action 1. Under the
homogeneity assumptions an optimal scheme only needs to look at the projected
state ``omega`` (counts of ones), which shrinks the LP from ``2^n`` states to
``O(n^2)`` points. For many receivers the ``2^t`` subset columns are priced
by a greedy oracle inside column generation.

Receivers are numbered ``1..t`` in public objects; subsets are bitmasks
internally (bit ``i-1`` for receiver ``i``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from dppersuade.lp import EQ, GE, LE, LpBuilder, LpStatus, solve_lp
from dppersuade.model import (
    Approx,
    AssumptionError,
    NoPrivacy,
    PersuasionInstance,
    Pure,
    SignalingScheme,
    SolverError,
    ValidationError,
    all_states,
    iid_prior,
    state_label,
)
from dppersuade.privacy import PrivacyReport, adjacent_pairs, verify_approx, verify_pure

ORACLE_TOL = 1e-8
HOMOGENEITY_TOL = 1e-12
MAX_DIRECT_T = 14
MAX_FULL_N, MAX_FULL_T = 8, 4


def project_state(theta, M) -> int | tuple[int, int]:
    """Counts of ones inside and outside ``M`` (1-based); scalar when ``M`` is everything."""
    n = len(theta)
    M = set(M)
    inside = sum(int(theta[i - 1]) for i in M)
    if M == set(range(1, n + 1)):
        return inside
    return inside, sum(int(b) for b in theta) - inside


def _omega_adjacent(w1, w2) -> bool:
    if isinstance(w1, tuple):
        return abs(w1[0] - w2[0]) == 1 and w1[1] == w2[1]
    return abs(w1 - w2) == 1


def _popcount_table(t: int) -> np.ndarray:
    return np.array([bin(T).count("1") for T in range(2**t)])


def members(T: int) -> frozenset[int]:
    """1-based receivers in bitmask ``T``."""
    T = int(T)
    return frozenset(i + 1 for i in range(T.bit_length()) if T >> i & 1)


def bitmask(receivers) -> int:
    return sum(1 << (int(i) - 1) for i in receivers)


def _check_privacy(privacy):
    if not isinstance(privacy, (NoPrivacy, Pure, Approx)):
        raise ValidationError(f"multi-receiver LPs support none/pure/approx, not {privacy.kind}")


# --------------------------------------------------------------------------
# instances
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiReceiverInstance:
    """Full-state instance with ``t`` receivers choosing 0 or 1.

    ``receiver_u[i, a, k]`` is receiver ``i+1``'s payoff for action ``a`` in
    state ``k``; ``sender_v[c, k]`` is the sender's payoff when ``c`` receivers
    take action 1 (the sender is anonymous across receivers).
    """

    n: int
    states: tuple[tuple[int, ...], ...]
    prior: np.ndarray
    t: int
    receiver_u: np.ndarray
    sender_v: np.ndarray
    privacy_set: frozenset[int] = None
    privacy: object = field(default_factory=NoPrivacy)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(tuple(int(b) for b in s) for s in self.states))
        for name in ("prior", "receiver_u", "sender_v"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.privacy_set is None:
            object.__setattr__(self, "privacy_set", frozenset(range(1, self.n + 1)))
        else:
            object.__setattr__(self, "privacy_set", frozenset(int(i) for i in self.privacy_set))
        K = len(self.states)
        if self.t < 1:
            raise ValidationError("need at least one receiver (t >= 1)")
        if any(len(s) != self.n for s in self.states) or len(set(self.states)) != K:
            raise ValidationError("states must be distinct bit-vectors of length n")
        if self.prior.shape != (K,) or np.any(self.prior <= 0) or abs(self.prior.sum() - 1) > 1e-12:
            raise ValidationError("prior must be positive, aligned with states, and sum to 1")
        if self.receiver_u.shape != (self.t, 2, K):
            raise ValidationError(f"receiver_u has shape {self.receiver_u.shape}, expected {(self.t, 2, K)}")
        if self.sender_v.shape != (self.t + 1, K):
            raise ValidationError(f"sender_v has shape {self.sender_v.shape}, expected {(self.t + 1, K)}")
        if not self.privacy_set <= set(range(1, self.n + 1)):
            raise ValidationError("privacy_set must lie within 1..n")
        _check_privacy(self.privacy)

    @property
    def num_states(self) -> int:
        return len(self.states)

    def state_index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def receiver_view(self, i: int) -> PersuasionInstance:
        """Single-receiver instance seen by receiver ``i`` (1-based), sender payoff dropped."""
        u = self.receiver_u[i - 1]
        return PersuasionInstance(
            n=self.n, states=self.states, prior=self.prior, actions=("0", "1"),
            receiver_u=u, sender_v=np.zeros_like(u), privacy_set=self.privacy_set,
            privacy=self.privacy,
        )


@dataclass(frozen=True)
class ObliviousInstance:
    n: int
    t: int
    privacy_set: frozenset[int]
    omega_space: tuple
    mu: np.ndarray
    receiver_u: np.ndarray  # (t, 2, |Omega|)
    sender_v: np.ndarray  # (t + 1, |Omega|)
    privacy: object = field(default_factory=NoPrivacy)

    def __post_init__(self):
        object.__setattr__(self, "omega_space", tuple(self.omega_space))
        object.__setattr__(self, "privacy_set", frozenset(self.privacy_set))
        for name in ("mu", "receiver_u", "sender_v"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        W = len(self.omega_space)
        if self.mu.shape != (W,) or np.any(self.mu <= 0) or abs(self.mu.sum() - 1) > 1e-12:
            raise ValidationError("mu must be positive over omega_space and sum to 1")
        if self.receiver_u.shape != (self.t, 2, W):
            raise ValidationError(f"receiver_u has shape {self.receiver_u.shape}, expected {(self.t, 2, W)}")
        if self.sender_v.shape != (self.t + 1, W):
            raise ValidationError(f"sender_v has shape {self.sender_v.shape}, expected {(self.t + 1, W)}")
        m = len(self.privacy_set)
        for w in self.omega_space:
            a, b = (w if isinstance(w, tuple) else (w, 0))
            if not (0 <= a <= m and 0 <= b <= self.n - m):
                raise ValidationError(f"omega {w} outside the combinatorial range")
        _check_privacy(self.privacy)

    @property
    def num_omega(self) -> int:
        return len(self.omega_space)

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """Ordered index pairs of adjacent projected states."""
        if not self.privacy_set:
            return []
        W = self.omega_space
        return [
            (a, b) for a in range(len(W)) for b in range(len(W))
            if a != b and _omega_adjacent(W[a], W[b])
        ]

    def with_privacy(self, privacy) -> "ObliviousInstance":
        return ObliviousInstance(
            self.n, self.t, self.privacy_set, self.omega_space, self.mu,
            self.receiver_u, self.sender_v, privacy,
        )


def reduce_to_oblivious(full: MultiReceiverInstance) -> ObliviousInstance:
    """Collapse states with equal projection, checking they are interchangeable."""
    M = full.privacy_set
    groups: dict = {}
    for k, theta in enumerate(full.states):
        groups.setdefault(project_state(theta, M), []).append(k)
    m = len(M)
    for w, ks in groups.items():
        a, b = (w if isinstance(w, tuple) else (w, 0))
        expected = math.comb(m, a) * math.comb(full.n - m, b)
        if len(ks) != expected:
            present = state_label(full.states[ks[0]])
            raise AssumptionError(
                f"prior is not exchangeable: state {present} has projection {w} but "
                f"{expected - len(ks)} states with the same projection have zero mass"
            )
        k0 = ks[0]
        for k in ks[1:]:
            pair = f"{state_label(full.states[k0])} and {state_label(full.states[k])}"
            if abs(full.prior[k] - full.prior[k0]) > HOMOGENEITY_TOL:
                raise AssumptionError(f"prior differs between same-projection states {pair}")
            if np.max(np.abs(full.receiver_u[:, :, k] - full.receiver_u[:, :, k0])) > HOMOGENEITY_TOL:
                raise AssumptionError(f"receiver utilities differ between same-projection states {pair}")
            if np.max(np.abs(full.sender_v[:, k] - full.sender_v[:, k0])) > HOMOGENEITY_TOL:
                raise AssumptionError(f"sender utility differs between same-projection states {pair}")
    omegas = sorted(groups)
    reps = [groups[w][0] for w in omegas]
    mu = np.array([full.prior[groups[w]].sum() for w in omegas])
    return ObliviousInstance(
        n=full.n, t=full.t, privacy_set=M, omega_space=tuple(omegas), mu=mu / mu.sum(),
        receiver_u=full.receiver_u[:, :, reps], sender_v=full.sender_v[:, reps],
        privacy=full.privacy,
    )


# --------------------------------------------------------------------------
# subset LP shared by the full, oblivious and restricted programs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ObliviousScheme:
    """``columns[k]`` lists ``(T, prob)`` for projected state ``omega_space[k]``."""

    omega_space: tuple
    columns: tuple[tuple[tuple[frozenset, float], ...], ...]

    def __post_init__(self):
        for k, col in enumerate(self.columns):
            total = sum(p for _, p in col)
            if abs(total - 1) > 1e-9:
                raise ValidationError(f"column for omega {self.omega_space[k]} sums to {total}")

    def prob(self, k: int, T) -> float:
        T = frozenset(T)
        return sum(p for S, p in self.columns[k] if S == T)

    def marginal(self, k: int, i: int) -> float:
        """Probability that receiver ``i`` (1-based) is told to act at omega ``k``."""
        return sum(p for S, p in self.columns[k] if i in S)


@dataclass(frozen=True)
class DualPoint:
    """Prices of the subset LP rows.

    ``beta[i, p]`` and ``gamma[i, p]`` price the recommend-1 and recommend-0
    privacy rows of receiver ``i+1`` and ordered adjacent pair ``p``.
    """

    alpha1: np.ndarray
    alpha0: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    y: np.ndarray


@dataclass
class _Layout:
    t: int
    points: int
    pairs: list
    private: bool

    @property
    def n_priv(self):
        return self.t * len(self.pairs) if self.private else 0

    def split(self, duals):
        t, P = self.t, len(self.pairs)
        o = 0
        y1 = duals[o:o + t]; o += t
        y0 = duals[o:o + t]; o += t
        if self.private:
            yin = duals[o:o + t * P].reshape(t, P); o += t * P
            yout = duals[o:o + t * P].reshape(t, P); o += t * P
        else:
            yin = yout = np.zeros((t, P))
        ys = duals[o:o + self.points]
        # >= rows carry nonpositive prices; the obedience multipliers are their negation
        return DualPoint(-y1, -y0, yin, yout, ys)


def _subset_lp(mu, du, v, pairs, privacy, columns):
    """Build the LP over ``pi(T|k)`` for the listed subset columns of each point.

    ``du[i, k] = u_i(1, k) - u_i(0, k)``. Row order: recommend-1 obedience per
    receiver, recommend-0 obedience, recommend-1 privacy per (receiver, pair),
    recommend-0 privacy, then one simplex row per point.
    """
    t, K = du.shape
    pop = _popcount_table(t) if t <= 20 else None
    lp = LpBuilder()
    var_of = []
    for k in range(K):
        ids = {}
        for T in columns[k]:
            c = pop[T] if pop is not None else bin(T).count("1")
            ids[T] = lp.add_var(f"pi[{T},{k}]", mu[k] * v[c, k])
        var_of.append(ids)

    def marginal(k, i, inside):
        return {j: 1.0 for T, j in var_of[k].items() if bool(T >> i & 1) == inside}

    for i in range(t):
        row = {}
        for k in range(K):
            for j in marginal(k, i, True):
                row[j] = mu[k] * du[i, k]
        lp.add_row(row, GE, 0.0, f"obey1[{i + 1}]")
    for i in range(t):
        row = {}
        for k in range(K):
            for j in marginal(k, i, False):
                row[j] = -mu[k] * du[i, k]
        lp.add_row(row, GE, 0.0, f"obey0[{i + 1}]")

    private = not isinstance(privacy, NoPrivacy)
    if private:
        e = math.exp(privacy.epsilon)
        delta = privacy.delta if isinstance(privacy, Approx) else 0.0
        for inside, tag in ((True, "in"), (False, "out")):
            for i in range(t):
                for a, b in pairs:
                    row = dict(marginal(a, i, inside))
                    for j in marginal(b, i, inside):
                        row[j] = row.get(j, 0.0) - e
                    lp.add_row(row, LE, delta, f"priv_{tag}[{i + 1},{a},{b}]")
    for k in range(K):
        lp.add_row({j: 1.0 for j in var_of[k].values()}, EQ, 1.0, f"simplex[{k}]")
    return lp.build(), var_of, _Layout(t, K, pairs, private)


def _solve_subset_lp(mu, du, v, pairs, privacy, columns, backend):
    problem, var_of, layout = _subset_lp(mu, du, v, pairs, privacy, columns)
    sol = solve_lp(problem, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise SolverError(f"subset LP ended {sol.status.value}")
    return sol, var_of, layout


def _columns_from_solution(sol, var_of):
    out = []
    for ids in var_of:
        probs = {T: max(0.0, float(sol.values[j])) for T, j in ids.items()}
        total = sum(probs.values())
        out.append(tuple(
            (members(T), p / total) for T, p in sorted(probs.items()) if p > 1e-12
        ))
    return tuple(out)


def _oblivious_arrays(obl: ObliviousInstance):
    du = obl.receiver_u[:, 1, :] - obl.receiver_u[:, 0, :]
    return obl.mu, du, obl.sender_v, obl.adjacent_pairs()


def solve_oblivious_direct(obl: ObliviousInstance, backend: str = "auto"):
    """Exact LP with every subset column; returns ``(ObliviousScheme, value)``."""
    if obl.t > MAX_DIRECT_T:
        raise ValidationError(f"direct oblivious LP needs t <= {MAX_DIRECT_T}, got {obl.t}")
    mu, du, v, pairs = _oblivious_arrays(obl)
    cols = [range(2**obl.t)] * obl.num_omega
    sol, var_of, _ = _solve_subset_lp(mu, du, v, pairs, obl.privacy, cols, backend)
    return ObliviousScheme(obl.omega_space, _columns_from_solution(sol, var_of)), sol.objective_value


def _full_pairs(full: MultiReceiverInstance):
    return [(p.theta_index, p.theta_prime_index) for p in adjacent_pairs(full)]


def solve_full_naive(full: MultiReceiverInstance, backend: str = "auto") -> float:
    """Exact LP over ``pi(T|theta)`` on the full state space (small sizes only)."""
    if full.n > MAX_FULL_N or full.t > MAX_FULL_T:
        raise ValidationError(
            f"full LP limited to n <= {MAX_FULL_N}, t <= {MAX_FULL_T}; got n={full.n}, t={full.t}"
        )
    du = full.receiver_u[:, 1, :] - full.receiver_u[:, 0, :]
    cols = [range(2**full.t)] * full.num_states
    sol, _, _ = _solve_subset_lp(full.prior, du, full.sender_v, _full_pairs(full), full.privacy, cols, backend)
    return sol.objective_value


def oblivious_value(obl: ObliviousInstance, scheme: ObliviousScheme) -> float:
    return float(sum(
        obl.mu[k] * obl.sender_v[len(T), k] * p
        for k, col in enumerate(scheme.columns) for T, p in col
    ))


# --------------------------------------------------------------------------
# pricing and column generation
# --------------------------------------------------------------------------


def _receiver_weights(obl: ObliviousInstance, dual: DualPoint):
    """Per-omega receiver weights ``w`` and the subset-independent base term."""
    mu, du, _, pairs = _oblivious_arrays(obl)
    e = math.exp(obl.privacy.epsilon) if not isinstance(obl.privacy, NoPrivacy) else 0.0
    t, W = du.shape
    B = np.zeros((t, W))
    G = np.zeros((t, W))
    for p, (a, b) in enumerate(pairs):
        B[:, a] += dual.beta[:, p]
        B[:, b] -= e * dual.beta[:, p]
        G[:, a] += dual.gamma[:, p]
        G[:, b] -= e * dual.gamma[:, p]
    gain1 = mu[None, :] * du * dual.alpha1[:, None]
    gain0 = -mu[None, :] * du * dual.alpha0[:, None]
    w = gain1 - gain0 - B + G
    base = (gain0 - G).sum(axis=0)
    return w, base


def _best_columns(obl: ObliviousInstance, dual: DualPoint):
    """Greedy pricing: for each omega the best subset and its reduced cost.

    The sender payoff depends on ``T`` only through ``|T|``, so for each size
    the top-weighted receivers are optimal.
    """
    w, base = _receiver_weights(obl, dual)
    out = []
    for k in range(obl.num_omega):
        order = np.argsort(-w[:, k], kind="stable")
        prefix = np.concatenate([[0.0], np.cumsum(w[order, k])])
        scores = obl.mu[k] * obl.sender_v[:, k] + prefix + base[k] - dual.y[k]
        c = int(np.argmax(scores))
        out.append((float(scores[c]), bitmask(order[:c] + 1)))
    return out


def separation_oracle(obl: ObliviousInstance, dual: DualPoint, tol: float = ORACLE_TOL):
    """Most violated dual row ``(omega_index, receivers)`` or ``None``."""
    best = max(
        ((r, k, T) for k, (r, T) in enumerate(_best_columns(obl, dual))),
        key=lambda x: x[0],
    )
    if best[0] > tol:
        return best[1], members(best[2])
    return None


def exhaustive_separation(obl: ObliviousInstance, dual: DualPoint):
    """Reduced cost maximum per omega by enumerating every subset (testing aid)."""
    w, base = _receiver_weights(obl, dual)
    t = obl.t
    pop = _popcount_table(t)
    masks = np.array([[T >> i & 1 for i in range(t)] for T in range(2**t)], dtype=float)
    out = []
    for k in range(obl.num_omega):
        scores = obl.mu[k] * obl.sender_v[pop, k] + masks @ w[:, k] + base[k] - dual.y[k]
        T = int(np.argmax(scores))
        out.append((float(scores[T]), T))
    return out


def _initial_columns(obl: ObliviousInstance):
    """Empty set, everyone, and the set acting on the prior alone.

    The last one makes the restricted program feasible when receivers
    disagree about their default action.
    """
    du = obl.receiver_u[:, 1, :] - obl.receiver_u[:, 0, :]
    default = bitmask(np.flatnonzero(du @ obl.mu >= 0) + 1)
    return [{0, 2**obl.t - 1, default} for _ in range(obl.num_omega)]


@dataclass(frozen=True)
class ColumnGenerationTrace:
    values: tuple[float, ...]
    iterations: int
    columns_added: int


def column_generation_solve(
    obl: ObliviousInstance, backend: str = "auto", max_iter: int | None = None,
    return_trace: bool = False,
):
    """Restricted-master column generation priced by the greedy oracle."""
    mu, du, v, pairs = _oblivious_arrays(obl)
    cap = max_iter if max_iter is not None else 10 * obl.t * obl.num_omega
    columns = _initial_columns(obl)
    values, added = [], 0
    for it in range(1, cap + 1):
        cols = [sorted(c) for c in columns]
        sol, var_of, layout = _solve_subset_lp(mu, du, v, pairs, obl.privacy, cols, backend)
        values.append(sol.objective_value)
        dual = layout.split(sol.duals)
        new = 0
        for k, (r, T) in enumerate(_best_columns(obl, dual)):
            if r > ORACLE_TOL and T not in columns[k]:
                columns[k].add(T)
                new += 1
        added += new
        if new == 0:
            scheme = ObliviousScheme(obl.omega_space, _columns_from_solution(sol, var_of))
            trace = ColumnGenerationTrace(tuple(values), it, added)
            return (scheme, sol.objective_value, trace) if return_trace else (scheme, sol.objective_value)
    raise SolverError(f"column generation hit the iteration cap ({cap})")


# --------------------------------------------------------------------------
# lifting back to full states
# --------------------------------------------------------------------------


def lift_scheme(scheme: ObliviousScheme, full: MultiReceiverInstance) -> SignalingScheme:
    """Full-state scheme ``pi(T|theta) = pi(T|phi(theta))`` with one signal per subset used."""
    index = {w: k for k, w in enumerate(scheme.omega_space)}
    subsets = sorted({T for col in scheme.columns for T, _ in col}, key=lambda S: (len(S), sorted(S)))
    pos = {T: r for r, T in enumerate(subsets)}
    probs = np.zeros((len(subsets), full.num_states))
    for j, theta in enumerate(full.states):
        for T, p in scheme.columns[index[project_state(theta, full.privacy_set)]]:
            probs[pos[T], j] = p
    labels = ["{" + ",".join(str(i) for i in sorted(T)) + "}" for T in subsets]
    return SignalingScheme(tuple(labels), probs)


def receiver_marginal(lifted: SignalingScheme, i: int) -> SignalingScheme:
    """Two-signal view of receiver ``i``: told to act (1) or not (0)."""
    acts = np.array(["," + s.strip("{}") + "," for s in lifted.signals])
    told = np.array([f",{i}," in s for s in acts])
    p1 = lifted.probs[told].sum(axis=0)
    return SignalingScheme(("0", "1"), np.vstack([1 - p1, p1]))


def verify_lifted(scheme: ObliviousScheme, full: MultiReceiverInstance) -> list[PrivacyReport]:
    """Privacy report of each receiver's view of the lifted scheme."""
    lifted = lift_scheme(scheme, full)
    reports = []
    for i in range(1, full.t + 1):
        view = full.receiver_view(i)
        marg = receiver_marginal(lifted, i)
        if isinstance(full.privacy, Pure):
            reports.append(verify_pure(view, marg, full.privacy.epsilon))
        elif isinstance(full.privacy, Approx):
            reports.append(verify_approx(view, marg, full.privacy.epsilon, full.privacy.delta))
        else:
            reports.append(PrivacyReport(True, None, 0.0))
    return reports


def homogeneous_instance(
    n: int, t: int, p: float, receiver_u_omega, sender_v_omega, privacy=None, privacy_set=None,
) -> MultiReceiverInstance:
    """Expand per-projection tables into a full instance with an i.i.d. prior."""
    states = all_states(n)
    M = frozenset(range(1, n + 1)) if privacy_set is None else frozenset(privacy_set)
    omegas = sorted({project_state(s, M) for s in states})
    col = {w: k for k, w in enumerate(omegas)}
    idx = [col[project_state(s, M)] for s in states]
    ru = np.asarray(receiver_u_omega, dtype=float)[:, :, idx]
    sv = np.asarray(sender_v_omega, dtype=float)[:, idx]
    return MultiReceiverInstance(
        n, states, iid_prior(states, p), t, ru, sv, M,
        NoPrivacy() if privacy is None else privacy,
    )


def omega_space_for(n: int, privacy_set=None) -> list:
    """Sorted projected states of ``{0,1}^n``."""
    M = frozenset(range(1, n + 1)) if privacy_set is None else frozenset(privacy_set)
    m = len(M)
    if m == n:
        return list(range(n + 1))
    return [(a, b) for a, b in itertools.product(range(m + 1), range(n - m + 1))]
