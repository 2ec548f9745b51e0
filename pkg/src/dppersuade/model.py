"""Core persuasion types: instances, privacy specs, schemes, posteriors.

Everything here is immutable once constructed. Arrays are stored as
read-only float64 numpy arrays so instances can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

STRUCT_TOL = 1e-9
OBJECTIVE_TOL = 1e-7
PRIOR_TOL = 1e-12
EMPTY_SIGNAL_TOL = 1e-9


class ValidationError(ValueError):
    """Input violates a structural invariant (bad prior, shape mismatch, ...)."""


class AssumptionError(ValidationError):
    """A homogeneity assumption needed by the oblivious reduction fails."""


class SolverError(RuntimeError):
    """A solver failed an internal consistency check."""


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# privacy specifications
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoPrivacy:
    kind = "none"


@dataclass(frozen=True)
class Pure:
    epsilon: float
    kind = "pure"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"pure privacy needs epsilon > 0, got {self.epsilon}")


@dataclass(frozen=True)
class Approx:
    epsilon: float
    delta: float
    kind = "approx"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"approx privacy needs epsilon > 0, got {self.epsilon}")
        # delta == 0 is Pure; keep the two cases distinct
        if not 0 < self.delta < 1:
            raise ValidationError(f"approx privacy needs delta in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class Renyi:
    alpha: float
    epsilon: float
    kind = "renyi"

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValidationError(f"Renyi privacy needs alpha > 1, got {self.alpha}")
        if not self.epsilon > 0:
            raise ValidationError(f"Renyi privacy needs epsilon > 0, got {self.epsilon}")


PrivacySpec = Union[NoPrivacy, Pure, Approx, Renyi]


def privacy_from_params(kind: str, epsilon=None, delta=None, alpha=None) -> PrivacySpec:
    """Build a spec from loose parameters; ``approx`` with delta 0 maps to Pure."""
    kind = kind.lower()
    if kind == "none":
        return NoPrivacy()
    if kind == "pure":
        return Pure(float(epsilon))
    if kind == "approx":
        if delta is None:
            raise ValidationError("approx privacy requires delta")
        if float(delta) == 0.0:
            return Pure(float(epsilon))
        return Approx(float(epsilon), float(delta))
    if kind == "renyi":
        if alpha is None:
            raise ValidationError("renyi privacy requires alpha")
        return Renyi(float(alpha), float(epsilon))
    raise ValidationError(f"unknown privacy type {kind!r}")


# --------------------------------------------------------------------------
# instances and schemes
# --------------------------------------------------------------------------


def all_states(n: int) -> list[tuple[int, ...]]:
    """All bit-vectors of length n in lexicographic order."""
    return [tuple((k >> (n - 1 - i)) & 1 for i in range(n)) for k in range(2**n)]


def parse_state(s: str) -> tuple[int, ...]:
    if not s or any(ch not in "01" for ch in s):
        raise ValidationError(f"state {s!r} is not a 0/1 string")
    return tuple(int(ch) for ch in s)


def state_label(theta: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in theta)


@dataclass(frozen=True)
class PersuasionInstance:
    """Single-receiver persuasion problem over binary databases.

    ``receiver_u`` and ``sender_v`` have shape ``(len(actions), len(states))``.
    ``privacy_set`` holds 1-based bit positions that must be protected.
    """

    n: int
    states: tuple[tuple[int, ...], ...]
    prior: np.ndarray
    actions: tuple[str, ...]
    receiver_u: np.ndarray
    sender_v: np.ndarray
    privacy_set: frozenset[int] = None
    privacy: PrivacySpec = field(default_factory=NoPrivacy)

    def __post_init__(self):
        states = tuple(tuple(int(b) for b in s) for s in self.states)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        object.__setattr__(self, "prior", _frozen(self.prior))
        object.__setattr__(self, "receiver_u", _frozen(self.receiver_u))
        object.__setattr__(self, "sender_v", _frozen(self.sender_v))
        if self.privacy_set is None:
            object.__setattr__(self, "privacy_set", frozenset(range(1, self.n + 1)))
        else:
            object.__setattr__(self, "privacy_set", frozenset(int(i) for i in self.privacy_set))
        self._validate()

    def _validate(self):
        if self.n < 0:
            raise ValidationError("n must be non-negative")
        if not self.states:
            raise ValidationError("states must be non-empty")
        for s in self.states:
            if len(s) != self.n or any(b not in (0, 1) for b in s):
                raise ValidationError(f"state {s} is not a bit-vector of length {self.n}")
        if len(set(self.states)) != len(self.states):
            raise ValidationError("states must be pairwise distinct")
        k = len(self.states)
        if self.prior.shape != (k,):
            raise ValidationError(f"prior has shape {self.prior.shape}, expected ({k},)")
        if np.any(~np.isfinite(self.prior)) or np.any(self.prior <= 0):
            raise ValidationError("prior entries must be strictly positive (omit zero-mass states)")
        if abs(self.prior.sum() - 1.0) > PRIOR_TOL:
            raise ValidationError(f"prior sums to {self.prior.sum():.15g}, not 1")
        if not self.actions:
            raise ValidationError("action set is empty")
        shape = (len(self.actions), k)
        for name in ("receiver_u", "sender_v"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValidationError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} has non-finite entries")
        if not self.privacy_set <= set(range(1, self.n + 1)):
            raise ValidationError(f"privacy_set {sorted(self.privacy_set)} not within 1..{self.n}")

    @property
    def num_states(self) -> int:
        return len(self.states)

    def state_index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.states)}

    def with_privacy(self, privacy: PrivacySpec) -> "PersuasionInstance":
        return PersuasionInstance(
            n=self.n,
            states=self.states,
            prior=self.prior,
            actions=self.actions,
            receiver_u=self.receiver_u,
            sender_v=self.sender_v,
            privacy_set=self.privacy_set,
            privacy=privacy,
        )


@dataclass(frozen=True)
class SignalingScheme:
    """``probs[s, j]`` is the probability of signal ``s`` in state ``j``."""

    signals: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(str(s) for s in self.signals))
        probs = _frozen(self.probs)
        if probs.ndim != 2 or probs.shape[0] != len(self.signals):
            raise ValidationError(
                f"probs shape {probs.shape} does not match {len(self.signals)} signals"
            )
        if np.any(~np.isfinite(probs)) or probs.min() < -STRUCT_TOL or probs.max() > 1 + STRUCT_TOL:
            raise ValidationError("scheme probabilities must lie in [0, 1]")
        sums = probs.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > STRUCT_TOL)
        if bad.size:
            raise ValidationError(
                f"scheme column {int(bad[0])} sums to {sums[bad[0]]:.12g}, not 1"
            )
        object.__setattr__(self, "probs", probs)

    @classmethod
    def no_information(cls, num_states: int, signal: str = "s0") -> "SignalingScheme":
        return cls((signal,), np.ones((1, num_states)))

    @classmethod
    def full_revelation(cls, num_states: int) -> "SignalingScheme":
        return cls(tuple(f"s{j}" for j in range(num_states)), np.eye(num_states))

    @classmethod
    def from_posteriors(
        cls, prior, posteriors: Sequence["PosteriorPoint"], signals=None
    ) -> "SignalingScheme":
        """Invert Bayes' rule: ``pi(s|theta) = q_s(theta) tau_s / mu(theta)``."""
        prior = np.asarray(prior, dtype=float)
        probs = np.array([p.weight * np.asarray(p.belief) / prior for p in posteriors])
        probs = np.clip(probs, 0.0, 1.0)
        probs = probs / probs.sum(axis=0, keepdims=True)
        if signals is None:
            signals = [f"s{i}" for i in range(len(posteriors))]
        return cls(tuple(signals), probs)

    @property
    def num_signals(self) -> int:
        return len(self.signals)


@dataclass(frozen=True)
class PosteriorPoint:
    belief: np.ndarray
    weight: float
    signal: int | None = None

    def __post_init__(self):
        belief = _frozen(self.belief)
        object.__setattr__(self, "belief", belief)
        object.__setattr__(self, "weight", float(self.weight))
        if abs(belief.sum() - 1.0) > STRUCT_TOL:
            raise ValidationError(f"posterior belief sums to {belief.sum():.12g}")
        if not -STRUCT_TOL <= self.weight <= 1 + STRUCT_TOL:
            raise ValidationError(f"posterior weight {self.weight} outside [0, 1]")


@dataclass(frozen=True)
class SolveResult:
    scheme: SignalingScheme
    value: float
    posteriors: tuple[PosteriorPoint, ...]
    support_size: int
    privacy_slack: float | None
    solver: str = ""
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------


def _check_dims(instance: PersuasionInstance, scheme: SignalingScheme):
    if scheme.probs.shape[1] != instance.num_states:
        raise ValidationError(
            f"scheme covers {scheme.probs.shape[1]} states, instance has {instance.num_states}"
        )


def posteriors_of_scheme(
    instance: PersuasionInstance, scheme: SignalingScheme
) -> list[PosteriorPoint]:
    _check_dims(instance, scheme)
    joint = scheme.probs * instance.prior[None, :]
    weights = joint.sum(axis=1)
    out = []
    for s, w in enumerate(weights):
        if w <= EMPTY_SIGNAL_TOL:
            continue
        out.append(PosteriorPoint(joint[s] / w, w, signal=s))
    return out


def _tie_tol(values: np.ndarray) -> float:
    spread = float(np.ptp(values)) if values.size else 0.0
    return STRUCT_TOL * max(spread, 1e-300)


def best_response(instance: PersuasionInstance, belief) -> int:
    """Index of the receiver's optimal action at ``belief``.

    Near-ties (within 1e-9 of the receiver's payoff range) go to the action the
    sender likes most, then to the lowest index.
    """
    if not instance.actions:
        raise ValidationError("action set is empty")
    belief = np.asarray(belief, dtype=float)
    exp_u = instance.receiver_u @ belief
    tied = np.flatnonzero(exp_u >= exp_u.max() - _tie_tol(instance.receiver_u))
    exp_v = instance.sender_v[tied] @ belief
    # argmax returns the first maximiser, i.e. the lowest action index
    return int(tied[int(np.argmax(exp_v >= exp_v.max() - 1e-15))])


def sender_value_at(instance: PersuasionInstance, belief) -> float:
    belief = np.asarray(belief, dtype=float)
    a = best_response(instance, belief)
    return float(instance.sender_v[a] @ belief)


def evaluate_scheme(instance: PersuasionInstance, scheme: SignalingScheme) -> float:
    return float(
        sum(p.weight * sender_value_at(instance, p.belief) for p in posteriors_of_scheme(instance, scheme))
    )


def bayes_plausibility_check(instance: PersuasionInstance, posteriors) -> bool:
    posteriors = list(posteriors)
    if not posteriors:
        return False
    weights = np.array([p.weight for p in posteriors])
    if abs(weights.sum() - 1.0) > STRUCT_TOL:
        return False
    mean = sum(p.weight * np.asarray(p.belief) for p in posteriors)
    return bool(np.all(np.abs(mean - instance.prior) <= STRUCT_TOL))


def merge_signals(scheme: SignalingScheme, groups: Sequence[Sequence[int]], names=None) -> SignalingScheme:
    """Post-process a scheme by summing the signal rows in each group."""
    probs = np.array([scheme.probs[list(g)].sum(axis=0) for g in groups])
    if names is None:
        names = ["+".join(scheme.signals[i] for i in g) for g in groups]
    return SignalingScheme(tuple(names), probs)


def iid_prior(states, p: float) -> np.ndarray:
    """Product Bernoulli(p) prior restricted to ``states`` and renormalised."""
    if not 0 < p < 1:
        raise ValidationError(f"iid_p must lie in (0, 1), got {p}")
    w = np.array([math.prod(p if b else 1 - p for b in s) for s in states])
    return w / w.sum()
