"""JSON instance and result files.

Instance files describe either a single receiver (``actions``, ``receiver_u``,
``sender_v``) or ``t`` binary-action receivers (``t``, ``receiver_u_i``,
``sender_v_by_count``, keyed by projected state). Errors name the offending
key path, and JSON syntax errors carry line and column.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from dppersuade.binary import BinaryInstance
from dppersuade.model import (
    PersuasionInstance,
    SignalingScheme,
    SolveResult,
    ValidationError,
    all_states,
    best_response,
    iid_prior,
    parse_state,
    privacy_from_params,
    state_label,
)
from dppersuade.multi_oblivious import (
    MultiReceiverInstance,
    ObliviousInstance,
    ObliviousScheme,
    project_state,
)
from dppersuade.privacy import PrivacyReport

MAX_DEFAULT_STATES_N = 12

TOLERANCES = {
    "structural": 1e-9,
    "privacy_verification": 1e-9,
    "objective_audit": 1e-7,
    "lp_feasibility": 1e-9,
    "lp_optimality": 1e-9,
}


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return doc


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{where}: must be finite")
    return float(value)


def _require(doc: dict, key: str, where: str = ""):
    if key not in doc:
        raise ValidationError(f"{where}{key}: missing required key")
    return doc[key]


# --------------------------------------------------------------------------
# instances
# --------------------------------------------------------------------------


def parse_privacy(doc: dict | None, overrides: dict | None = None):
    spec = dict(doc or {"type": "none"})
    for key, value in (overrides or {}).items():
        if value is not None:
            spec[key] = value
    kind = spec.get("type", "none")
    if not isinstance(kind, str):
        raise ValidationError("privacy.type: expected a string")
    try:
        return privacy_from_params(kind, spec.get("epsilon"), spec.get("delta"), spec.get("alpha"))
    except (TypeError, ValueError) as exc:
        msg = str(exc) if isinstance(exc, ValidationError) else "missing or non-numeric parameter"
        raise ValidationError(f"privacy: {msg}") from exc


def _states(doc: dict) -> tuple[int, list[tuple[int, ...]]]:
    n = _require(doc, "n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ValidationError("n: expected a non-negative integer")
    if "states" in doc:
        raw = doc["states"]
        if not isinstance(raw, list) or not raw:
            raise ValidationError("states: expected a non-empty list of 0/1 strings")
        states = []
        for i, s in enumerate(raw):
            if not isinstance(s, str):
                raise ValidationError(f"states[{i}]: expected a 0/1 string")
            try:
                states.append(parse_state(s))
            except ValidationError as exc:
                raise ValidationError(f"states[{i}]: {exc}") from exc
            if len(states[-1]) != n:
                raise ValidationError(f"states[{i}]: length {len(s)} differs from n={n}")
        return n, states
    if n > MAX_DEFAULT_STATES_N:
        raise ValidationError(f"states: required when n > {MAX_DEFAULT_STATES_N}")
    return n, all_states(n)


def _prior(doc: dict, states) -> np.ndarray:
    raw = _require(doc, "prior")
    if isinstance(raw, dict):
        p = _num(_require(raw, "iid_p", "prior."), "prior.iid_p")
        try:
            return iid_prior(states, p)
        except ValidationError as exc:
            raise ValidationError(f"prior.iid_p: {exc}") from exc
    if not isinstance(raw, list) or len(raw) != len(states):
        raise ValidationError(f"prior: expected a list of {len(states)} numbers or {{\"iid_p\": p}}")
    prior = np.array([_num(x, f"prior[{i}]") for i, x in enumerate(raw)])
    if abs(prior.sum() - 1) > 1e-12:
        raise ValidationError(f"prior: entries sum to {prior.sum():.12g}, not 1")
    if np.any(prior <= 0):
        raise ValidationError("prior: entries must be strictly positive (omit zero-mass states)")
    return prior


def _privacy_set(doc: dict, n: int):
    if "privacy_set" not in doc:
        return None
    raw = doc["privacy_set"]
    if not isinstance(raw, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in raw):
        raise ValidationError("privacy_set: expected a list of 1-based bit positions")
    bad = [i for i in raw if not 1 <= i <= n]
    if bad:
        raise ValidationError(f"privacy_set: position {bad[0]} outside 1..{n}")
    return frozenset(raw)


def _table(doc, rows, cols, where: str) -> np.ndarray:
    """``doc[row][col]`` as a dense array, complaining about any gap."""
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: expected an object keyed by {rows[0]!r}, ...")
    out = np.zeros((len(rows), len(cols)))
    for i, r in enumerate(rows):
        inner = doc.get(r)
        if not isinstance(inner, dict):
            raise ValidationError(f"{where}.{r}: missing or not an object")
        for j, c in enumerate(cols):
            if c not in inner:
                raise ValidationError(f"{where}.{r}.{c}: missing value")
            out[i, j] = _num(inner[c], f"{where}.{r}.{c}")
    return out


def omega_key(w) -> str:
    return f"{w[0]},{w[1]}" if isinstance(w, tuple) else str(w)


def parse_instance(doc: dict, overrides: dict | None = None):
    """Build a PersuasionInstance or, when ``t`` is present, a MultiReceiverInstance."""
    n, states = _states(doc)
    prior = _prior(doc, states)
    M = _privacy_set(doc, n)
    privacy = parse_privacy(doc.get("privacy"), overrides)
    if "t" in doc:
        return _parse_multi(doc, n, states, prior, M, privacy)
    actions = _require(doc, "actions")
    if not isinstance(actions, list) or not actions:
        raise ValidationError("actions: expected a non-empty list of names")
    actions = [str(a) for a in actions]
    labels = [state_label(s) for s in states]
    u = _table(_require(doc, "receiver_u"), actions, labels, "receiver_u")
    v = _table(_require(doc, "sender_v"), actions, labels, "sender_v")
    return PersuasionInstance(n, states, prior, actions, u, v, M, privacy)


def _parse_multi(doc, n, states, prior, M, privacy):
    t = doc["t"]
    if isinstance(t, bool) or not isinstance(t, int) or t < 1:
        raise ValidationError("t: expected a positive integer")
    M_eff = frozenset(range(1, n + 1)) if M is None else M
    proj = [project_state(s, M_eff) for s in states]
    omegas = sorted(set(proj))
    keys = [omega_key(w) for w in omegas]
    col = {w: k for k, w in enumerate(omegas)}
    idx = [col[w] for w in proj]
    per = _require(doc, "receiver_u_i")
    if not isinstance(per, list) or len(per) != t:
        raise ValidationError(f"receiver_u_i: expected a list of {t} receiver tables")
    ru = np.stack([_table(per[i], ["0", "1"], keys, f"receiver_u_i[{i}]") for i in range(t)])
    sv = _table(_require(doc, "sender_v_by_count"), [str(c) for c in range(t + 1)], keys, "sender_v_by_count")
    return MultiReceiverInstance(n, states, prior, t, ru[:, :, idx], sv[:, idx], M, privacy)


def load_instance(path, overrides: dict | None = None):
    return parse_instance(read_json(path), overrides)


def privacy_to_json(spec) -> dict:
    out = {"type": spec.kind}
    for key in ("epsilon", "delta", "alpha"):
        if hasattr(spec, key):
            out[key] = getattr(spec, key)
    return out


def instance_to_json(instance) -> dict:
    labels = [state_label(s) for s in instance.states]
    doc = {
        "n": instance.n,
        "states": labels,
        "prior": [float(x) for x in instance.prior],
        "privacy_set": sorted(instance.privacy_set),
        "privacy": privacy_to_json(instance.privacy),
    }
    if isinstance(instance, MultiReceiverInstance):
        proj = [project_state(s, instance.privacy_set) for s in instance.states]
        first = {}
        for k, w in enumerate(proj):
            first.setdefault(w, k)
        order = sorted(first)
        doc["t"] = instance.t
        doc["receiver_u_i"] = [
            {str(a): {omega_key(w): float(instance.receiver_u[i, a, first[w]]) for w in order} for a in (0, 1)}
            for i in range(instance.t)
        ]
        doc["sender_v_by_count"] = {
            str(c): {omega_key(w): float(instance.sender_v[c, first[w]]) for w in order}
            for c in range(instance.t + 1)
        }
        return doc
    doc["actions"] = list(instance.actions)
    for name in ("receiver_u", "sender_v"):
        arr = getattr(instance, name)
        doc[name] = {a: {s: float(arr[i, j]) for j, s in enumerate(labels)} for i, a in enumerate(instance.actions)}
    return doc


def as_binary(instance: PersuasionInstance) -> BinaryInstance:
    """Piecewise-constant view of a one-bit instance whose sender payoff ignores the state."""
    if instance.n != 1 or instance.num_states != 2:
        raise ValidationError("binary solver needs n = 1 with both states present")
    idx = instance.state_index()
    j0, j1 = idx[(0,)], idx[(1,)]
    if np.any(np.abs(instance.sender_v[:, j0] - instance.sender_v[:, j1]) > 1e-12):
        raise ValidationError("binary solver needs sender_v that does not depend on the state")
    u0, u1 = instance.receiver_u[:, j0], instance.receiver_u[:, j1]
    cuts = set()
    for a in range(len(u0)):
        for b in range(a + 1, len(u0)):
            den = (u1[a] - u0[a]) - (u1[b] - u0[b])
            if den != 0:
                q = (u0[b] - u0[a]) / den
                if 1e-12 < q < 1 - 1e-12:
                    cuts.add(float(q))
    cuts = sorted(cuts)

    def value(q):
        return float(instance.sender_v[best_response(instance, _belief(instance, q)), j0])

    grid = [0.0] + cuts + [1.0]
    values = [value(0.5 * (lo + hi)) for lo, hi in zip(grid, grid[1:])]
    bps, vals = [], [values[0]]
    for b, v in zip(cuts, values[1:]):
        if v == vals[-1]:
            continue
        bps.append(b)
        vals.append(v)
    out = BinaryInstance(float(instance.prior[j1]), 0.5, tuple(bps), tuple(vals))
    for b in cuts:
        # a third action tied only at b could beat both neighbouring pieces
        if value(b) > out.value_at(b) + 1e-12:
            raise ValidationError(f"sender value at belief {b:.6g} exceeds both neighbouring pieces")
    return out


def _belief(instance: PersuasionInstance, q: float) -> np.ndarray:
    b = np.zeros(2)
    idx = instance.state_index()
    b[idx[(0,)]], b[idx[(1,)]] = 1 - q, q
    return b


# --------------------------------------------------------------------------
# schemes and results
# --------------------------------------------------------------------------


def report_to_json(report: PrivacyReport | None, instance=None) -> dict | None:
    if report is None:
        return None
    pair = None
    if report.worst_pair is not None:
        p = report.worst_pair
        pair = {
            "theta": state_label(instance.states[p.theta_index]) if instance else p.theta_index,
            "theta_prime": state_label(instance.states[p.theta_prime_index]) if instance else p.theta_prime_index,
            "bit": p.flipped_bit,
        }
    return {"satisfied": report.satisfied, "worst_slack": report.worst_slack, "worst_pair": pair}


def scheme_to_json(scheme: SignalingScheme, instance) -> dict:
    return {
        "signals": list(scheme.signals),
        "states": [state_label(s) for s in instance.states],
        "probs": [[float(x) for x in row] for row in scheme.probs],
    }


def parse_scheme(doc: dict, instance: PersuasionInstance) -> SignalingScheme:
    """Read a scheme (bare or nested under ``scheme``) and align its states to the instance."""
    if "scheme" in doc and isinstance(doc["scheme"], dict):
        doc = doc["scheme"]
    signals = _require(doc, "signals", "scheme.")
    probs = _require(doc, "probs", "scheme.")
    labels = doc.get("states", [state_label(s) for s in instance.states])
    expected = [state_label(s) for s in instance.states]
    if sorted(labels) != sorted(expected):
        raise ValidationError("scheme.states: do not match the instance states")
    if not isinstance(probs, list) or len(probs) != len(signals):
        raise ValidationError("scheme.probs: need one row per signal")
    rows = []
    for i, row in enumerate(probs):
        if not isinstance(row, list) or len(row) != len(labels):
            raise ValidationError(f"scheme.probs[{i}]: need one entry per state")
        rows.append([_num(x, f"scheme.probs[{i}][{j}]") for j, x in enumerate(row)])
    arr = np.array(rows)
    order = [labels.index(s) for s in expected]
    try:
        return SignalingScheme(tuple(str(s) for s in signals), arr[:, order])
    except ValidationError as exc:
        raise ValidationError(f"scheme: {exc}") from exc


def result_to_json(result: SolveResult, instance: PersuasionInstance, report: PrivacyReport | None) -> dict:
    return {
        "value": result.value,
        "scheme": scheme_to_json(result.scheme, instance),
        "posteriors": [
            {
                "signal": result.scheme.signals[p.signal] if p.signal is not None else None,
                "belief": [float(x) for x in p.belief],
                "weight": p.weight,
            }
            for p in result.posteriors
        ],
        "support_size": result.support_size,
        "privacy_report": report_to_json(report, instance),
        "solver": result.solver,
        "tolerances": dict(TOLERANCES),
    }


def oblivious_scheme_to_json(scheme: ObliviousScheme) -> dict:
    return {
        "omega_space": [omega_key(w) for w in scheme.omega_space],
        "columns": [
            [{"T": sorted(T), "prob": p} for T, p in col] for col in scheme.columns
        ],
    }


def oblivious_result_to_json(value, scheme, obl: ObliviousInstance | None, reports, solver: str) -> dict:
    worst = None
    if reports:
        k = int(np.argmax([r.worst_slack for r in reports]))
        r = reports[k]
        worst = {
            "satisfied": all(x.satisfied for x in reports),
            "worst_slack": r.worst_slack,
            "worst_pair": None if r.worst_pair is None else {
                "receiver": k + 1,
                "theta_index": r.worst_pair.theta_index,
                "theta_prime_index": r.worst_pair.theta_prime_index,
                "bit": r.worst_pair.flipped_bit,
            },
        }
    return {
        "value": value,
        "scheme": None if scheme is None else oblivious_scheme_to_json(scheme),
        "posteriors": [],
        "support_size": None if scheme is None else sum(len(c) for c in scheme.columns),
        "privacy_report": worst,
        "solver": solver,
        "tolerances": dict(TOLERANCES),
    }


def write_json(doc, path=None) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")
