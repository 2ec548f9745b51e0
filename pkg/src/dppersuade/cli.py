"""Command-line interface: solve, verify, frontier, gap, compare.

Exit codes: 0 success, 1 verification negative, 2 input error, 3 solver error.
``DPPERSUADE_THREADS`` caps the worker pool used by frontier sweeps.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from dppersuade import binary
from dppersuade.cli_io import (
    as_binary,
    fmt_float,
    load_instance,
    oblivious_result_to_json,
    parse_scheme,
    read_json,
    report_to_json,
    result_to_json,
    write_json,
)
from dppersuade.lp_single import solve_single
from dppersuade.model import (
    Approx,
    NoPrivacy,
    PersuasionInstance,
    Pure,
    Renyi,
    SignalingScheme,
    SolverError,
    ValidationError,
    bayes_plausibility_check,
    best_response,
    posteriors_of_scheme,
)
from dppersuade.multi_oblivious import (
    MAX_FULL_N,
    MAX_FULL_T,
    MultiReceiverInstance,
    column_generation_solve,
    reduce_to_oblivious,
    solve_full_naive,
    solve_oblivious_direct,
    verify_lifted,
)
from dppersuade.privacy import max_privacy_slack

EXIT_OK, EXIT_VIOLATED, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
COMPARE_TOL = 1e-6
DIRECT_T_LIMIT = 10


def thread_count() -> int:
    raw = os.environ.get("DPPERSUADE_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"DPPERSUADE_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ValidationError("DPPERSUADE_THREADS must be at least 1")
    return n


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------


def _solve_single(instance: PersuasionInstance, solver: str):
    if solver == "auto":
        solver = "binary" if isinstance(instance.privacy, Renyi) else "lp"
    if solver == "binary":
        res = binary.solve_binary(as_binary(instance), instance.privacy)
        scheme = _align_binary(res, instance)
        res = dataclasses.replace(
            res, scheme=scheme, posteriors=tuple(posteriors_of_scheme(instance, scheme))
        )
        report = None if isinstance(instance.privacy, NoPrivacy) else max_privacy_slack(instance, scheme)
        return res, report
    if solver == "lp":
        if isinstance(instance.privacy, Renyi):
            raise ValidationError("the LP solver does not handle Renyi privacy; use --solver binary")
        res = solve_single(instance)
        report = None if isinstance(instance.privacy, NoPrivacy) else max_privacy_slack(instance, res.scheme)
        return res, report
    raise ValidationError(f"solver {solver!r} needs a multi-receiver instance")


def _align_binary(res, instance):
    """The binary solver orders states (0, 1); match the instance's order."""
    idx = instance.state_index()
    probs = np.zeros_like(res.scheme.probs)
    probs[:, idx[(0,)]] = res.scheme.probs[:, 0]
    probs[:, idx[(1,)]] = res.scheme.probs[:, 1]
    return SignalingScheme(res.scheme.signals, probs)


def cmd_solve(instance_path, overrides=None, solver: str = "auto") -> dict:
    instance = load_instance(instance_path, overrides)
    if isinstance(instance, MultiReceiverInstance):
        if solver in ("auto", "oblivious"):
            obl = reduce_to_oblivious(instance)
            if obl.t <= DIRECT_T_LIMIT:
                scheme, value = solve_oblivious_direct(obl)
                name = "oblivious-direct"
            else:
                scheme, value = column_generation_solve(obl)
                name = "oblivious-column-generation"
            reports = verify_lifted(scheme, instance) if instance.n <= 12 else []
            if reports and not all(r.satisfied for r in reports):
                raise SolverError("lifted oblivious scheme failed privacy verification")
            return oblivious_result_to_json(value, scheme, obl, reports, name)
        if solver == "full":
            return oblivious_result_to_json(solve_full_naive(instance), None, None, [], "full")
        raise ValidationError(f"solver {solver!r} needs a single-receiver instance")
    if solver in ("oblivious", "full"):
        raise ValidationError(f"solver {solver!r} needs a multi-receiver instance")
    res, report = _solve_single(instance, solver)
    return result_to_json(res, instance, report)


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def cmd_verify(instance_path, scheme_path) -> tuple[dict, int]:
    instance = load_instance(instance_path)
    if not isinstance(instance, PersuasionInstance):
        raise ValidationError("verify works on single-receiver instances")
    scheme = parse_scheme(read_json(scheme_path), instance)
    if isinstance(instance.privacy, NoPrivacy):
        report = None
        private_ok = True
    else:
        report = max_privacy_slack(instance, scheme)
        private_ok = report.satisfied
    posteriors = posteriors_of_scheme(instance, scheme)
    obedience = []
    for p in posteriors:
        name = scheme.signals[p.signal]
        chosen = instance.actions[best_response(instance, p.belief)]
        if name in instance.actions:
            a = instance.actions.index(name)
            exp_u = instance.receiver_u @ p.belief
            ok = bool(exp_u[a] >= exp_u.max() - 1e-9)
        else:
            ok = True  # signal names are not actions; nothing to obey
        obedience.append({"signal": name, "best_response": chosen, "obedient": ok})
    bayes = bayes_plausibility_check(instance, posteriors)
    doc = {
        "privacy_report": report_to_json(report, instance),
        "obedience": obedience,
        "bayes_plausible": bayes,
    }
    ok = private_ok and bayes and all(o["obedient"] for o in obedience)
    doc["satisfied"] = ok
    return doc, EXIT_OK if ok else EXIT_VIOLATED


# --------------------------------------------------------------------------
# frontier
# --------------------------------------------------------------------------


def parse_grid(text: str) -> list[float]:
    """``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValidationError(f"grid step must be positive in {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + k * step, 12) for k in range(count)]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse grid {text!r}") from exc
    if not values:
        raise ValidationError("grid is empty")
    return values


def _frontier_point(path, eps, delta, solver):
    overrides = {"type": "pure" if delta == 0 else "approx", "epsilon": eps, "delta": delta}
    doc = cmd_solve(path, overrides, solver)
    return doc["value"], doc["support_size"]


def cmd_frontier(instance_path, epsilon_grid, delta_grid, solver: str = "auto") -> str:
    if any(e <= 0 for e in epsilon_grid):
        raise ValidationError("epsilon grid entries must be positive")
    if any(d < 0 or d >= 1 for d in delta_grid):
        raise ValidationError("delta grid entries must lie in [0, 1)")
    load_instance(instance_path)  # fail fast on a bad file
    points = [(e, d) for d in delta_grid for e in epsilon_grid]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(lambda p: _frontier_point(instance_path, p[0], p[1], solver), points))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "delta", "value", "support_size"])
    for (e, d), (value, support) in zip(points, results):
        w.writerow([fmt_float(e), fmt_float(d), fmt_float(value), support])
    return buf.getvalue()


# --------------------------------------------------------------------------
# gap
# --------------------------------------------------------------------------


def cmd_gap(kind: str, eps1=None, eps2=None, epsilon=None, delta=None, t=0.5, target_ratio=1.0) -> dict:
    def need(name, value):
        if value is None:
            raise ValidationError(f"gap {kind} needs --{name.replace('_', '-')}")
        return float(value)

    if kind == "pure-approx":
        e1, e2, d = need("eps1", eps1), need("eps2", eps2), need("delta", delta)
        mu, gap = binary.gap_pure_vs_approx(e1, e2, d, t)
        bound = binary.pure_approx_gap_bound(e1, e2, d)
    elif kind == "pure-none":
        e = need("epsilon", epsilon)
        mu, gap = binary.gap_pure_vs_none(e, t)
        bound = binary.pure_none_gap_bound(e, t)
    elif kind == "approx-none":
        e, d = need("epsilon", epsilon), need("delta", delta)
        mu, gap = binary.gap_approx_vs_none(e, d, t)
        bound = binary.approx_none_gap_bound(e, d, t / 2)
    elif kind == "ratio":
        e1, e2, d = need("eps1", eps1), need("eps2", eps2), need("delta", delta)
        if not 0 < d < 1:
            raise ValidationError("delta must lie in (0, 1)")
        mu = binary.ratio_unbounded_witness(e1, e2, d, t, target_ratio)
        inst = binary.BinaryInstance(mu, t)
        pure = binary.solve_binary(inst, Pure(e1)).value
        approx = binary.solve_binary(inst, Approx(e2, d)).value
        return {
            "mu_star": mu,
            "gap": approx - pure,
            "bound": 0.0,
            "certified": bool(pure <= 1e-12 and approx > 0),
            "pure_value": pure,
            "approx_value": approx,
        }
    else:
        raise ValidationError(f"unknown gap kind {kind!r}")
    return {"mu_star": mu, "gap": gap, "bound": bound, "certified": bool(gap >= bound - binary.GAP_TOL)}


# --------------------------------------------------------------------------
# compare
# --------------------------------------------------------------------------


def cmd_compare(instance_path) -> dict:
    instance = load_instance(instance_path)
    if not isinstance(instance, MultiReceiverInstance):
        raise ValidationError("compare needs a multi-receiver instance (key 't')")
    if instance.n > MAX_FULL_N or instance.t > MAX_FULL_T:
        raise ValidationError(f"compare limited to n <= {MAX_FULL_N} and t <= {MAX_FULL_T}")
    obl = reduce_to_oblivious(instance)
    full = solve_full_naive(instance)
    _, value = solve_oblivious_direct(obl)
    diff = abs(full - value)
    if diff > COMPARE_TOL:
        raise SolverError(f"full ({full:.12g}) and oblivious ({value:.12g}) values differ by {diff:.3g}")
    return {"full_value": full, "oblivious_value": value, "max_abs_diff": diff}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dppersuade", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal scheme for an instance file")
    s.add_argument("instance")
    s.add_argument("--privacy", choices=["none", "pure", "approx", "renyi"])
    s.add_argument("--epsilon", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--solver", choices=["auto", "binary", "lp", "oblivious", "full"], default="auto")
    s.add_argument("--out")

    v = sub.add_parser("verify", help="check a scheme against an instance's privacy requirement")
    v.add_argument("instance")
    v.add_argument("scheme")
    v.add_argument("--out")

    f = sub.add_parser("frontier", help="value over an epsilon x delta grid as CSV")
    f.add_argument("instance")
    f.add_argument("--epsilons", required=True, help="comma list or start:stop:step")
    f.add_argument("--deltas", default="0", help="comma list or start:stop:step; 0 means pure")
    f.add_argument("--solver", choices=["auto", "binary", "lp", "oblivious"], default="auto")
    f.add_argument("--out")

    g = sub.add_parser("gap", help="certify a privacy-notion gap for the threshold receiver")
    g.add_argument("kind", choices=["pure-approx", "pure-none", "approx-none", "ratio"])
    g.add_argument("--eps1", type=float)
    g.add_argument("--eps2", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--t", type=float, default=0.5)
    g.add_argument("--target-ratio", type=float, default=1.0)
    g.add_argument("--out")

    c = sub.add_parser("compare", help="full-state LP versus oblivious LP")
    c.add_argument("instance")
    c.add_argument("--out")
    return p


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    code = EXIT_OK
    try:
        if args.command == "solve":
            overrides = {"type": args.privacy, "epsilon": args.epsilon, "delta": args.delta, "alpha": args.alpha}
            text = write_json(cmd_solve(args.instance, overrides, args.solver))
        elif args.command == "verify":
            doc, code = cmd_verify(args.instance, args.scheme)
            text = write_json(doc)
        elif args.command == "frontier":
            text = cmd_frontier(args.instance, parse_grid(args.epsilons), parse_grid(args.deltas), args.solver)
        elif args.command == "gap":
            text = write_json(cmd_gap(
                args.kind, args.eps1, args.eps2, args.epsilon, args.delta, args.t, args.target_ratio
            ))
        else:
            text = write_json(cmd_compare(args.instance))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(text, getattr(args, "out", None))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
