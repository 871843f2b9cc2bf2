"""Command-line front end.

Subcommands::

    solve          parameter set for (theta, s0, eps) and the thresholds
    run            one adaptive run -> trajectory CSV + summary JSON
    check-axioms   axiom checkers on seeded random instances (JSON array)
    compare        all markers under identical parameters
    report         cycle-boundary table from a trajectory CSV

Flags may also come from a JSON config file (``--config``); its keys are the
long flag names with dashes replaced by underscores, and explicit flags win.
Exit codes: 0 success, 1 failed check, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import NamedTuple

from . import axioms, driver
from .estimator import EstimatorParams
from .marking import MarkerConfig
from .params import ParamError, solve_params, thresholds

SCHEMA = 1
OUT_ENV = "DOERFLER_LAB_OUT"
MODES = {"ideal": "ideal", "prescribed": "dorfler-prescribed",
         "greedy": "dorfler-greedy", "maximum": "maximum"}
DEFAULTS = {"theta": 0.5, "s0": 1.0, "eps": 0.1, "mu": 0.5, "seed": 0,
            "mode": "prescribed", "n": 1000, "param_sets": 6, "workers": 1,
            "stop_log2_eta": driver.DEFAULT_STOP_LOG2_ETA}
IDEAL_RATES = (0.5, 1.0, 2.0, 4.0)


class UsageError(Exception):
    pass


def _round(obj):
    """Round floats to 15 significant digits, recursively."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return float(format(obj, ".15g"))
        return None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def _options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        opts.update(cfg)
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


def _solution(opts):
    try:
        return solve_params(float(opts["theta"]), float(opts["s0"]), float(opts["eps"]))
    except ParamError as exc:
        raise UsageError(str(exc))


def _params(opts, sol) -> EstimatorParams:
    p = sol.estimator_params()
    over = {k: opts[k] for k in ("alpha", "beta", "K", "M") if k in opts}
    if over:
        try:
            p = EstimatorParams(**{**p.to_json(), **over})
        except ValueError as exc:
            raise UsageError(str(exc))
    return p


def _out_dir(opts) -> Path:
    out = Path(opts.get("out") or os.environ.get(OUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _steps(opts, p: EstimatorParams) -> int:
    if opts.get("steps") is not None:
        n = int(opts["steps"])
    elif opts.get("cycles") is not None:
        n = int(opts["cycles"]) * p.M
    else:
        n = 100 * p.M
    if n < 1:
        raise UsageError("need at least one step")
    return n


def _marker(mode: str, opts) -> MarkerConfig:
    if mode not in MODES:
        raise UsageError(f"unknown mode {mode!r}; choose from {sorted(MODES)}")
    kind = MODES[mode]
    try:
        if kind.startswith("dorfler"):
            return MarkerConfig(kind, theta=float(opts["theta"]))
        if kind == "maximum":
            return MarkerConfig(kind, mu=float(opts["mu"]))
        return MarkerConfig(kind)
    except ValueError as exc:
        raise UsageError(str(exc))


def ideal_rate_supremum(s: float, alpha: float, eta0_sq_log2: float) -> float:
    """``max_{k>=1} s*log2(k) + (eta0_sq_log2 - alpha*k)/2`` (concave in k)."""
    peak = 2 * s / (alpha * math.log(2))
    ks = {1, max(1, math.floor(peak)), max(1, math.ceil(peak))}
    return 0.5 * eta0_sq_log2 + max(s * math.log2(k) - alpha * k / 2 for k in ks)


def summarize(traj: driver.Trajectory, mode: str, s_values) -> dict:
    p = traj.config.params
    last = traj[-1]
    out = {
        "schema": SCHEMA, "mode": mode, "params": p.to_json(),
        "final_k": last.k, "final_cardinality": last.cardinality,
        "final_added": last.added, "final_eta_sq_log2": last.eta_sq_log2,
        "failure": None if traj.failure is None else traj.failure.__dict__,
    }
    div = {}
    for s in s_values:
        try:
            div[format(s, ".15g")] = driver.divergence_report(traj, s).to_json()
        except driver.TrajectoryTooShort as exc:
            div[format(s, ".15g")] = {"error": str(exc)}
    out["divergence"] = div
    checks = [r.dorfler for r in traj if r.dorfler is not None]
    if checks:
        out["optimality"] = {
            "checked": len(checks),
            "all_satisfy": all(c.satisfies for c in checks),
            "all_minimal": all(c.minimal for c in checks),
            "first_non_minimal_k": next((r.k for r in traj if r.dorfler and not r.dorfler.minimal), None),
            "max_abs_equality_gap": max(abs(c.equality_gap) for c in checks),
        }
    if mode == "ideal":
        table = {}
        for s in IDEAL_RATES:
            rates = [driver.rate_functional(r, s) for r in traj if r.added >= 1]
            sup = ideal_rate_supremum(s, p.alpha, traj[0].eta_sq_log2)
            table[format(s, ".15g")] = {"observed_max_rate_log2": max(rates),
                                        "supremum_rate_log2": sup,
                                        "bounded": max(rates) <= sup + 1e-9}
        out["rate_functional"] = table
    if mode == "maximum":
        k_star = driver.burn_in(traj)
        out["burn_in_k"] = k_star
        if k_star is not None:
            tail = [r.eta_sq_log2 for r in traj if r.k >= k_star][:51]
            steps = [a - b for a, b in zip(tail, tail[1:])]
            out["post_burn_in_decay_per_step"] = {
                "min": min(steps), "max": max(steps), "alpha": p.alpha}
    return out


def cmd_solve(opts) -> int:
    sol = _solution(opts)
    th = thresholds(1.0, sol.K)
    print(dumps({"schema": SCHEMA, "solution": sol.to_json(),
                 "thresholds": {"theta_star": th["theta_star"],
                                "theta_tilde_star": th["theta_tilde_star"],
                                "theta": sol.theta}}), end="")
    return 0


def _run_mode(mode, opts, p) -> driver.Trajectory:
    cfg = driver.RunConfig(params=p, marker=_marker(mode, opts),
                           max_iterations=_steps(opts, p),
                           rate_exponent=float(opts["s"]) if opts.get("s") is not None else float(opts["s0"]),
                           stop_log2_eta=float(opts["stop_log2_eta"]))
    return driver.run(cfg)


def cmd_run(opts) -> int:
    sol = _solution(opts)
    p = _params(opts, sol)
    mode = opts["mode"]
    traj = _run_mode(mode, opts, p)
    out = _out_dir(opts)
    s0 = float(opts["s0"])
    summary = summarize(traj, mode, sorted({s0, s0 / 8, float(opts.get("s") or s0)}))
    csv_path = out / f"trajectory_{mode}.csv"
    json_path = out / f"summary_{mode}.json"
    try:
        csv_path.write_text(traj.to_csv())
        summary["trajectory_csv"] = csv_path.name
        json_path.write_text(dumps(summary))
    except OSError as exc:
        print(f"error: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    print(dumps(summary), end="")
    return 0


def cmd_check_axioms(opts) -> int:
    sets = axioms.parameter_sets(int(opts["seed"]), int(opts["param_sets"]) - 1)
    reports = []
    for p in sets:
        res = axioms.run_suite(p, n=int(opts["n"]), seed=int(opts["seed"]),
                               workers=int(opts["workers"]))
        for r in res.reports:
            reports.append({"schema": SCHEMA, **r.to_json(), "params": p.to_json(),
                            "coverage": res.coverage})
    text = dumps(reports)
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    print(text, end="")
    return 0 if all(r["passed"] for r in reports) else 1


def _matched_table(trajs: dict, s: float) -> list:
    top = max(t[-1].added for t in trajs.values())
    rows = []
    j = 0
    while (1 << j) <= top:
        N = 1 << j
        row = {"added_at_most": N}
        for name, t in trajs.items():
            best = None
            for r in t:
                if 1 <= r.added <= N:
                    best = r
            row[name] = None if best is None or t[-1].added < N else {
                "k": best.k, "eta_sq_log2": best.eta_sq_log2,
                "rate_log2": driver.rate_functional(best, s)}
        rows.append(row)
        j += 1
    return rows


def _empirical_rates(traj) -> dict:
    import numpy as np

    recs = [r for r in traj if r.added >= 1]
    half = recs[len(recs) // 2:]
    added = np.array([float(r.added) for r in half])
    eta = np.array([r.eta_sq_log2 for r in half])
    out = {"exponential_rate_per_added": None, "algebraic_rate": None}
    if len(half) >= 2 and np.ptp(added) > 0:
        out["exponential_rate_per_added"] = float(-np.polyfit(added, eta, 1)[0])
        out["algebraic_rate"] = float(-0.5 * np.polyfit(np.log2(added), eta, 1)[0])
    return out


def cmd_compare(opts) -> int:
    sol = _solution(opts)
    p = _params(opts, sol)
    s0 = float(opts["s0"])
    sweep = [s0 / 4, s0 / 2, s0]
    trajs = {}
    for mode in sorted(MODES):
        trajs[mode] = _run_mode(mode, opts, p)
    modes = {}
    for mode, t in trajs.items():
        entry = {"final_k": t[-1].k, "final_added": t[-1].added,
                 "final_eta_sq_log2": t[-1].eta_sq_log2}
        entry.update(_empirical_rates(t))
        flags = {}
        for s in sweep:
            try:
                flags[format(s, ".15g")] = driver.divergence_report(t, s).diverges
            except driver.TrajectoryTooShort:
                flags[format(s, ".15g")] = None
        entry["diverges"] = flags
        modes[mode] = entry
    result = {"schema": SCHEMA, "params": p.to_json(), "theta": sol.theta, "s0": s0,
              "modes": modes, "rate_table": _matched_table(trajs, s0)}
    text = dumps(result)
    out = _out_dir(opts)
    try:
        (out / "compare.json").write_text(text)
    except OSError as exc:
        print(f"error: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    print(text, end="")
    return 0


class CsvRecord(NamedTuple):
    k: int
    added: int
    eta_sq_log2: float


def read_trajectory_csv(path) -> list[CsvRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(driver.CSV_HEADER) - set(rows[0]):
        raise UsageError(f"{path} is not a trajectory CSV")
    return [CsvRecord(int(r["k"]), int(r["added"]), float(r["eta_sq_log2"])) for r in rows]


def cmd_report(opts) -> int:
    path = opts.get("trajectory")
    if not path:
        raise UsageError("report needs --trajectory")
    try:
        recs = read_trajectory_csv(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        return 1
    M = int(opts.get("cycle_length") or DEFAULTS.get("cycle_length", 0) or 0)
    if M < 1:
        raise UsageError("report needs --cycle-length >= 1")
    s = float(opts.get("s") or opts["s0"])
    rows = [{"cycle": r.k // M, "k": r.k, "added": r.added,
             "eta_sq_log2": r.eta_sq_log2, "rate_log2": driver.rate_functional(r, s)}
            for r in recs if r.k % M == 0]
    try:
        div = driver.divergence_report(recs, s, M).to_json()
    except driver.TrajectoryTooShort as exc:
        div = {"error": str(exc)}
    print(dumps({"schema": SCHEMA, "s": s, "cycle_length": M,
                 "cycles": rows, "divergence": div}), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doerfler-lab", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, solve=True):
        sp.add_argument("--config", help="JSON file with default flag values")
        if solve:
            sp.add_argument("--theta", type=float)
            sp.add_argument("--s0", type=float)
            sp.add_argument("--eps", type=float)

    sp = sub.add_parser("solve", help="solve for the counterexample parameters")
    common(sp)

    for name in ("run", "compare"):
        sp = sub.add_parser(name)
        common(sp)
        if name == "run":
            sp.add_argument("--mode", choices=sorted(MODES))
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--steps", type=int)
        g.add_argument("--cycles", type=int)
        sp.add_argument("--mu", type=float)
        sp.add_argument("--s", type=float, help="rate exponent (default s0)")
        sp.add_argument("--stop-log2-eta", type=float)
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")

    sp = sub.add_parser("check-axioms")
    common(sp, solve=False)
    sp.add_argument("--n", type=int, help="instances per parameter set")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--param-sets", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", help="also write the JSON array to this file")

    sp = sub.add_parser("report")
    common(sp)
    sp.add_argument("--trajectory")
    sp.add_argument("--cycle-length", type=int)
    sp.add_argument("--s", type=float)
    return ap


COMMANDS = {"solve": cmd_solve, "run": cmd_run, "check-axioms": cmd_check_axioms,
            "compare": cmd_compare, "report": cmd_report}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    command = args.command
    del args.command
    try:
        opts = _options(args)
        return COMMANDS[command](opts)
    except UsageError as exc:
        ap.error(str(exc))  # exits with status 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
