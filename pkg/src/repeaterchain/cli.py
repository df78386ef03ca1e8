"""Command-line front end: solves, comparisons, sweeps, simulation, reports.

Subcommands
-----------
cutoff     translate a fidelity budget into the maximum cutoff time
solve      compute an optimal policy and export values/policy files
compare    optimal policy versus baseline policies at one parameter point
sweep      grid of parameter points to CSV (reproducible experiment runs)
simulate   Monte Carlo delivery-time distribution of a policy
states     state-space size report and analytic lower-bound check
stats      swap-all / no-swap action fractions of the optimal policy

All output is data (text, CSV, JSON); plotting is left to external tools.
Every subcommand accepts ``--config FILE`` with a JSON object whose keys
mirror the flag names; explicit flags override the file.  CSV and JSON
floats carry 17 significant digits so downstream processing is bit-stable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .chain import ChainParams, decode_state, encode_state
from .mdp import TransitionModel, bunch
from .sim import SimConfig, estimate
from .solver import (
    ConvergenceError,
    Policy,
    SolverConfig,
    evaluate_policy,
    expand_policy,
    expand_values,
    modified_full_state_policy,
    policy_iteration,
    policy_stats,
    relative_advantage,
    swap_asap_policy,
    value_iteration,
)
from .statespace import (
    DEFAULT_STATE_CAP,
    StateCapExceeded,
    count_lower_bound,
    distinct_labeled_states,
    enumerate_states,
    partition,
)
from .werner import FidelityParams, InfeasibleCutoffError, max_cutoff, worst_case_fidelity

SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _floats(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _ints(value) -> list[int]:
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(",") if v.strip()]


class _Options:
    """Post-parse view merging CLI flags, the JSON config file, and defaults."""

    def __init__(self, args: argparse.Namespace, defaults: dict):
        self._args = args
        self._defaults = defaults
        self._cfg = {}
        if getattr(args, "config", None):
            with open(args.config) as fh:
                self._cfg = json.load(fh)
            if not isinstance(self._cfg, dict):
                raise ValueError("config file must hold a JSON object")

    def get(self, name: str):
        value = getattr(self._args, name, None)
        if value is None:
            value = self._cfg.get(name, self._defaults.get(name))
        return value

    def require(self, name: str):
        value = self.get(name)
        if value is None:
            raise ValueError(f"missing required option --{name.replace('_', '-')}")
        return value


_SOLVER_DEFAULTS = {
    "epsilon": 1e-7,
    "max_iter": 1_000_000,
    "method": "pi",
    "bunch": False,
    "state_cap": DEFAULT_STATE_CAP,
    "workers": 1,
    "eval_method": "direct",
}

_SIM_DEFAULTS = {"trials": 100_000, "seed": 0, "max_slots": 1_000_000}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file whose keys mirror the flags; flags win")
    sp.add_argument("--out", help="output directory or file, depending on the subcommand")


def _add_chain(sp: argparse.ArgumentParser, lists: bool = False) -> None:
    hint = " (comma-separated list)" if lists else ""
    sp.add_argument("--n", help=f"number of nodes{hint}")
    sp.add_argument("--p", help=f"entanglement generation success probability{hint}")
    sp.add_argument("--ps", help=f"swap success probability{hint}")
    sp.add_argument("--tcut", help=f"cutoff time in slots{hint}")


def _add_solver(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--method", choices=["vi", "pi"], help="value or policy iteration")
    sp.add_argument("--epsilon", type=float, help="sweep convergence tolerance")
    sp.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap")
    sp.add_argument(
        "--eval-method",
        dest="eval_method",
        choices=["direct", "sweep"],
        help="fixed-policy evaluation: sparse solve or iterative sweeps",
    )
    sp.add_argument(
        "--bunch",
        action=argparse.BooleanOptionalAction,
        help="fold mirror-image states together before solving",
    )
    sp.add_argument("--state-cap", dest="state_cap", type=int, help="state count ceiling")


def _solver_config(opt: _Options) -> SolverConfig:
    return SolverConfig(
        epsilon=float(opt.get("epsilon")),
        max_iterations=int(opt.get("max_iter")),
        evaluation=opt.get("eval_method"),
    )


def _chain_params(opt: _Options) -> ChainParams:
    return ChainParams(
        n=int(opt.require("n")),
        p=float(opt.require("p")),
        p_s=float(opt.require("ps")),
        t_cut=int(opt.require("tcut")),
    )


def _solve_optimal(params, state_cap, use_bunch, method, config):
    """Enumerate, optionally bunch, solve; returns full-space values and policy."""
    space = enumerate_states(params, state_cap=state_cap)
    model = TransitionModel.build(space)
    solve_space, solve_model = space, model
    split = None
    if use_bunch:
        split = partition(space)
        solve_model = bunch(model, split)
        solve_space = solve_model.space
    solve = policy_iteration if method == "pi" else value_iteration
    table, policy = solve(solve_space, solve_model, config)
    if use_bunch:
        table = expand_values(space, solve_space, table)
        policy = expand_policy(space, split, solve_space, policy)
    return space, model, table, policy


def _baseline_policy(space, spec: str) -> Policy:
    spec = spec.strip()
    if spec == "swap-asap":
        return swap_asap_policy(space)
    if spec.startswith("modified:"):
        nodes = {int(v) for v in spec.split(":", 1)[1].split(",") if v.strip()}
        return modified_full_state_policy(space, nodes)
    raise ValueError(f"unknown baseline policy {spec!r} (use swap-asap or modified:<nodes>)")


# -- exports ------------------------------------------------------------------------


def write_values_csv(path, space, table) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "expected_delivery_time"])
        for state, value in zip(space.boundary_states, table.values):
            writer.writerow([json.dumps(encode_state(state)), _fmt(value)])


def write_policy_json(path, space, policy) -> None:
    params = space.params
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": params.n,
        "p": params.p,
        "p_s": params.p_s,
        "t_cut": params.t_cut,
        "policy": [
            {"state": list(encode_state(s)), "action": sorted(a)}
            for s, a in zip(space.intermediate_states, policy.actions)
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_policy_json(path, space) -> Policy:
    """Read a policy export and bind it to an enumerated space.

    The file must describe exactly the space's intermediate states (same n,
    same t_cut, same state set); anything else is a mismatch error.
    """
    with open(path) as fh:
        doc = json.load(fh)
    params = space.params
    if doc.get("n") != params.n or doc.get("t_cut") != params.t_cut:
        raise ValueError(
            f"policy file is for n={doc.get('n')}, t_cut={doc.get('t_cut')}; "
            f"expected n={params.n}, t_cut={params.t_cut}"
        )
    entries = doc["policy"]
    actions: list[frozenset[int] | None] = [None] * space.num_intermediate
    for entry in entries:
        state = decode_state(entry["state"], params.n, intermediate=True)
        idx = space.intermediate_index.get(state)
        if idx is None:
            raise ValueError(f"policy file lists a state not in the enumerated space: {entry['state']}")
        actions[idx] = frozenset(entry["action"])
    missing = sum(1 for a in actions if a is None)
    if missing:
        raise ValueError(f"policy file misses {missing} enumerated intermediate states")
    return Policy(tuple(actions))


# -- subcommands --------------------------------------------------------------------


def cmd_cutoff(opt: _Options) -> int:
    fparams = FidelityParams(
        f_new=float(opt.require("fnew")),
        f_min=float(opt.require("fmin")),
        tau=float(opt.require("tau")),
    )
    n = int(opt.require("n"))
    try:
        bound = max_cutoff(fparams, n)
    except InfeasibleCutoffError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    slots = math.floor(bound)
    f_worst = worst_case_fidelity(fparams, n, bound)
    print(f"cutoff bound: {_fmt(bound)} time units")
    print(f"cutoff slots: {slots}")
    print(f"worst-case end-to-end fidelity at the bound: {_fmt(f_worst)}")
    print(f"round-trip |F_worst - f_min|: {abs(f_worst - fparams.f_min):.3e}")
    if slots < 1:
        print("infeasible: no integer cutoff >= 1 fits the fidelity budget", file=sys.stderr)
        return 1
    return 0


def cmd_solve(opt: _Options) -> int:
    params = _chain_params(opt)
    config = _solver_config(opt)
    t0 = time.perf_counter()
    space, _, table, policy = _solve_optimal(
        params, int(opt.get("state_cap")), bool(opt.get("bunch")), opt.get("method"), config
    )
    elapsed = time.perf_counter() - t0
    print(f"states: {space.num_boundary} boundary, {space.num_intermediate} intermediate")
    print(f"method: {opt.get('method')}  iterations: {table.iterations}  residual: {table.residual:.3e}")
    print(f"T_opt(empty state) = {_fmt(table.t0)}")
    print(f"wall time: {elapsed:.2f} s")
    out = Path(opt.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_values_csv(out / "values.csv", space, table)
    write_policy_json(out / "policy.json", space, policy)
    print(f"wrote {out / 'values.csv'} and {out / 'policy.json'}")
    return 0


def cmd_compare(opt: _Options) -> int:
    params = _chain_params(opt)
    config = _solver_config(opt)
    baselines = opt.get("baseline") or ["swap-asap"]
    if isinstance(baselines, str):
        baselines = [baselines]
    space, model, table, _ = _solve_optimal(
        params, int(opt.get("state_cap")), bool(opt.get("bunch")), opt.get("method"), config
    )
    print(f"T_opt = {_fmt(table.t0)}")
    for spec in baselines:
        base = evaluate_policy(space, model, _baseline_policy(space, spec), config)
        adv = relative_advantage(base.t0, table.t0)
        print(f"T[{spec}] = {_fmt(base.t0)}   advantage = {_fmt(adv)} ({100 * adv:.3f}%)")
    return 0


def _sweep_point(point: dict) -> dict:
    """One grid point of a sweep; returns a CSV row dict (errors recorded in-row)."""
    row = {
        "n": point["n"],
        "p": point["p"],
        "p_s": point["ps"],
        "t_cut": point["tcut"],
    }
    try:
        params = ChainParams(n=point["n"], p=point["p"], p_s=point["ps"], t_cut=point["tcut"])
        config = SolverConfig(
            epsilon=point["epsilon"],
            max_iterations=point["max_iter"],
            evaluation=point["eval_method"],
        )
        t0 = time.perf_counter()
        space, model, table, _ = _solve_optimal(
            params, point["state_cap"], point["bunch"], point["method"], config
        )
        row["boundary_states"] = space.num_boundary
        row["intermediate_states"] = space.num_intermediate
        row["iterations"] = table.iterations
        row["T_opt"] = _fmt(table.t0)
        for spec in point["baselines"]:
            base = evaluate_policy(space, model, _baseline_policy(space, spec), config)
            key = spec.replace(":", "_").replace(",", "_").replace("-", "_")
            row[f"T_{key}"] = _fmt(base.t0)
            row[f"advantage_{key}"] = _fmt(relative_advantage(base.t0, table.t0))
        row["wall_time_s"] = f"{time.perf_counter() - t0:.3f}"
        row["error"] = ""
    except Exception as exc:  # failures stay in-row; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(opt: _Options) -> int:
    ns = _ints(opt.require("n"))
    ps = _floats(opt.require("p"))
    pss = _floats(opt.require("ps"))
    tcuts = _ints(opt.require("tcut"))
    baselines = opt.get("baseline") or ["swap-asap"]
    if isinstance(baselines, str):
        baselines = [baselines]
    points = [
        {
            "n": n,
            "p": p,
            "ps": p_s,
            "tcut": t_cut,
            "baselines": baselines,
            "epsilon": float(opt.get("epsilon")),
            "max_iter": int(opt.get("max_iter")),
            "eval_method": opt.get("eval_method"),
            "method": opt.get("method"),
            "bunch": bool(opt.get("bunch")),
            "state_cap": int(opt.get("state_cap")),
        }
        for n in ns
        for p in ps
        for p_s in pss
        for t_cut in tcuts
    ]
    workers = int(opt.get("workers"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(point) for point in points]
    keys: list[str] = []
    for row in rows:
        for key in row:
            if key not in keys:
                keys.append(key)
    out = opt.get("out")
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=keys, restval="")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out:
            fh.close()
    failures = sum(1 for row in rows if row["error"])
    if failures:
        print(f"{failures} of {len(rows)} grid points failed", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(opt: _Options) -> int:
    params = _chain_params(opt)
    config = _solver_config(opt)
    space = enumerate_states(params, state_cap=int(opt.get("state_cap")))
    spec = opt.get("policy") or "swap-asap"
    if spec == "optimal":
        _, model, _, policy = _solve_optimal(
            params, int(opt.get("state_cap")), bool(opt.get("bunch")), opt.get("method"), config
        )
    elif spec in ("swap-asap",) or spec.startswith("modified:"):
        policy = _baseline_policy(space, spec)
    else:
        policy = load_policy_json(spec, space)
    sim_config = SimConfig(
        trials=int(opt.get("trials")),
        master_seed=int(opt.get("seed")),
        max_slots=int(opt.get("max_slots")),
    )
    result = estimate(params, policy.state_map(space), sim_config)
    print(f"trials: {result.trials}   master seed: {result.master_seed}")
    print(f"mean delivery time: {_fmt(result.mean)} +- {_fmt(result.stderr)} (stderr)")
    out = Path(opt.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "histogram.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delivery_time", "count"])
        for t, count in result.histogram.items():
            writer.writerow([t, count])
    summary = {
        "schema_version": SCHEMA_VERSION,
        "n": params.n,
        "p": params.p,
        "p_s": params.p_s,
        "t_cut": params.t_cut,
        "policy": spec,
        "trials": result.trials,
        "master_seed": result.master_seed,
        "mean": result.mean,
        "stderr": result.stderr,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1)
        fh.write("\n")
    print(f"wrote {out / 'histogram.csv'} and {out / 'summary.json'}")
    return 0


def cmd_states(opt: _Options) -> int:
    n = int(opt.require("n"))
    t_cut = int(opt.require("tcut"))
    params = ChainParams(n=n, p=0.5, p_s=0.5, t_cut=t_cut)
    space = enumerate_states(params, state_cap=int(opt.get("state_cap")))
    bound = count_lower_bound(n, t_cut)
    labelings = distinct_labeled_states(space)
    print(f"boundary states:      {space.num_boundary}")
    print(f"intermediate states:  {space.num_intermediate}")
    print(f"decidable states:     {space.num_decidable}")
    print(f"distinct labelings:   {labelings}")
    print(f"analytic lower bound: {bound}")
    print(f"bound satisfied:      {labelings >= bound}")
    if opt.get("out"):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "n": n,
            "t_cut": t_cut,
            "boundary_states": space.num_boundary,
            "intermediate_states": space.num_intermediate,
            "decidable_states": space.num_decidable,
            "distinct_labelings": labelings,
            "lower_bound": bound,
            "bound_satisfied": labelings >= bound,
            "action_counts": [len(a) for a in space.actions],
        }
        with open(opt.get("out"), "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"wrote {opt.get('out')}")
    return 0 if labelings >= bound else 1


def cmd_stats(opt: _Options) -> int:
    n = int(opt.require("n"))
    ps_list = _floats(opt.require("p"))
    pss = _floats(opt.require("ps"))
    tcuts = _ints(opt.require("tcut"))
    config = _solver_config(opt)
    rows = []
    for p in ps_list:
        for p_s in pss:
            for t_cut in tcuts:
                params = ChainParams(n=n, p=p, p_s=p_s, t_cut=t_cut)
                _, _, _, policy = _solve_optimal(
                    params, int(opt.get("state_cap")), bool(opt.get("bunch")), opt.get("method"), config
                )
                space = enumerate_states(params, state_cap=int(opt.get("state_cap")))
                stats = policy_stats(space, policy)
                rows.append(
                    {
                        "n": n,
                        "p": p,
                        "p_s": p_s,
                        "t_cut": t_cut,
                        "decidable_states": stats.decidable_states,
                        "pct_swap_all": _fmt(100.0 * stats.swap_all_fraction),
                        "pct_no_swap": _fmt(100.0 * stats.no_swap_fraction),
                    }
                )
    out = opt.get("out")
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out:
            fh.close()
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repeaterchain",
        description="Optimal entanglement-swapping policies for repeater chains with cutoffs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("cutoff", help="maximum cutoff time for a fidelity budget")
    sp.add_argument("--fnew", help="fidelity of newly generated links")
    sp.add_argument("--fmin", help="minimum acceptable end-to-end fidelity")
    sp.add_argument("--tau", help="memory decay constant")
    sp.add_argument("--n", help="number of nodes")
    _add_common(sp)
    sp.set_defaults(func=cmd_cutoff, defaults={})

    sp = sub.add_parser("solve", help="solve for an optimal policy")
    _add_chain(sp)
    _add_solver(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_solve, defaults=_SOLVER_DEFAULTS)

    sp = sub.add_parser("compare", help="optimal policy versus baselines")
    _add_chain(sp)
    _add_solver(sp)
    sp.add_argument(
        "--baseline",
        action="append",
        help="baseline policy: swap-asap or modified:<nodes> (repeatable)",
    )
    _add_common(sp)
    sp.set_defaults(func=cmd_compare, defaults=_SOLVER_DEFAULTS)

    sp = sub.add_parser("sweep", help="parameter grid to CSV")
    _add_chain(sp, lists=True)
    _add_solver(sp)
    sp.add_argument("--baseline", action="append", help="baseline policy (repeatable)")
    sp.add_argument("--workers", type=int, help="parallel grid workers")
    _add_common(sp)
    sp.set_defaults(func=cmd_sweep, defaults=_SOLVER_DEFAULTS)

    sp = sub.add_parser("simulate", help="Monte Carlo delivery-time distribution")
    _add_chain(sp)
    _add_solver(sp)
    sp.add_argument(
        "--policy",
        help="policy file path, or swap-asap | optimal | modified:<nodes>",
    )
    sp.add_argument("--trials", type=int, help="number of trajectories")
    sp.add_argument("--seed", type=int, help="master seed for the trial streams")
    sp.add_argument("--max-slots", dest="max_slots", type=int, help="per-trial slot cap")
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate, defaults={**_SOLVER_DEFAULTS, **_SIM_DEFAULTS})

    sp = sub.add_parser("states", help="state-space size report")
    sp.add_argument("--n", help="number of nodes")
    sp.add_argument("--tcut", help="cutoff time in slots")
    sp.add_argument("--state-cap", dest="state_cap", type=int, help="state count ceiling")
    _add_common(sp)
    sp.set_defaults(func=cmd_states, defaults=_SOLVER_DEFAULTS)

    sp = sub.add_parser("stats", help="optimal-policy action statistics over a grid")
    _add_chain(sp, lists=True)
    _add_solver(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_stats, defaults=_SOLVER_DEFAULTS)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opt = _Options(args, args.defaults)
        return args.func(opt)
    except (ValueError, ConvergenceError, StateCapExceeded, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
