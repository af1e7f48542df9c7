"""Command-line interface: model I/O and the six subcommands.

Exit codes: 0 success, 1 validation error (the message names the violated
invariant), 2 a requested decision came back undecided.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import gallery
from .core_model import (
    ModelError,
    FilterModel,
    NonnegMatrix,
    Partition,
    TransitionMatrix,
    load_model,
    save_model,
)
from .entropy import entropy_bracket, entropy_rate_mc, entropy_series
from .filter_dynamics import (
    as_prob_vector,
    evolve,
    load_measure,
    save_measure,
    simulate_filter,
)
from .kantorovich import kantorovich_distance, save_plan
from .stability import (
    check_isometry_obstruction,
    compose_rank_one_witness,
    default_col_bound,
    detect_rank_one_limit,
    find_localizing_word,
    find_subrectangular_word,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDECIDED = 2


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, NonnegMatrix):
        return {"rows": obj.rows, "cols": obj.cols, "entries": obj.triplets()}
    return obj


def _write_json(doc, path) -> None:
    if path is None:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")


def _start_vector(model: FilterModel, x0_arg: str | None):
    if x0_arg:
        return as_prob_vector([float(t) for t in x0_arg.split(",")])
    if "default_start" in model.meta:
        return as_prob_vector(model.meta["default_start"])
    return model.stationary


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    x0 = _start_vector(model, args.x0)
    trace = simulate_filter(x0, model.partition, steps=args.steps, seed=args.seed)
    trace.to_csv(args.out)
    return EXIT_OK


def _cmd_evolve(args) -> int:
    model = load_model(args.model)
    x0 = _start_vector(model, args.x0)
    mu = evolve(x0, model.partition, n=args.steps, prune=args.prune,
                merge_eps=args.merge_eps)
    save_measure(mu, args.out)
    print(f"atoms={mu.size} pruned_mass={mu.pruned_mass:.17g}")
    return EXIT_OK


def _cmd_distance(args) -> int:
    mu = load_measure(args.mu)
    nu = load_measure(args.nu)
    dist, plan = kantorovich_distance(mu, nu)
    print(f"{dist:.12g}")
    if args.plan:
        save_plan(plan, args.plan)
    return EXIT_OK


def _cmd_check(args) -> int:
    model = load_model(args.model)
    m = model.partition
    verdict: dict = {"condition": args.condition}
    code = EXIT_OK
    if args.condition == "a":
        word = find_subrectangular_word(m, max_len=args.max_word_len)
        if word is None:
            verdict.update(kind="undecided", note="no subrectangular word within budget")
            code = EXIT_UNDECIDED
        else:
            verdict.update(kind="condition_a", word=list(word))
    elif args.condition == "localizing":
        bound = args.col_bound if args.col_bound is not None else default_col_bound(m.n)
        word = find_localizing_word(m, max_len=args.max_word_len, col_bound=bound)
        verdict["col_bound"] = bound
        if word is None:
            verdict.update(kind="undecided", note="no localizing word within budget")
            code = EXIT_UNDECIDED
        else:
            verdict.update(kind="localizing", word=list(word))
    elif args.condition == "b1":
        res = detect_rank_one_limit(m, tol=args.tol, max_depth=args.max_word_len)
        verdict.update(kind=res.kind, diagnostics=res.diagnostics)
        if res.converged:
            verdict["word"] = list(res.word)
            verdict["W"] = res.W
        else:
            code = EXIT_UNDECIDED
    elif args.condition == "thm93":
        out = compose_rank_one_witness(m, max_len=args.max_word_len, tol=args.tol)
        if out is None:
            verdict.update(kind="undecided", note="prerequisite words not found")
            code = EXIT_UNDECIDED
        else:
            word, W = out
            verdict.update(kind="b1_converged", word=list(word), W=W)
    elif args.condition == "thm11":
        if not args.subset:
            raise ModelError("--subset is required for thm11")
        subset = [int(t) for t in args.subset.split(",")]
        report = check_isometry_obstruction(
            m, subset, n_max=args.depth, sample_count=args.samples, seed=args.seed)
        verdict.update(
            kind="nonstable" if report.passed else "hypotheses_failed",
            passed=report.passed,
            separation=report.separation,
            isolated_pass=report.isolated_pass,
            equal_words_pass=report.equal_words_pass,
            isometry_pass=report.isometry_pass,
            max_isometry_deviation=report.max_isometry_deviation,
            witnesses=report.witnesses,
        )
    else:  # unreachable behind argparse choices
        raise ModelError(f"unknown condition {args.condition!r}")
    _write_json(_jsonable(verdict), args.out)
    return code


def _cmd_gallery(args) -> int:
    params = {}
    if args.params:
        with open(args.params) as fh:
            params = json.load(fh)
    if args.kind == "kesten":
        model = gallery.kesten_model()
    elif args.kind == "random-walk":
        if "case" in params or not params:
            n = int(params.get("n", 64))
            model = (gallery.random_walk_case_a(n) if params.get("case", "a") == "a"
                     else gallery.random_walk_case_b(n))
        else:
            rw = gallery.RandomWalkParams(
                a=tuple(params["a"]), b=tuple(params["b"]), c=tuple(params["c"]),
                n_trunc=int(params["n"]))
            model = gallery.random_walk_model(rw)
    elif args.kind == "perm-family":
        if not params:
            spec = gallery.kesten_perm_spec()
        else:
            base = TransitionMatrix.from_dense(params["base"])
            if "lumping" in params["members"]:
                from .core_model import partition_from_lumping
                members = partition_from_lumping(base, params["members"]["lumping"])
            else:
                members = Partition(
                    {w: NonnegMatrix(base.n, base.n,
                                     [(int(i), int(j), float(v)) for i, j, v in trips])
                     for w, trips in params["members"]["explicit"].items()},
                    base)
            Q = {}
            for key, sigma in params["Q"].items():
                i, k, w = key.split(",", 2)
                Q[(int(i), int(k), w)] = [int(s) for s in sigma]
            spec = gallery.PermFamilySpec(base=base, members=members,
                                          d=int(params["d"]), Q=Q)
        model = gallery.perm_family_model(spec)
    elif args.kind == "birkhoff":
        model = gallery.birkhoff_partition_model(np.asarray(params["matrix"], dtype=float))
    else:
        raise ModelError(f"unknown gallery kind {args.kind!r}")
    save_model(model, args.out)
    return EXIT_OK


def _cmd_entropy(args) -> int:
    model = load_model(args.model)
    m = model.partition
    pi = model.stationary
    series = entropy_series(pi, m, args.horizon + 1, prune=args.prune)
    lower = upper = None
    if args.bracket:
        report = entropy_bracket(m, args.horizon, prune=args.prune, pi=pi)
        lower, upper = report.bracket
    rows = []
    for k in range(args.horizon):
        rows.append({
            "n": k + 1,
            "H_n": series.values[k],
            "H_R_n": series.values[k + 1] - series.values[k],
            "L_n": lower[k] if lower else "",
            "U_n": upper[k] if upper else "",
            "pruned_mass": series.pruned_mass,
        })
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["n", "H_n", "H_R_n", "L_n", "U_n", "pruned_mass"])
        for r in rows:
            writer.writerow([
                r["n"],
                repr(float(r["H_n"])),
                repr(float(r["H_R_n"])),
                repr(float(r["L_n"])) if r["L_n"] != "" else "",
                repr(float(r["U_n"])) if r["U_n"] != "" else "",
                repr(float(r["pruned_mass"])),
            ])
    finally:
        if args.out:
            out.close()
    if args.mc is not None:
        opts = {}
        for tok in args.mc:
            key, _, val = tok.partition("=")
            opts[key] = int(val)
        est, err = entropy_rate_mc(
            m, burn_in=opts.get("burn", 200), samples=opts.get("samples", 5000),
            seed=opts.get("seed", 0))
        print(f"mc_estimate={est:.12g} mc_stderr={err:.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filtermc",
        description="Filtering processes of partially observed Markov chains on the simplex.",
    )
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("FILTERMC_THREADS", "1")),
                        help="worker threads (accepted for compatibility; execution is deterministic)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample one filter path to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", help="comma-separated start vector (default: model start or stationary)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evolve", help="n-step filter distribution to a measure file")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--x0")
    p.add_argument("--prune", type=float, default=1e-12)
    p.add_argument("--merge-eps", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("distance", help="exact transport distance between measure files")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--plan", help="write the optimal plan to this JSON file")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("check", help="stability / non-stability diagnostics")
    p.add_argument("--model", required=True)
    p.add_argument("--condition", required=True,
                   choices=["a", "b1", "localizing", "thm93", "thm11"])
    p.add_argument("--max-word-len", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--col-bound", type=int)
    p.add_argument("--subset", help="comma-separated state indices (thm11)")
    p.add_argument("--depth", type=int, default=4, help="word depth for thm11")
    p.add_argument("--samples", type=int, default=6, help="sampled starts for thm11")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="verdict JSON (default: stdout)")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("gallery", help="generate a built-in model")
    p.add_argument("kind", choices=["kesten", "random-walk", "perm-family", "birkhoff"])
    p.add_argument("--params", help="JSON parameter file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gallery)

    p = sub.add_parser("entropy", help="entropy horizons, brackets, Monte Carlo rate")
    p.add_argument("--model", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--prune", type=float, default=1e-12)
    p.add_argument("--bracket", action="store_true")
    p.add_argument("--mc", nargs="*", metavar="key=val",
                   help="Monte Carlo options: samples=K burn=B seed=S")
    p.add_argument("--out", help="CSV output (default: stdout)")
    p.set_defaults(func=_cmd_entropy)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on bad flags (2) and --help (0)
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
