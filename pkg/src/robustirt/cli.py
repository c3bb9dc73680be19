"""Command-line surface tying preprocessing, estimation, simulation, and
analysis into reproducible runs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
Every subcommand writes a manifest next to its outputs recording the full
configuration, seed, argv, and tool version.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io as rio
from .analysis import compare_fits, irc_points, pivotal_quantities, protest_report
from .em import DivergenceError, InitMode, InitSpec, fit as run_fit, preliminary_then_main
from .identify import AnchorSpec, IdentificationError, sign_anchor
from .model import FitResult, Hyperparams, Party, Penalty, yea_probability
from .preprocess import EmptyMatrixError, PreprocessConfig, pipeline
from .simulate import run_simulation

__all__ = ["cli_main", "main", "UsageError"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that raises instead of calling sys.exit."""

    def error(self, message):
        raise UsageError(message)


def _thread_hint(args) -> int | None:
    env = os.environ.get("ROBUST_IRT_THREADS")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"ROBUST_IRT_THREADS is not an integer: {env!r}") from None
    return getattr(args, "threads", None)


def _parse_anchor(text: str) -> AnchorSpec:
    if text == "none":
        return AnchorSpec.none()
    kind, _, value = text.partition(":")
    if kind == "party" and value:
        try:
            party = Party(value.capitalize())
        except ValueError:
            raise UsageError(f"unknown party {value!r} in --anchor") from None
        return AnchorSpec.party_positive(party)
    if kind == "legislator" and value:
        return AnchorSpec.legislator_positive(value)
    raise UsageError(
        f"--anchor must be 'party:NAME', 'legislator:ID', or 'none', got {text!r}"
    )


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--grid must be lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--grid must be lo:hi:n with numeric fields, got {text!r}") from None
    if n < 2 or not lo < hi:
        raise UsageError("--grid needs lo < hi and n >= 2")
    return np.linspace(lo, hi, n)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, command: str, config: dict, seed: int | None) -> None:
    rio.write_manifest(
        out / "manifest.json",
        command=command,
        argv=list(args.argv),
        config=config,
        seed=seed,
        threads=_thread_hint(args),
    )


def _cmd_preprocess(args) -> int:
    config = (
        rio.read_preprocess_config(args.config) if args.config else PreprocessConfig()
    )
    data = rio.read_rollcall_csv(args.input, meta_path=args.meta)
    out = _out_dir(args)
    try:
        filtered, report = pipeline(data, config)
    except EmptyMatrixError as exc:
        rio.write_report_json(exc.report, out / "preprocess_report.json")
        raise rio.DataError(str(exc)) from exc
    rio.write_rollcall_csv(filtered, out / "filtered.csv")
    rio.write_report_json(report, out / "preprocess_report.json")
    _manifest(args, out, "preprocess", asdict(config), seed=None)
    print(
        f"preprocess: {report.input_dims[0]}x{report.input_dims[1]} -> "
        f"{report.output_dims[0]}x{report.output_dims[1]}"
    )
    return EXIT_OK


def _cmd_fit(args) -> int:
    anchor = _parse_anchor(args.anchor)
    data = rio.read_rollcall_csv(args.input, meta_path=args.meta)
    hp = Hyperparams(
        lam=args.lam,
        penalty=Penalty(args.penalty),
        dimension=args.k,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
    )
    if hp.penalty is Penalty.L0 and not args.no_prelim and np.isfinite(hp.lam):
        result = preliminary_then_main(data, hp, seed=args.seed)
    else:
        result = run_fit(data, hp, InitSpec(mode=InitMode.RANDOM_NORMAL, seed=args.seed))
    try:
        result = FitResult(
            state=sign_anchor(result.state, anchor, data.legislators),
            objective_trace=result.objective_trace,
            iterations=result.iterations,
            converged=result.converged,
            protest_cells=result.protest_cells,
        ) if anchor.mode.value != "none" else result
    except IdentificationError as exc:
        raise rio.DataError(str(exc)) from exc
    report = protest_report(result, data, data.legislators, data.bills)
    out = _out_dir(args)
    rio.write_fit_json(
        result,
        out / "fit.json",
        legislators=data.legislators,
        bills=data.bills,
        hyperparams=hp,
        protest_report=report,
    )
    config = {
        "input": str(args.input),
        "penalty": hp.penalty.value,
        "lambda": hp.lam,
        "k": hp.dimension,
        "epsilon": hp.epsilon,
        "max_iter": hp.max_iter,
        "anchor": args.anchor,
        "no_prelim": args.no_prelim,
    }
    _manifest(args, out, "fit", config, seed=args.seed)
    status = "converged" if result.converged else "hit iteration cap"
    print(
        f"fit: {status} after {result.iterations} iteration(s); "
        f"{len(result.protest_cells)} shift(s) flagged"
    )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = rio.read_simulation_config(args.config)
    sim = run_simulation(spec)
    out = _out_dir(args)
    rio.write_rollcall_csv(sim.data, out / "votes.csv")
    truth_fit = FitResult(
        state=sim.truth, objective_trace=[], iterations=0, converged=True,
        protest_cells=[],
    )
    rio.write_fit_json(
        truth_fit, out / "truth.json",
        legislators=sim.data.legislators, bills=sim.data.bills,
    )
    with (out / "protest_cells.json").open("w", encoding="utf-8") as fh:
        json.dump(
            {
                "schema_version": rio.SCHEMA_VERSION,
                "protesters": sim.protesters,
                "cells": [[i, j] for i, j in sim.protest_cells],
            },
            fh, indent=1,
        )
        fh.write("\n")
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    _manifest(args, out, "simulate", config, seed=spec.seed)
    print(
        f"simulate: {sim.data.shape[0]}x{sim.data.shape[1]} matrix, "
        f"{len(sim.protest_cells)} protest cell(s)"
    )
    return EXIT_OK


def _load_fit(path: str) -> tuple[FitResult, dict]:
    return rio.read_fit_json(path)


def _parties_for(doc: dict, meta_path: str | None):
    legislators = rio.legislators_from_doc(doc)
    if meta_path:
        by_id = rio.read_legislator_meta(meta_path)
        legislators = [by_id.get(m.id, m) for m in legislators]
    return legislators


def _cmd_analyze(args) -> int:
    fit_a, doc_a = _load_fit(args.fit_a)
    fit_b, doc_b = _load_fit(args.fit_b)
    legislators = _parties_for(doc_b, args.meta)
    if not legislators:
        raise rio.DataError(f"{args.fit_b}: fit document carries no legislator roster")
    out = _out_dir(args)

    rows = compare_fits(fit_a, fit_b, legislators)
    with (out / "quantiles.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["legislator", "quantile_a", "quantile_b", "abs_delta"])
        for r in rows:
            writer.writerow([r.legislator_id, repr(r.quantile_a), repr(r.quantile_b),
                             repr(r.abs_delta)])

    parties = [m.party for m in legislators]
    summary = {}
    for label, f in (("a", fit_a), ("b", fit_b)):
        piv = pivotal_quantities(f.state.theta[:, 0], parties,
                                 veto_quantile=args.veto_quantile)
        summary[label] = asdict(piv)
    with (out / "pivots.json").open("w", encoding="utf-8") as fh:
        json.dump({"schema_version": rio.SCHEMA_VERSION, **summary}, fh, indent=1)
        fh.write("\n")

    bills = rio.bills_from_doc(doc_b)
    with (out / "protest_report.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["legislator", "bill", "gamma", "p_no_shift"])
        for i, j, g in fit_b.protest_cells:
            leg_id = legislators[i].id if i < len(legislators) else str(i)
            bill_id = bills[j].id if j < len(bills) else str(j)
            state = fit_b.state
            p = float(yea_probability(state.alpha[j] + state.beta[j] @ state.theta[i]))
            writer.writerow([leg_id, bill_id, repr(g), repr(p)])

    config = {"fit_a": str(args.fit_a), "fit_b": str(args.fit_b),
              "meta": args.meta, "veto_quantile": args.veto_quantile}
    _manifest(args, out, "analyze", config, seed=None)
    print(f"analyze: {len(rows)} legislators, {len(fit_b.protest_cells)} flagged cell(s)")
    return EXIT_OK


def _cmd_curves(args) -> int:
    fit_doc, doc = _load_fit(args.fit)
    grid = _parse_grid(args.grid)
    data = rio.read_rollcall_csv(args.data) if args.data else None
    j = args.bill
    _, j_count = fit_doc.state.shape
    if not (0 <= j < j_count):
        raise rio.DataError(f"bill index {j} out of range for {j_count} bills")
    try:
        irc = irc_points(fit_doc, j, grid, data=data)
    except ValueError as exc:
        raise rio.DataError(str(exc)) from exc
    bills = rio.bills_from_doc(doc)
    if data is None and j < len(bills):
        irc.bill_id = bills[j].id
    out = _out_dir(args)
    with (out / "curve.json").open("w", encoding="utf-8") as fh:
        json.dump(
            {
                "schema_version": rio.SCHEMA_VERSION,
                "bill_id": irc.bill_id,
                "curve": [[x, p] for x, p in irc.curve],
                "overlay": [[pos, code, bool(flag)] for pos, code, flag in irc.overlay],
            },
            fh, indent=1,
        )
        fh.write("\n")
    config = {"fit": str(args.fit), "bill": j, "grid": args.grid, "data": args.data}
    _manifest(args, out, "curves", config, seed=None)
    print(f"curves: bill {irc.bill_id}, {len(irc.curve)} grid point(s)")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="robustirt",
                     description="Robust probit scaling of roll-call votes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="screen a raw roll-call matrix")
    p.add_argument("input")
    p.add_argument("--config", default=None)
    p.add_argument("--meta", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("fit", help="estimate positions and shifts")
    p.add_argument("input")
    p.add_argument("--penalty", choices=["l0", "l1", "none"], default="l0")
    p.add_argument("--lambda", dest="lam", type=float, default=3.0)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--anchor", default="none")
    p.add_argument("--no-prelim", action="store_true")
    p.add_argument("--meta", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="generate a synthetic roll-call matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="compare two fits and summarize pivots")
    p.add_argument("fit_a")
    p.add_argument("fit_b")
    p.add_argument("--meta", default=None)
    p.add_argument("--veto-quantile", type=float, default=2.0 / 3.0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("curves", help="item response curve for one bill")
    p.add_argument("fit")
    p.add_argument("--bill", type=int, required=True)
    p.add_argument("--grid", default="-3:3:121")
    p.add_argument("--data", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_curves)

    return parser


def cli_main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.argv = argv
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (rio.DataError, EmptyMatrixError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


def main() -> None:
    raise SystemExit(cli_main())
