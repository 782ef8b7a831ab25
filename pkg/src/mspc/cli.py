"""Command-line interface.

Subcommands:
  identify  simulate + identify all trials, serialize per-trial bundles
  reach     directional reachable-set study for a fixed input
  control   assemble and solve one control problem for a chosen method
  report    run the full study suite, emit CSVs, summary.json and figures

Exit codes: 0 on success, 2 on any hard numerical failure.
"""
from __future__ import annotations

import argparse
import json
import pathlib
import sys
from dataclasses import replace

import numpy as np

from .harness import (ExperimentConfig, StudyReport, feasibility_study,
                      init_belief, reachability_study, run_pipeline,
                      run_studies, run_trial, violation_study, write_report)
from .msp import predictors_to_json
from .socp import assemble, exact_predictors, solve


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(
            pathlib.Path(args.config).read_text())
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.solver_tol is not None:
        overrides["solver_tol"] = args.solver_tol
    if args.solver_max_iter is not None:
        overrides["solver_max_iter"] = args.solver_max_iter
    return replace(cfg, **overrides) if overrides else cfg


def _out_dir(args) -> pathlib.Path:
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_identify(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    arts = run_pipeline(cfg, jobs=args.jobs)
    n_ok = 0
    for art in arts:
        if not art.ok:
            print(f"trial {art.trial}: FAILED ({art.error})", file=sys.stderr)
            continue
        n_ok += 1
        tdir = out / f"trial_{art.trial:04d}"
        tdir.mkdir(exist_ok=True)
        (tdir / "model.json").write_text(art.model.to_json())
        (tdir / "predictors.json").write_text(
            predictors_to_json(art.predictors))
        (tdir / "timing.json").write_text(json.dumps(
            {"identify_s": art.t_identify, "predictors_s": art.t_predictors}))
    (out / "config.json").write_text(cfg.to_json())
    print(f"identified {n_ok}/{len(arts)} trials -> {out}")
    return 0 if n_ok else 2


def cmd_reach(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    report = StudyReport(config=cfg)
    art = run_trial(cfg, args.trial)
    if not art.ok:
        print(f"trial {args.trial} failed: {art.error}", file=sys.stderr)
        return 2
    reachability_study(cfg, report, art, u_fixed=args.u_fixed)
    write_report(report, out)
    _render(out)
    print(f"reachability study -> {out}")
    return 0


def cmd_control(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    if args.method == "nominal":
        model = cfg.true_model()
        from .kalman import dare_steady_state
        preds = exact_predictors(model, dare_steady_state(model).L, cfg.N)
    else:
        art = run_trial(cfg, args.trial)
        if not art.ok:
            print(f"trial {args.trial} failed: {art.error}", file=sys.stderr)
            return 2
        model, preds = art.model, art.predictors
    init = init_belief(cfg, model)
    prog = assemble(preds, cfg.constraints(), init, cfg.chance_spec,
                    cfg.cost(), cfg.input_bound, args.method,
                    mc_samples=cfg.mc_samples, seed=cfg.trial_seed(args.trial))
    sol = solve(prog, tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
    result = {"method": args.method, "trial": args.trial,
              "status": sol.status, "objective": sol.objective,
              "iterations": sol.iterations, "wall_time_s": sol.wall_time,
              "kkt_residuals": sol.kkt_residuals,
              "u_star": None if sol.u_star is None else sol.u_star.tolist()}
    (out / f"control_{args.method}_{args.trial}.json").write_text(
        json.dumps(result, indent=2, default=float))
    print(f"{args.method} trial {args.trial}: {sol.status} "
          f"(objective {sol.objective})")
    return 0 if sol.status in ("Optimal", "PrimalInfeasible") else 2


def cmd_report(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    report = run_studies(cfg, jobs=args.jobs)
    write_report(report, out)
    _render(out)
    feas = report.feasibility
    for m in ("ellipsoidal", "proposed"):
        if m in feas and "feasible_pct" in feas[m]:
            print(f"{m}: {feas[m]['feasible_pct']:.1f}% feasible")
    print(f"full report -> {out}")
    return 0


def _render(out: pathlib.Path) -> None:
    from .report import render_figures
    for fig in render_figures(out):
        print(f"figure -> {fig}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mspc",
        description="Chance-constrained predictive control with identified "
                    "multi-step predictors")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config JSON file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--trials", type=int, help="override n_trials")
        p.add_argument("--seed", type=int, help="override base_seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel identification workers")
        p.add_argument("--solver-tol", type=float, dest="solver_tol")
        p.add_argument("--solver-max-iter", type=int, dest="solver_max_iter")

    p = sub.add_parser("identify", help="identify models and predictors")
    common(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("reach", help="reachable-set study (fixed input)")
    common(p)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--u-fixed", type=float, default=None,
                   help="fixed input value (default: config fixed_input)")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("control", help="solve one control problem")
    common(p)
    p.add_argument("--method", required=True,
                   choices=("proposed", "ellipsoidal", "nominal"))
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("report", help="full study suite + figures")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError,
            RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
