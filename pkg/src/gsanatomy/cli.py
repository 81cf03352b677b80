"""Command-line front end: ``gsanatomy <subcommand> ...``.

Exit status is 0 on success, 2 for invalid input (schema, design, domain or
usage problems) and 3 when a numerical routine fails to reach its accuracy.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import documents, mcengine
from .asymptotics import LocalAlternative, RatioLimits, limit_cdf_design
from .boundaries import SpendingPlan, solve
from .design import Hypotheses, OperationalCharacteristics, SequentialDesign, operational_characteristics, validate_design
from .errors import AccuracyError, GSDError, SolverError, UsageError
from .numkernel import DEFAULT_GRID_POINTS
from .sequential_lr import power_dominance_trial, sign_statistic
from .subdensity import compute_anatomy, design_view

EXIT_OK, EXIT_INVALID, EXIT_ACCURACY = 0, 2, 3


def _fmt(v: float) -> str:
    return "nan" if isinstance(v, float) and math.isnan(v) else f"{v:.6g}"


def render_oc_table(oc: OperationalCharacteristics) -> str:
    """Text table with one row per operating characteristic and one column per stage."""
    k = oc.design.K
    rows = [
        ("boundary c_d", oc.design.boundaries),
        ("alpha_d (conditional)", oc.alpha_stage),
        ("alpha spending", oc.alpha_spending),
        ("beta_d (conditional)", oc.beta_stage),
        ("beta spending", oc.beta_spending),
        ("cumulative power", oc.cumulative_power),
        ("Pr(D=d) under theta0", oc.stop_probs_null),
        ("Pr(D=d) under theta1", oc.stop_probs_alt),
    ]
    head = ["feature"] + [f"stage {d}" for d in range(1, k + 1)]
    body = [[name] + [_fmt(float(v)) for v in vals] for name, vals in rows]
    width = [max(len(r[i]) for r in [head] + body) for i in range(k + 1)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, width)).rstrip() for r in [head] + body]
    h = oc.hypotheses
    lines += [
        "",
        f"theta0 = {_fmt(h.theta0)}, theta1 = {_fmt(h.theta1)}",
        f"overall alpha  {_fmt(oc.overall_alpha)}",
        f"overall power  {_fmt(oc.overall_power)}",
        f"1 - prod(beta_d)  {_fmt(1.0 - float(np.prod(oc.beta_stage)))}",
        f"expected n (theta1)  {_fmt(oc.expected_n)}",
        f"expected n (theta0)  {_fmt(oc.expected_n_null)}",
    ]
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_design(path: str):
    design, hyp, theta0 = documents.design_from_dict(documents.load(path))
    problems = validate_design(design)
    if problems:
        raise UsageError(f"{path}: " + "; ".join(problems))
    return design, hyp, theta0


def _cmd_design(args) -> int:
    if args.input:
        design, hyp, theta0 = documents.design_from_dict(documents.load(args.input))
    else:
        if not args.stage_n or not args.boundaries:
            raise UsageError("give a design document or both --stage-n and --boundaries")
        design, hyp, theta0 = SequentialDesign(args.stage_n, args.boundaries, args.sigma), None, 0.0
    problems = validate_design(design)
    if problems:
        for p in problems:
            sys.stderr.write(f"invalid design: {p}\n")
        return EXIT_INVALID
    theta1 = hyp.theta1 if hyp else None
    _emit(documents.dump(documents.design_to_dict(design, theta0, theta1)), args.out)
    return EXIT_OK


def _cmd_boundaries(args) -> int:
    theta0 = args.theta0
    if args.plan:
        plan, template, theta0 = documents.plan_from_dict(documents.load(args.plan))
    else:
        if args.increments:
            plan = SpendingPlan.explicit(args.increments)
        elif args.pocock:
            if args.alpha is None or args.stages is None:
                raise UsageError("--pocock needs --alpha and --stages")
            plan = SpendingPlan.pocock(args.alpha, args.stages)
        else:
            raise UsageError("give --plan, --pocock or --increments")
        stage_n = args.stage_n or [1] * plan.K
        if len(stage_n) == 1 and plan.K > 1:
            stage_n = stage_n * plan.K
        template = SequentialDesign(stage_n, [0.0] * len(stage_n), args.sigma)
    sol = solve(plan, template, theta0, args.grid_points)
    _emit(documents.dump(documents.design_to_dict(sol.design, theta0, args.theta1, sol)), args.out)
    return EXIT_OK


def _hypotheses(args, hyp, theta0) -> Hypotheses:
    if args.theta is not None:
        return Hypotheses(theta0, args.theta)
    if hyp is None:
        raise UsageError("no alternative: add theta1 to the design or pass --theta")
    return hyp


def _cmd_oc(args) -> int:
    design, hyp, theta0 = _load_design(args.input)
    oc = operational_characteristics(design, _hypotheses(args, hyp, theta0), args.grid_points)
    _emit(render_oc_table(oc), args.out)
    return EXIT_OK


def _cmd_density(args) -> int:
    design, _, theta0 = _load_design(args.input)
    theta = theta0 if args.theta is None else args.theta
    sd = compute_anatomy(design, theta, args.grid_points)
    rows = []
    for d in range(1, design.K + 1):
        dens = sd.sub[d - 1]
        p = float(sd.stop_probs[d - 1])
        for t, f in zip(dens.points, dens.values):
            rows.append([d, f"{t:.10g}", f"{f:.10g}", f"{f / p:.10g}" if p > 0 else "nan"])
    _emit(_csv(["stage", "t", "sub_density", "conditional_density"], rows), args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    design, _, theta0 = _load_design(args.input)
    theta = theta0 if args.theta is None else args.theta
    cfg = mcengine.SimConfig(design, theta, args.reps, args.seed, args.bins)
    res = mcengine.run_simulation(cfg, args.threads)
    sd = compute_anatomy(design, theta, args.grid_points)
    freq = res.stop_frequencies()
    summary = {
        "theta": theta,
        "replications": cfg.replications,
        "seed": cfg.seed,
        "stop_frequencies": [float(v) for v in freq],
        "stop_probs_exact": [float(v) for v in sd.stop_probs],
        "rejection_rate": float(res.rejected.mean()),
        "mle_mean": float(res.mle.mean()),
        "mle_mean_by_stage": [float(res.mle[res.d == d].mean()) if np.any(res.d == d) else None
                              for d in range(1, design.K + 1)],
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    if args.hist_prefix:
        lo, hi = design_view(sd, "mle").support
        edges = mcengine.histogram_edges(lo, hi, cfg.bins)
        conditions = ["all"] + [f"D={d}" for d in range(1, design.K + 1)]
        for cond in conditions:
            mask = mcengine.condition_mask(res, cond)
            counts, _ = np.histogram(res.mle[mask], bins=edges)
            label = cond.replace("=", "")
            rows = [[f"{a:.10g}", f"{b:.10g}", int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)]
            Path(f"{args.hist_prefix}_{label}.csv").write_text(_csv(["bin_lo", "bin_hi", "count"], rows))
    return EXIT_OK


def _cmd_asymptotics(args) -> int:
    design, _, _ = _load_design(args.input)
    n1 = design.stage_n[0]
    h = args.h if args.h is not None else args.delta1 * design.sigma
    ratios = RatioLimits.from_stage_sizes(design.stage_n)
    limit = limit_cdf_design(ratios, design, LocalAlternative(h))
    theta = h / math.sqrt(n1)
    sd = compute_anatomy(design, theta, args.grid_points)
    exact = design_view(sd)
    v = np.linspace(exact.quantile(0.001), exact.quantile(0.999), args.points)
    lim, fin = limit(v), exact.cdf(v)
    mc = [""] * v.size
    if args.reps:
        res = mcengine.run_simulation(mcengine.SimConfig(design, theta, args.reps, args.seed), args.threads)
        emp = mcengine.empirical_views(res, "all", "z")
        mc = [f"{x:.6f}" for x in emp.cdf(v)]
    rows = [[f"{a:.6g}", f"{b:.10f}", f"{c:.10f}", m] for a, b, c, m in zip(v, lim, fin, mc)]
    _emit(_csv(["v", "limit_cdf", "finite_n_cdf", "mc_cdf"], rows), args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    design, hyp, theta0 = _load_design(args.input)
    hyp = _hypotheses(args, hyp, theta0)
    thetas = args.thetas or [hyp.theta1]
    report = power_dominance_trial(design, hyp, sign_statistic, thetas, args.reps, args.seed,
                                   args.calibration_reps, name="sign")
    rows = [[f"{r.theta:.6g}", f"{r.power_lr:.6f}", f"{r.se_lr:.6f}", f"{r.power_comp:.6f}",
             f"{r.se_comp:.6f}", int(r.flag)] for r in report.rows]
    _emit(_csv(["theta", "power_lr", "se_lr", "power_comp", "se_comp", "flag"], rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsanatomy", description="Group sequential design engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, design_input=True):
        if design_input:
            p.add_argument("input", help="design document (JSON)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)

    def mc(p, reps):
        p.add_argument("--reps", type=int, default=reps)
        p.add_argument("--seed", type=int, default=20240101)
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: ${mcengine.THREADS_ENV} or 1)")

    p = sub.add_parser("design", help="validate or create a design document")
    p.add_argument("input", nargs="?")
    p.add_argument("--stage-n", type=int, nargs="+")
    p.add_argument("--boundaries", type=float, nargs="+")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("boundaries", help="solve critical values for a spending plan")
    common(p, design_input=False)
    p.add_argument("--plan", help="spending plan document (JSON)")
    p.add_argument("--pocock", action="store_true", help="constant boundary")
    p.add_argument("--alpha", type=float)
    p.add_argument("--stages", type=int)
    p.add_argument("--increments", type=float, nargs="+", help="explicit alpha increments per stage")
    p.add_argument("--stage-n", type=int, nargs="+", help="stage sizes (one value repeats)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--theta1", type=float, default=None)
    p.set_defaults(func=_cmd_boundaries)

    p = sub.add_parser("oc", help="operating characteristics table")
    common(p)
    p.add_argument("--theta", type=float, help="alternative theta1 (overrides the document)")
    p.set_defaults(func=_cmd_oc)

    p = sub.add_parser("density", help="stage sub-densities as CSV")
    common(p)
    p.add_argument("--theta", type=float)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("simulate", help="Monte Carlo summary and MLE histograms")
    common(p)
    mc(p, 100000)
    p.add_argument("--theta", type=float)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--hist-prefix", help="write <prefix>_all.csv, <prefix>_D1.csv, ...")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("asymptotics", help="local-alternative limit CDF table")
    common(p)
    mc(p, 0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--h", type=float, help="local parameter, theta = h / sqrt(n_1)")
    g.add_argument("--delta1", type=float, default=0.0, help="stage-1 drift h / sigma")
    p.add_argument("--points", type=int, default=41)
    p.set_defaults(func=_cmd_asymptotics)

    p = sub.add_parser("compare", help="LR test power against a calibrated sign test")
    common(p)
    mc(p, 100000)
    p.add_argument("--theta", type=float, help="alternative theta1 used for the LR design")
    p.add_argument("--thetas", type=float, nargs="+", help="thetas at which power is estimated")
    p.add_argument("--calibration-reps", type=int, default=10**6)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AccuracyError, SolverError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ACCURACY
    except (GSDError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
