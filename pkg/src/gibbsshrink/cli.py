"""Command line interface: simulate, fit, predict, geweke.

Outputs under --out are deterministic for a fixed seed: CSV/JSON files are
byte-identical across repeated invocations. Figures (PNG) accompany the
delimited outputs unless --no-plots is given; wall-clock timings go to a
plain-text sidecar.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataio, inference, plots
from .geweke import geweke_joint_check
from .sampler import ChainConfig, Method, run_chain
from .simlab import SimConfig, desk_profile, paper_profile, run_experiment
from .stats import Rng

DEFAULT_TAUS = (0.25, 0.5, 1.0, 1.5, 2.0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsshrink",
        description="Shrinkage regression with a partially missing covariate block",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the prediction-error / coverage study")
    sim.add_argument("--config", type=Path, help="JSON config file mirroring SimConfig keys")
    sim.add_argument("--profile", choices=("desk", "paper"), default="desk")
    sim.add_argument("--out", type=Path, required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--taus", type=str, help="comma-separated surrogate-noise levels")
    sim.add_argument("--replicates", type=int)
    sim.add_argument("--methods", type=str, help="comma-separated method names")
    sim.add_argument("--violation", choices=("none", "skewed_error", "quadratic_me", "mixture_x"))
    sim.add_argument("--r2", type=float)
    sim.add_argument("--p", type=int)
    sim.add_argument("--n-a", type=int, dest="n_a")
    sim.add_argument("--n-b", type=int, dest="n_b")
    sim.add_argument("--validation-n", type=int, dest="validation_n")
    sim.add_argument("--burn-in", type=int, dest="burn_in")
    sim.add_argument("--stored", type=int)
    sim.add_argument("--k", type=int)
    sim.add_argument("--beta-pattern", type=str, dest="beta_pattern")
    sim.add_argument("--no-plots", action="store_true")

    fit = sub.add_parser("fit", help="fit one dataset and summarize the posterior")
    fit.add_argument("data", type=Path, help="dataset CSV")
    fit.add_argument("--sidecar", type=Path, help="column-role JSON (default <data>.meta.json)")
    fit.add_argument("--method", default="ebbetas")
    fit.add_argument("--out", type=Path, required=True)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--burn-in", type=int, default=2500, dest="burn_in")
    fit.add_argument("--stored", type=int, default=1000)
    fit.add_argument("--k", type=int, default=100)
    fit.add_argument("--me-variant", choices=("scalar", "per_gene"), default="scalar")
    fit.add_argument("--levels", type=str, default="0.025,0.975")
    fit.add_argument("--dump-draws", action="store_true")
    fit.add_argument("--no-plots", action="store_true")

    pred = sub.add_parser("predict", help="point predictions and intervals for new covariates")
    pred.add_argument("--fit", type=Path, required=True, help="output directory of a fit run")
    pred.add_argument("--x", type=Path, required=True, help="CSV of new covariate rows (header row)")
    pred.add_argument("--out", type=Path, required=True, help="predictions CSV path")
    pred.add_argument("--seed", type=int, default=0)
    pred.add_argument("--levels", type=str, default="0.025,0.975")
    pred.add_argument("--noise", choices=("sd", "variance"), default="sd")

    gwk = sub.add_parser("geweke", help="joint-distribution self-test of the sampler kernels")
    gwk.add_argument("--mode", choices=("vanilla", "ebbetas"), default="vanilla")
    gwk.add_argument("--sweeps", type=int, default=100_000)
    gwk.add_argument("--seed", type=int, default=0)
    gwk.add_argument("--dims", type=str, default="2,4,4", help="p,n_a,n_b")
    gwk.add_argument("--threshold", type=float, default=4.0)
    gwk.add_argument("--out", type=Path, required=True)
    gwk.add_argument("--no-plots", action="store_true")
    return parser


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _load_sim_config(args) -> tuple[SimConfig, list[float]]:
    """Precedence: command-line flags > config file > profile defaults."""
    profile = desk_profile if args.profile == "desk" else paper_profile
    cfg = profile()
    taus = list(DEFAULT_TAUS)

    if args.config is not None:
        raw = json.loads(Path(args.config).read_text())
        taus = [float(t) for t in raw.pop("taus", taus)]
        if "tau" in raw:
            taus = [float(raw.pop("tau"))]
        chain_raw = raw.pop("chain", {})
        cfg = replace(cfg, **raw)
        if chain_raw:
            cfg = replace(cfg, chain=replace(cfg.chain, **chain_raw))

    for name in ("seed", "replicates", "violation", "r2", "p", "n_a", "n_b", "validation_n", "beta_pattern"):
        value = getattr(args, name, None)
        if value is not None:
            cfg = replace(cfg, **{name: value})
    if args.methods:
        cfg = replace(cfg, methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()))
    chain_over = {
        k: getattr(args, k) for k in ("burn_in", "stored", "k") if getattr(args, k) is not None
    }
    if chain_over:
        cfg = replace(cfg, chain=replace(cfg.chain, **chain_over))
    if args.taus:
        taus = _parse_floats(args.taus)
    return cfg, taus


def cmd_simulate(args) -> int:
    cfg, taus = _load_sim_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tables = []
    for tau in taus:
        table = run_experiment(replace(cfg, tau=tau))
        tables.append(table)
        agg = table.aggregate()
        for method in cfg.methods:
            m = agg[method]
            mspe = "n/a" if m["mspe_mean"] is None else f"{m['mspe_mean']:.4f}"
            cov = "n/a" if m["coverage_mean"] is None else f"{m['coverage_mean']:.3f}"
            print(f"tau={tau:g} {method:10s} mspe={mspe} coverage={cov}")
    dataio.write_replicates_csv(out / "replicates.csv", tables)
    dataio.write_summary_json(out / "summary.json", tables)
    dataio.write_timings_txt(out / "timings.txt", tables)
    written = ["replicates.csv", "summary.json", "timings.txt"]
    if not args.no_plots:
        by_tau = {float(t.config.tau): t.aggregate() for t in tables}
        sigma2 = tables[0].config.sigma2()
        plots.plot_metric_vs_tau(
            by_tau, "mspe_mean", "mean squared prediction error", out / "mspe_vs_tau.png",
            hline=sigma2, hline_label="noise floor",
        )
        plots.plot_metric_vs_tau(
            by_tau, "coverage_mean", "prediction interval coverage", out / "coverage_vs_tau.png",
            hline=0.95, hline_label="nominal",
        )
        written += ["mspe_vs_tau.png", "coverage_vs_tau.png"]
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def cmd_fit(args) -> int:
    sidecar = args.sidecar or args.data.with_suffix(args.data.suffix + ".meta.json")
    data = dataio.read_dataset_csv(args.data, sidecar)
    method = Method.parse(args.method)
    cfg = ChainConfig(
        burn_in=args.burn_in,
        stored=args.stored,
        k=args.k,
        seed=args.seed,
        me_variant=args.me_variant,
    )
    chain = run_chain(data, method, cfg)
    lo, hi = _parse_floats(args.levels)
    summary = inference.summarize_chain(chain, levels=(lo, hi))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    payload = {
        "method": method.value,
        "n_a": data.n_a,
        "n_b": data.n_b,
        "p": data.p,
        "beta0_hat": summary.beta0_hat,
        "beta_ppm": [float(v) for v in summary.beta_ppm],
        "beta_pm": [float(v) for v in summary.beta_pm],
        "levels": [lo, hi],
        "penalty_final": None if chain.hyper.lam is None else float(chain.hyper.lam),
        "penalty_status": chain.hyper.lam_status,
        "chain": {
            "burn_in": cfg.burn_in,
            "stored": cfg.stored,
            "k": cfg.k,
            "seed": cfg.seed,
            "me_variant": cfg.me_variant,
        },
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    dataio.write_coefficients_csv(out / "coefficients.csv", summary)
    written = ["summary.json", "coefficients.csv"]
    if args.dump_draws:
        dataio.write_draw_dump(out, chain)
        written += ["draws.bin", "draws.meta.json"]
    if not args.no_plots:
        if chain.lam_trace is not None:
            plots.plot_trace(chain.lam_trace, "ridge penalty", out / "penalty_trace.png", cfg.burn_in)
            written.append("penalty_trace.png")
        plots.plot_trace(chain.sigma2, "outcome variance draw", out / "sigma2_trace.png")
        written.append("sigma2_trace.png")
    print(f"fit {method.value}: beta0_hat={summary.beta0_hat:.4f}, "
          f"{chain.n_draws} draws in {chain.wall_time_s:.1f}s")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def cmd_predict(args) -> int:
    fit_dir = Path(args.fit)
    summary = json.loads((fit_dir / "summary.json").read_text())
    dump = dataio.read_draw_dump(fit_dir / "draws.bin", fit_dir / "draws.meta.json")
    x_new = np.loadtxt(args.x, delimiter=",", skiprows=1, ndmin=2)
    p = len(summary["beta_ppm"])
    if x_new.shape[1] != p:
        raise SystemExit(f"new covariates have {x_new.shape[1]} columns, fit expects {p}")
    lo_q, hi_q = _parse_floats(args.levels)
    point_ppm = summary["beta0_hat"] + x_new @ np.asarray(summary["beta_ppm"])
    point_pm = summary["beta0_hat"] + x_new @ np.asarray(summary["beta_pm"])
    draws = inference.predictive_draws_from_arrays(
        Rng(args.seed, (9,)), dump["beta0"], dump["beta"], dump["sigma2"], x_new, noise=args.noise
    )
    lo, hi = inference.prediction_interval(draws, lo_q, hi_q)
    out = Path(args.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "predictions.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_predictions_csv(out, point_ppm, point_pm, np.atleast_1d(lo), np.atleast_1d(hi))
    print(f"wrote {out} ({x_new.shape[0]} rows)")
    return 0


def cmd_geweke(args) -> int:
    p, n_a, n_b = (int(v) for v in args.dims.split(","))
    method = Method.VANILLA if args.mode == "vanilla" else Method.EBBETAS
    report = geweke_joint_check(method, dims=(p, n_a, n_b), sweeps=args.sweeps, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_geweke_csv(out / "zscores.csv", report)
    written = ["zscores.csv"]
    if not args.no_plots:
        plots.plot_geweke_z(report, out / "zscores.png", threshold=args.threshold)
        written.append("zscores.png")
    flagged = report.flagged(args.threshold)
    verdict = "PASS" if not flagged else f"FAIL ({', '.join(flagged)})"
    print(f"geweke {args.mode}: {report.sweeps} sweeps, max|z|={report.max_abs_z:.2f} "
          f"(threshold {args.threshold:g}) -> {verdict}")
    print(f"wrote {', '.join(written)} to {out}")
    return 0 if not flagged else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "fit": cmd_fit,
        "predict": cmd_predict,
        "geweke": cmd_geweke,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
