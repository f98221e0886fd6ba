"""Command-line entry points: simulate | fit | baseline | summarize | coverage | rmse.

Exit codes: 0 success, 2 malformed configuration or arguments, 3 numerical
abort (degenerate population, diverging solver).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import baselines, experiments, io, summary
from .kernels import KernelConfig
from .models import lookup, model_names
from .posterior import PriorSpec
from .smc import DegeneratePopulation, run_spline_smc
from .solver import SolverDivergence

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _priors_from_config(model, cfg, span):
    base = experiments.default_priors(model, span)
    pc = cfg.get("priors", {})
    kwargs = {
        "theta_mean": np.asarray(pc.get("theta_mean", base.theta_mean), float),
        "sigma_theta": np.asarray(pc.get("sigma_theta", base.sigma_theta), float),
        "g0": pc.get("g0", base.g0),
        "h0": pc.get("h0", base.h0),
        "a_lambda": pc.get("a_lambda", base.a_lambda),
        "b_lambda": pc.get("b_lambda", base.b_lambda),
        "sigma_c": pc.get("sigma_c", base.sigma_c),
    }
    if model.has_delay:
        kwargs["tau_bounds"] = tuple(pc.get("tau_bounds", base.tau_bounds))
    return PriorSpec(**kwargs)


def _kernel_from_config(cfg):
    kc = cfg.get("kernel", {})
    return KernelConfig(
        step_tau=kc.get("step_tau", 0.0),
        step_theta=kc.get("step_theta", 0.25),
        step_c=kc.get("step_c", 0.2),
        sweeps=kc.get("sweeps", 2),
        adapt=kc.get("adapt", True),
        tempering_exactness=kc.get("tempering", "paper"),
        fix_lambda=kc.get("fix_lambda", None),
    )


def _load_observations(model, path):
    per_comp = io.read_data_csv(path)
    times, raws = [], []
    for i in model.observed:
        if i not in per_comp:
            raise io.ConfigError(f"data file lacks observed component {i + 1}")
        t, v = per_comp[i]
        times.append(t)
        raws.append(v)
    return experiments.observation_set_from_raw(model, times, raws)


def cmd_simulate(args):
    cfg = io.load_config(args.config)
    model = lookup(args.model or cfg["model"].get("name"))
    dc = cfg.get("data", {})
    for key in ("theta", "x0", "span", "n_obs", "sigma"):
        if key not in dc:
            raise io.ConfigError(f"config [data] section missing '{key}'")
    times = np.linspace(dc["span"][0], dc["span"][1], int(dc["n_obs"]))
    data, traj, raws = experiments.simulate_observations(
        model, dc["theta"], dc.get("tau", 0.0), dc["x0"], times, dc["sigma"],
        int(dc.get("seed", args.seed)))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_data_csv(out / "data.csv", data.times, raws, list(model.observed))
    grid = traj.times[:: max(1, traj.times.size // 2000)]
    io.write_data_csv(out / "truth.csv",
                      [grid] * model.n_components,
                      [traj.sample_at(grid)[:, i] for i in range(model.n_components)],
                      list(range(model.n_components)))
    print(f"wrote {out/'data.csv'} and {out/'truth.csv'}")
    return 0


def _posterior_from_args(args, cfg):
    model = lookup(args.model or cfg["model"].get("name"))
    data = _load_observations(model, args.data)
    sp = cfg.get("spline", {})
    n_interior = int(sp.get("n_interior", 14))
    priors = _priors_from_config(model, cfg, data.span)
    post = experiments.build_posterior(
        model, data, n_interior, priors=priors,
        degree=int(sp.get("degree", 3)), n_quad=int(sp.get("quad_points", 3)))
    return model, post


def cmd_fit(args):
    cfg = io.load_config(args.config) if args.config else {
        s: {} for s in ("model", "data", "priors", "spline", "smc", "kernel")}
    model, post = _posterior_from_args(args, cfg)
    sc = cfg.get("smc", {})
    result = run_spline_smc(
        post,
        n_particles=args.particles or int(sc.get("particles", 500)),
        phi=args.rcess or float(sc.get("rcess", 0.9)),
        resample_threshold=args.resample or float(sc.get("resample", 0.5)),
        seed=args.seed if args.seed is not None else int(sc.get("seed", 0)),
        cfg=_kernel_from_config(cfg),
        n_workers=int(sc.get("workers", 1)),
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pop = result.population
    io.write_particles_csv(out / "particles.csv", pop.states, pop.weights, model)
    io.write_schedule_csv(out / "schedule.csv", result.schedule)
    grid = np.linspace(post.data.span[0], post.data.span[1], 201)
    pairs = ()
    if model.n_params >= 2:
        pairs = ((model.param_names[0], model.param_names[1]),)
    report = summary.summarize(pop.states, pop.weights, model, bases=post.bases,
                               grid_times=grid, corr_pairs=pairs,
                               metadata=result.diagnostics)
    io.write_summary_json(out / "summary.json", report)
    io.write_metadata_json(out / "run.json", result.diagnostics)
    print(f"finished in {result.diagnostics['n_iterations']} iterations; "
          f"outputs in {out}")
    return 0


def cmd_baseline(args):
    cfg = io.load_config(args.config) if args.config else {
        s: {} for s in ("model", "data", "priors", "spline", "smc", "kernel")}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = lookup(args.model or cfg["model"].get("name"))
    data = _load_observations(model, args.data)
    seed = args.seed if args.seed is not None else 0
    if args.kind == "mcmc-spline":
        _, post = _posterior_from_args(args, cfg)
        kc = _kernel_from_config(cfg)
        kc.adapt = False
        kc.sweeps = 1
        trace, stats = baselines.mcmc_spline(post, args.iters, seed, cfg=kc,
                                             thin=args.thin)
        io.write_trace_csv(out / "trace.csv", trace)
    else:
        pc = cfg.get("priors", {})
        spec = baselines.SolverPosteriorSpec(
            theta_mean=np.asarray(
                pc.get("theta_mean",
                       experiments.default_priors(model, data.span).theta_mean),
                float),
            tau_bounds=tuple(pc.get("tau_bounds", (0.0, 50.0)))
            if model.has_delay else None,
            method=cfg.get("smc", {}).get("solver", "euler"),
        )
        if args.kind == "mcmc-desolve":
            trace, stats = baselines.mcmc_desolve(model, data, spec, args.iters,
                                                  seed, thin=args.thin)
            io.write_trace_csv(out / "trace.csv", trace)
        else:  # smc-desolve
            sc = cfg.get("smc", {})
            result = baselines.smc_desolve(
                model, data, spec,
                n_particles=args.particles or int(sc.get("particles", 500)),
                phi=args.rcess or float(sc.get("rcess", 0.999)),
                resample_threshold=args.resample or float(sc.get("resample", 0.5)),
                seed=seed)
            pop = result.population
            rows = {"weight": pop.weights}
            theta = np.array([s.theta for s in pop.states])
            for d, name in enumerate(model.param_names):
                rows[name] = theta[:, d]
            if model.has_delay:
                rows["tau"] = np.array([s.tau for s in pop.states])
            x0 = np.array([s.x0 for s in pop.states])
            for i in range(model.n_components):
                rows[f"x{i + 1}_0"] = x0[:, i]
            io.write_trace_csv(out / "particles.csv", rows)
            io.write_schedule_csv(out / "schedule.csv", result.schedule)
    print(f"baseline {args.kind} written to {out}")
    return 0


def cmd_summarize(args):
    cfg = io.load_config(args.config) if args.config else {"model": {}}
    model = lookup(args.model or cfg["model"].get("name"))
    states, weights = io.read_particles_csv(args.particles, model)
    weights = weights / weights.sum()
    pairs = ()
    if model.n_params >= 2:
        pairs = ((model.param_names[0], model.param_names[1]),)
    report = summary.summarize(states, weights, model, corr_pairs=pairs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_summary_json(out / "summary.json", report)
    print(f"wrote {out/'summary.json'}")
    return 0


def cmd_coverage(args):
    cfg = io.load_config(args.config) if args.config else {"smc": {}}
    sc = cfg.get("smc", {})
    result = experiments.coverage_study(
        n_replicates=args.replicates,
        master_seed=args.seed if args.seed is not None else 20260808,
        n_particles=args.particles or sc.get("particles"),
        phi=args.rcess or sc.get("rcess"),
        progress=lambda k, n, rep: print(f"replicate {k}/{n} done", flush=True),
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {k: result[k] for k in ("coverage", "avg_ci", "truth", "n_replicates")}
    io.write_metadata_json(out / "coverage.json", payload)
    print(f"wrote {out/'coverage.json'}")
    return 0


def cmd_rmse(args):
    cfg = io.load_config(args.config) if args.config else {"model": {}}
    model = lookup(args.model or cfg["model"].get("name"))
    states, weights = io.read_particles_csv(args.particles, model)
    weights = weights / weights.sum()
    truth = io.read_data_csv(args.truth)
    sp = cfg.get("spline", {})
    n_interior = int(sp.get("n_interior", 14))
    spans = [(t.min(), t.max()) for t, _ in truth.values()]
    span = (min(a for a, _ in spans), max(b for _, b in spans))
    from .bspline import SplineBasis, build_knots

    kv = build_knots(span[0], span[1], n_interior, int(sp.get("degree", 3)))
    out = {}
    for i, (times, values) in truth.items():
        if i >= model.n_components:
            continue
        coeffs = np.array([s.c[i] for s in states])
        c_mean = weights @ coeffs
        out[f"x{i + 1}"] = summary.rmse(c_mean, SplineBasis(kv, i), values, times)
    for name, value in out.items():
        print(f"rmse {name}: {value:.6g}")
    if args.out_dir:
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        io.write_metadata_json(outdir / "rmse.json", out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="desmc",
        description="Bayesian DE parameter estimation with spline-represented "
                    "trajectories and annealed SMC",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data_required=True):
        p.add_argument("--model", choices=model_names(), help="built-in model name")
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=".")
        if data_required:
            p.add_argument("--data", required=True, help="observations CSV")

    p = sub.add_parser("simulate", help="generate data.csv/truth.csv for a model")
    common(p, data_required=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="annealed SMC fit of the spline posterior")
    common(p)
    p.add_argument("--particles", "-K", type=int, default=None)
    p.add_argument("--rcess", type=float, default=None)
    p.add_argument("--resample", type=float, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("baseline", help="comparison samplers")
    p.add_argument("kind", choices=["mcmc-spline", "mcmc-desolve", "smc-desolve"])
    common(p)
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--thin", type=int, default=100)
    p.add_argument("--particles", "-K", type=int, default=None)
    p.add_argument("--rcess", type=float, default=None)
    p.add_argument("--resample", type=float, default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("summarize", help="summary.json from a particles.csv")
    common(p, data_required=False)
    p.add_argument("--particles", required=True, help="particles CSV path")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("coverage", help="replicated CI coverage study")
    common(p, data_required=False)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--particles", "-K", type=int, default=None)
    p.add_argument("--rcess", type=float, default=None)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("rmse", help="trajectory RMSE of saved particles vs truth")
    common(p, data_required=False)
    p.add_argument("--particles", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_rmse)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except (io.ConfigError, KeyError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegeneratePopulation, SolverDivergence) as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
