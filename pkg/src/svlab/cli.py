"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 failed verification.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, autocorr, io, short_time, verification
from . import moment_engine as moments
from . import stationary_dist as stationary
from .errors import SVLabError, UsageError
from .model_core import ModelSpec, parse_key_values, preset, validate
from .sde_engine import SimConfig, simulate_paths

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

MODEL_KEYS = ("preset", "alpha", "beta", "gamma", "a", "sigma", "g")
RUN_KEYS = ("dt", "t_end", "paths", "seed", "threads", "stride")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    m = p.add_argument_group("model")
    m.add_argument("--config", help="flat key=value file; command-line flags override it")
    m.add_argument("--preset", help="named model (stein-stein, ou, heston, garch, geometric-ou, three-halves, expou)")
    m.add_argument("--alpha", help="drift exponent as p/q")
    m.add_argument("--beta", help="noise exponent as p/q")
    m.add_argument("--gamma", help="volatility exponent as p/q (1/2 or 1 for the analytics)")
    m.add_argument("--a", type=float)
    m.add_argument("--sigma", type=float)
    m.add_argument("--g", type=float)
    r = p.add_argument_group("run")
    r.add_argument("--dt", type=float)
    r.add_argument("--t-end", dest="t_end", type=float)
    r.add_argument("--paths", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int, help="worker threads (default: all cores); never changes results")
    r.add_argument("--stride", type=int, help="record every STRIDE steps")
    r.add_argument("--out", default="out", help="output directory")
    r.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svlab", description="Stochastic-volatility model laboratory.")
    parser.add_argument("--version", action="version", version=f"svlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate paths and summarize the ensemble")
    _add_common(p)
    p.add_argument("--no-reflect", action="store_true", help="unbounded S (Stein-Stein only)")
    p.add_argument("--no-paths-csv", action="store_true", help="skip the raw path dump")

    p = sub.add_parser("moments", help="moment trajectories and long-time limits")
    _add_common(p)
    p.add_argument("--max-m", type=int, default=4)
    p.add_argument("--max-n", type=int, default=2)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-points", type=int, default=101)
    p.add_argument("--method", choices=("expm", "radau"), default="expm")

    p = sub.add_parser("stationary", help="normalized stationary density and moment checks")
    _add_common(p)
    p.add_argument("--points", type=int, default=2048)
    p.add_argument("--max-n", type=int, default=4)

    p = sub.add_parser("short-time", help="mixing-integral quadrature vs tail asymptote")
    _add_common(p)
    p.add_argument("--delta-t", type=float, default=0.01)
    p.add_argument("--points", type=int, default=41)

    p = sub.add_parser("acf", help="analytic and empirical C_uv curves")
    _add_common(p)
    p.add_argument("--u", type=int, default=1)
    p.add_argument("--v", type=int, default=1)
    p.add_argument("--max-lag", type=float, help="largest lag (default 5/a)")

    p = sub.add_parser("verify", help="run checks and print PASS/FAIL per item")
    _add_common(p)
    p.add_argument("--suite", choices=("model", "acceptance"), default="model",
                   help="'model' checks the given model; 'acceptance' runs the fixed criteria 1-9")
    p.add_argument("--criteria", help="comma-separated subset of the acceptance criteria")
    return parser


def _merged(args) -> dict:
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        values.update(parse_key_values(text))
    for key in MODEL_KEYS + RUN_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return values


def resolve_spec(values: dict) -> ModelSpec:
    base = {}
    if "preset" in values:
        template = preset(str(values["preset"]))
        spec = template.build()
        base = {"alpha": spec.alpha, "beta": spec.beta, "gamma": spec.gamma, "kind": spec.kind.value,
                "a": spec.a, "sigma": spec.sigma, "g": spec.g}
    elif not all(k in values for k in ("alpha", "beta", "gamma")):
        if "kind" not in values:
            raise UsageError("give --preset or all of --alpha --beta --gamma")
    base.update({k: values[k] for k in ("alpha", "beta", "gamma", "a", "sigma", "g", "kind")
                 if k in values})
    spec = ModelSpec.from_mapping(base)
    validate(spec)
    return spec


def _sim_config(spec: ModelSpec, values: dict, **overrides) -> SimConfig:
    base = SimConfig.defaults_for(spec)
    dt = float(values.get("dt", base.dt))
    t_end = float(values.get("t_end", base.t_end))
    stride = int(values.get("stride", max(1, int(round(0.1 / spec.a / dt)))))
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * t_end:
        raise UsageError(f"t_end={t_end} is not a multiple of dt={dt}")
    if "stride" not in values:
        n_steps -= n_steps % stride
    kwargs = dict(dt=dt, t_end=n_steps * dt, n_paths=int(values.get("paths", base.n_paths)),
                  seed=int(values.get("seed", base.seed)), record_stride=stride)
    kwargs.update(overrides)
    return SimConfig(**kwargs)


def _threads(values: dict) -> int:
    return int(values.get("threads", os.cpu_count() or 1))


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _manifest(args, spec, params, values) -> io.RunManifest:
    seed = int(values["seed"]) if "seed" in values else None
    return io.RunManifest(args.command, spec, params, seed, str(args.out))


# ---------------------------------------------------------------------------


def cmd_simulate(args, values, out: Path) -> int:
    spec = resolve_spec(values)
    cfg = _sim_config(spec, values, reflect=not args.no_reflect)
    ens = simulate_paths(spec, cfg, _threads(values))
    man = _manifest(args, spec, asdict(cfg), {**values, "seed": cfg.seed})
    summ = ens.summary()
    runtime = summ.pop("runtime_s")
    io.write_json(out / "summary.json", {**man.as_dict(), "summary": summ})
    if not args.no_paths_csv:
        rows = ((t, p, ens.x[p, i], ens.s[p, i])
                for p in range(ens.n_paths) for i, t in enumerate(ens.times))
        io.write_csv(out / "paths.csv", ("t", "path_id", "x", "s"), rows, man)
    io.write_manifest(out, man, {"runtime_s": runtime})
    _say(args, f"<S> = {summ['s_mean']:.6g} +- {summ['s_mean_se']:.2g}, "
               f"<S^2> = {summ['s2_mean']:.6g} +- {summ['s2_mean_se']:.2g}, "
               f"Var X(T) = {summ['x_var_final']:.6g}, min S = {summ['min_s']:.4g} "
               f"({runtime:.1f} s)")
    return EXIT_OK


def cmd_moments(args, values, out: Path) -> int:
    spec = resolve_spec(values)
    t = np.linspace(0.0, args.t_max, args.t_points)
    traj = moments.evolve_moments(spec, args.max_m, args.max_n, t, method=args.method)
    params = {"max_m": args.max_m, "max_n": args.max_n, "t_max": args.t_max,
              "t_points": args.t_points, "method": args.method}
    man = _manifest(args, spec, params, values)
    io.write_csv(out / "moments.csv", ("t", "m", "n", "value", "status"), traj.rows(), man)
    rows = []
    for l in range(args.max_m // 2 + 1):
        for n in range(args.max_n + 1):
            lim = moments.longtime_limit(spec, l, n)
            rows.append((l, n, lim.value, lim.status))
    io.write_csv(out / "longtime.csv", ("l", "n", "value", "status"), rows, man)
    io.write_manifest(out, man)
    for l, n, v, st in rows:
        _say(args, f"lim t^-{l} mu_{2 * l},{n} = {v:.6g} ({st})")
    return EXIT_OK


def cmd_stationary(args, values, out: Path) -> int:
    spec = resolve_spec(values)
    curve = stationary.normalize(spec, points=args.points)
    man = _manifest(args, spec, {"points": args.points, "max_n": args.max_n}, values)
    io.write_csv(out / "density.csv", ("s", "pdf", "cdf"),
                 zip(curve.grid, curve.pdf_values, curve.cdf(curve.grid)), man)
    rows = []
    for n in range(1, args.max_n + 1):
        try:
            quad = stationary.stationary_moment_check(curve, n)
        except SVLabError:
            quad = math.inf
        try:
            closed = moments.stationary_s_moment(spec, n)
        except SVLabError:
            closed = math.nan
        rows.append((n, quad, closed))
        _say(args, f"<S^{n}> quadrature={quad:.10g} closed-form={closed:.10g}")
    io.write_csv(out / "stationary_moments.csv", ("n", "quadrature", "closed_form"), rows, man)
    io.write_manifest(out, man, {"norm_const": curve.norm_const, "support": list(curve.support)})
    return EXIT_OK


def cmd_short_time(args, values, out: Path) -> int:
    spec = resolve_spec(values)
    dt = args.delta_t
    if spec.is_expou:
        xi = np.geomspace(1e-2, 1e6, args.points)
        dx = np.sqrt(xi * 2 * spec.a * dt) / spec.g * math.exp(spec.sigma)
        log_asym = short_time.expou_log_tail(spec, dx, dt)
    else:
        tail = short_time.tail_asymptote(spec)
        lo, hi = tail.tail_window()
        dx = np.geomspace(lo / 10, hi, args.points) * math.sqrt(dt)
        log_asym = tail.log_density(dx, dt)
        _say(args, f"{tail.family.value}: {tail.form.value}, stretch exponent "
                   f"{tail.stretch_exponent:.6g}, tail window y in [{lo:.4g}, {hi:.4g}]")
    log_quad = np.array([short_time.log_mixing_density(spec, x, dt) for x in dx])
    rows = zip(dx, np.exp(log_quad), np.exp(log_asym), log_asym - log_quad)
    man = _manifest(args, spec, {"delta_t": dt, "points": args.points}, values)
    io.write_csv(out / "short_time.csv", ("dx", "pdf_quadrature", "pdf_asymptote", "log_ratio"),
                 rows, man)
    io.write_manifest(out, man)
    return EXIT_OK


def cmd_acf(args, values, out: Path) -> int:
    spec = resolve_spec(values)
    cfg = _sim_config(spec, values)
    max_lag = args.max_lag if args.max_lag is not None else 5.0 / spec.a
    n_lag = int(round(max_lag / cfg.record_dt))
    lags = np.round(np.arange(n_lag + 1) * cfg.record_dt, 12)
    ana = autocorr.analytic_acf(spec, args.u, args.v, lags)
    ens = simulate_paths(spec, cfg, _threads(values))
    emp = autocorr.empirical_acf(ens, args.u, args.v, lags)
    man = _manifest(args, spec, {**asdict(cfg), "u": args.u, "v": args.v, "max_lag": max_lag},
                    {**values, "seed": cfg.seed})
    rows = [(l, val, 0.0, "analytic") for l, val in zip(ana.lags, ana.values)]
    rows += [(l, val, e, "empirical") for l, val, e in zip(emp.lags, emp.values, emp.stderr)]
    io.write_csv(out / "acf.csv", ("lag", "value", "stderr", "source"), rows, man)
    io.write_manifest(out, man)
    try:
        window = (0.0, min(3.0 / spec.a, max_lag))
        fit = autocorr.fit_decay_rate(emp, window)
        _say(args, f"empirical decay rate {fit.rate:.4g} +- {fit.stderr:.2g} (a = {spec.a:g})")
    except SVLabError as exc:
        _say(args, f"decay-rate fit skipped: {type(exc).__name__}: {exc}")
    return EXIT_OK


def cmd_verify(args, values, out: Path) -> int:
    seed = int(values.get("seed", verification.DEFAULT_SEED))
    threads = _threads(values)
    if args.suite == "acceptance":
        which = None
        if args.criteria:
            try:
                which = {int(c) for c in args.criteria.split(",")}
            except ValueError as exc:
                raise UsageError(f"bad --criteria {args.criteria!r}") from exc
        spec = None
        checks = verification.run_acceptance(seed, threads, which)
        params = {"suite": "acceptance", "criteria": sorted(which) if which else "all"}
    else:
        spec = resolve_spec(values)
        cfg = _sim_config(spec, values)
        checks = verification.model_suite(spec, seed, threads, n_paths=cfg.n_paths,
                                          t_end=cfg.t_end, dt=cfg.dt)
        params = {"suite": "model", "paths": cfg.n_paths, "t_end": cfg.t_end, "dt": cfg.dt}
    man = io.RunManifest("verify", spec, params, seed, str(args.out))
    io.write_csv(out / "verify.csv", verification.CHECK_COLUMNS, (c.row() for c in checks), man)
    io.write_manifest(out, man)
    for c in checks:
        _say(args, c.line())
    ok = all(c.passed for c in checks)
    _say(args, f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "simulate": cmd_simulate, "moments": cmd_moments, "stationary": cmd_stationary,
    "short-time": cmd_short_time, "acf": cmd_acf, "verify": cmd_verify,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        values = _merged(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, values, out)
    except UsageError as exc:
        print(f"usage error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SVLabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
