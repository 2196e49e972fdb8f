"""Command-line entry point: ``carbonscope <subcommand> --scenario FILE ...``.

Exit codes: 0 success, 2 configuration error, 3 validation outside tolerance.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import analysis, oracle, scenario
from .breakdown import COMPONENT_FIELDS, CfpBreakdown
from .deployment import AgingModel, aging_integral
from .params import EXPECTED
from .platform import total_cfp

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 2, 3
SUBCOMMANDS = ("estimate", "compare", "sweep", "heatmap", "prob", "validate")


class ConfigError(Exception):
    """Bad command-line input that argparse cannot catch."""


# --------------------------------------------------------------------------
# industry validation


@dataclass(frozen=True)
class Target:
    metric: str
    published: float
    tolerance: float
    relative: bool
    label: str

    def delta(self, value: float) -> float:
        return (value - self.published) / self.published if self.relative else value - self.published

    def passes(self, value: float) -> bool:
        return bool(abs(self.delta(value)) <= self.tolerance)


VALIDATION_CASES = {
    "tpu_v4": ("industry_tpu", (
        Target("embodied_kg", 172.0, 0.15, True, "embodied per device (kg CO2-eq)"),
        Target("embodied_share", 0.22, 0.05, False, "embodied share of total"),
    )),
    "h100": ("industry_h100", (
        Target("embodied_kg", 109.0, 0.15, True, "embodied per GPU (kg CO2-eq)"),
    )),
}


def industry_metrics(sf: scenario.ScenarioFile) -> dict:
    """Per-device embodied carbon over the whole scenario and its share of the total."""
    spec = sf.platforms[0]
    b = total_cfp(spec, sf.scenario, EXPECTED)
    return {"platform": spec.name, "embodied_kg": b.embodied / sf.scenario.n_vol,
            "operational_kg": b.operational / sf.scenario.n_vol,
            "embodied_share": b.embodied / b.total}


def validate_case(case: str) -> tuple[dict, list[tuple[Target, float, bool]]]:
    name, targets = VALIDATION_CASES[case]
    metrics = industry_metrics(scenario.load_scenario(name))
    return metrics, [(t, metrics[t.metric], t.passes(metrics[t.metric])) for t in targets]


# --------------------------------------------------------------------------
# helpers


def _load(args) -> scenario.ScenarioFile:
    return scenario.load_scenario(args.scenario, args.set or ())


def _seed(args, sf) -> int:
    return sf.analysis.seed if args.seed is None else args.seed


def _n_samples(args, sf) -> int:
    n = sf.analysis.n_samples if args.n_samples is None else args.n_samples
    if n < 1:
        raise ConfigError("--n-samples must be >= 1")
    return n


def _mode(args, sf) -> str:
    return sf.analysis.mode if args.mode is None else args.mode


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(args, default: scenario.GridSpec | None, prefix: str = "") -> scenario.GridSpec:
    """Grid from --grid / --from/--to/--steps/--scale, falling back to the file's analysis block."""
    var = getattr(args, f"{prefix}var") or (default.variable if default else None)
    if var is None:
        raise ConfigError(f"--{prefix.replace('_', '-')}var is required (no grid in the scenario file)")
    explicit = getattr(args, f"{prefix}grid")
    start, stop = getattr(args, f"{prefix}from"), getattr(args, f"{prefix}to")
    if explicit:
        try:
            values = tuple(float(v) for v in explicit.split(","))
        except ValueError:
            raise ConfigError(f"--{prefix.replace('_', '-')}grid must be comma-separated numbers") from None
        return scenario.GridSpec(var, values)
    if start is None and stop is None and default is not None and default.variable == var:
        return default
    if start is None or stop is None:
        raise ConfigError(f"--{prefix.replace('_', '-')}from and --{prefix.replace('_', '-')}to are required")
    steps = getattr(args, f"{prefix}steps")
    scale = getattr(args, f"{prefix}scale") or ("log" if var == "n_vol" else "linear")
    return scenario.GridSpec(var, scenario.make_grid(var, start, stop, steps, scale, path=f"--{prefix}grid"))


def format_breakdown(name: str, b: CfpBreakdown) -> str:
    total = float(b.total)
    lines = [f"{name}", f"  {'component':<16}{'kg CO2-eq':>16}{'share':>9}"]
    for f in COMPONENT_FIELDS:
        v = float(getattr(b, f))
        lines.append(f"  {f:<16}{v:>16.6g}{v / total:>9.1%}")
    lines.append(f"  {'embodied':<16}{float(b.embodied):>16.6g}{float(b.embodied) / total:>9.1%}")
    lines.append(f"  {'total':<16}{total:>16.6g}")
    return "\n".join(lines)


def _breakdowns(sf, specs, mode, n_samples, seed) -> dict:
    if mode == "expected":
        return {s.name: (total_cfp(s, sf.scenario, EXPECTED), None) for s in specs}
    est = analysis.monte_carlo(specs, sf.scenario, n_samples, seed)
    return {name: (e.mean, e) for name, e in est.items()}


def _estimate_json(b: CfpBreakdown, est) -> dict:
    out = {k: float(v) for k, v in b.as_dict().items()}
    if est is not None:
        out["stddev_total"] = est.stddev_total
        out["quantiles"] = {str(q): v for q, v in est.quantiles.items()}
        out["n_samples"] = est.n_samples
    return out


def _write_meta(path: Path, args, sf, seed, mode, **extra) -> None:
    analysis.write_sidecar(path, seed, sf.config_hash, mode, scenario=str(args.scenario),
                           overrides=list(args.set or ()), **extra)


# --------------------------------------------------------------------------
# subcommands


def cmd_estimate(args) -> int:
    sf = _load(args)
    mode, seed = _mode(args, sf), _seed(args, sf)
    specs = [sf.platform(args.platform)] if args.platform else list(sf.platforms)
    results = _breakdowns(sf, specs, mode, _n_samples(args, sf), seed)
    if args.format == "json":
        payload = {"mode": mode, "seed": seed, "config_hash": sf.config_hash,
                   "platforms": {n: _estimate_json(b, e) for n, (b, e) in results.items()}}
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    print(f"mode={mode} seed={seed}" if mode == "mc" else f"mode={mode}")
    for name, (b, est) in results.items():
        print(format_breakdown(name, b))
        if est is not None:
            qs = ", ".join(f"q{int(q * 100)}={v:.6g}" for q, v in est.quantiles.items())
            print(f"  stddev(total)={est.stddev_total:.6g}  {qs}")
    return EXIT_OK


def cmd_compare(args) -> int:
    sf = _load(args)
    mode, seed, n = _mode(args, sf), _seed(args, sf), _n_samples(args, sf)
    a, b = sf.pair()
    results = _breakdowns(sf, [a, b], mode, n, seed)
    ta, tb = float(results[a.name][0].total), float(results[b.name][0].total)
    grid = sf.analysis.sweep or scenario.GridSpec(
        "n_app", tuple(float(v) for v in range(1, max(8, sf.scenario.n_app) + 1)))
    rep = analysis.sweep_1d(a, b, sf.scenario, grid.variable, grid.grid, mode, n, seed)
    lower = a.name if ta < tb else b.name if tb < ta else "neither"
    verdict = {
        "ratio_a_over_b": ta / tb,
        "lower": lower,
        "crossings": [{"x": c.interpolated_x, "direction": c.direction} for c in rep.crossings],
        "variable": grid.variable,
    }
    if args.format == "json":
        payload = {"mode": mode, "platform_a": a.name, "platform_b": b.name,
                   "platforms": {k: _estimate_json(v, e) for k, (v, e) in results.items()}, **verdict}
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    for name, (bd, _) in results.items():
        print(format_breakdown(name, bd))
    print(f"ratio {a.name}/{b.name} = {ta / tb:.4f}; lower carbon: {lower}")
    if rep.crossings:
        for c in rep.crossings:
            before, after = (a.name, b.name) if c.direction == analysis.AtoB else (b.name, a.name)
            print(f"crossover at {grid.variable}={c.interpolated_x:g}: {before} lower before, {after} after")
    else:
        print(f"no crossover for {grid.variable} in [{grid.grid[0]:g}, {grid.grid[-1]:g}]")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sf = _load(args)
    mode, seed, n = _mode(args, sf), _seed(args, sf), _n_samples(args, sf)
    g = _grid(args, sf.analysis.sweep)
    a, b = sf.pair()
    rep = analysis.sweep_1d(a, b, sf.scenario, g.variable, g.grid, mode, n, seed)
    out = _out_dir(args)
    if args.format == "json":
        data = {"variable": g.variable, "platform_a": a.name, "platform_b": b.name, "x": rep.grid,
                "cfp_a": rep.series_a, "cfp_b": rep.series_b, "ratio": rep.ratio,
                "crossings": [{"index": c.index, "x": c.interpolated_x, "direction": c.direction}
                              for c in rep.crossings]}
        (out / "sweep.json").write_text(json.dumps(data, indent=2) + "\n")
    else:
        analysis.write_sweep_csv(rep, out / "sweep.csv")
    _write_meta(out / "sweep.meta.json", args, sf, seed, mode, variable=g.variable,
                platform_a=a.name, platform_b=b.name, n_samples=n if mode == "mc" else None)
    for c in rep.crossings:
        print(f"{g.variable} crossing at {c.interpolated_x:g} ({c.direction})")
    if not rep.crossings:
        print(f"no {g.variable} crossing")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    sf = _load(args)
    mode, seed, n = _mode(args, sf), _seed(args, sf), _n_samples(args, sf)
    dx, dy = sf.analysis.heatmap or (None, None)
    gx, gy = _grid(args, dx, "x_"), _grid(args, dy, "y_")
    a, b = sf.pair()
    hm = analysis.sweep_2d(a, b, sf.scenario, gx.variable, gy.variable, gx.grid, gy.grid, mode, n, seed)
    out = _out_dir(args)
    if args.format == "json":
        data = {"x_name": hm.x_name, "y_name": hm.y_name, "x": hm.x_grid, "y": hm.y_grid,
                "ratio": hm.ratio.tolist(), "locus": [list(p) for p in hm.locus], "degenerate": hm.degenerate}
        (out / "heatmap.json").write_text(json.dumps(data, indent=2) + "\n")
    else:
        analysis.write_heatmap_csv(hm, out / "heatmap.csv", out / "locus.csv")
    _write_meta(out / "heatmap.meta.json", args, sf, seed, mode, x=gx.variable, y=gy.variable,
                platform_a=a.name, platform_b=b.name, degenerate=hm.degenerate,
                n_samples=n if mode == "mc" else None)
    print(f"{len(hm.y_grid)}x{len(hm.x_grid)} ratio grid, {len(hm.locus)} locus points"
          + (" (degenerate: ratio identically 1)" if hm.degenerate else ""))
    return EXIT_OK


def cmd_prob(args) -> int:
    sf = _load(args)
    seed, n = _seed(args, sf), _n_samples(args, sf)
    g = _grid(args, sf.analysis.prob or sf.analysis.sweep)
    a, b = sf.pair()
    # probability that the second platform (usually the FPGA) is the lower-carbon one
    curve = analysis.prob_curve(b, a, sf.scenario, g.variable, g.grid, n, seed)
    out = _out_dir(args)
    if args.format == "json":
        data = {"variable": g.variable, "platform_a": b.name, "platform_b": a.name,
                "x": [x for x, _ in curve], "p_a_less_b": [p for _, p in curve]}
        (out / "prob.json").write_text(json.dumps(data, indent=2) + "\n")
    else:
        analysis.write_prob_csv(curve, out / "prob.csv")
    _write_meta(out / "prob.meta.json", args, sf, seed, "mc", variable=g.variable,
                platform_a=b.name, platform_b=a.name, n_samples=n)
    for x, p in curve:
        print(f"{g.variable}={x:g}  P({b.name} < {a.name}) = {p:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cases = list(VALIDATION_CASES) if args.case == "all" else [args.case]
    ok = True
    report = {}
    for case in cases:
        metrics, checks = validate_case(case)
        plain = {k: (v if isinstance(v, str) else float(v)) for k, v in metrics.items()}
        report[case] = {"metrics": plain, "checks": [
            {"metric": t.metric, "value": v, "published": t.published, "delta": t.delta(v),
             "tolerance": t.tolerance, "relative": t.relative, "pass": p} for t, v, p in checks]}
        ok &= all(p for _, _, p in checks)
        if args.format != "json":
            for t, v, p in checks:
                unit = f"{t.delta(v):+.1%}" if t.relative else f"{t.delta(v) * 100:+.1f} points"
                print(f"{'PASS' if p else 'FAIL'} {case}: {t.label} = {v:.4g} vs published "
                      f"{t.published:g} ({unit}; tolerance {t.tolerance:g}{' rel' if t.relative else ''})")
    if args.format == "json":
        print(json.dumps(report, indent=2))
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_oracle(args) -> int:
    if args.check == "replacements":
        res = oracle.simulate_replacements(args.t, args.rate, args.trials, args.seed)
        closed = args.rate * args.t  # Poisson mean, per device
        z = (res.mean_replacements - closed) / res.stderr if res.stderr > 0 else 0.0
        print(f"simulated {res.mean_replacements:.6f} +- {res.stderr:.6f}; closed form {closed:.6f}; z={z:.2f}")
        return EXIT_OK if abs(z) <= 3 else EXIT_VALIDATION
    model = AgingModel.power_law(args.k, args.n)
    brute = oracle.integrate_energy_bruteforce(model, args.t, args.steps)
    simpson = aging_integral(model, args.t)
    exact = float(model.antiderivative(args.t))
    rel = abs(simpson - exact) / exact
    print(f"simpson {simpson:.12g}; trapezoid {brute:.12g}; analytic {exact:.12g}; rel err {rel:.2e}")
    return EXIT_OK if rel <= 1e-6 else EXIT_VALIDATION


# --------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser, need_scenario: bool = True) -> None:
    if need_scenario:
        p.add_argument("--scenario", required=True,
                       help="scenario JSON file or built-in name (e.g. dnn, rnn_ee, tpu_v4)")
        p.add_argument("--set", action="append", metavar="PATH=VALUE",
                       help="override a scenario key, e.g. scenario.n_vol=5e5 (repeatable)")
        p.add_argument("--seed", type=int, help="random seed (overrides the file; default 0)")
        p.add_argument("--n-samples", type=int, help="Monte Carlo samples (default from file or 10000)")
        p.add_argument("--mode", choices=("expected", "mc"), help="evaluation mode")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="output format; for estimate/compare/validate json goes to stdout")


def _add_grid(p: argparse.ArgumentParser, prefix: str = "") -> None:
    flag = prefix.replace("_", "-")
    p.add_argument(f"--{flag}var", dest=f"{prefix}var", choices=analysis.SWEEP_VARIABLES)
    p.add_argument(f"--{flag}from", dest=f"{prefix}from", type=float)
    p.add_argument(f"--{flag}to", dest=f"{prefix}to", type=float)
    p.add_argument(f"--{flag}steps", dest=f"{prefix}steps", type=int)
    p.add_argument(f"--{flag}scale", dest=f"{prefix}scale", choices=("linear", "log"))
    p.add_argument(f"--{flag}grid", dest=f"{prefix}grid", help="explicit comma-separated grid")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carbonscope",
                                 description="Lifecycle carbon estimates and platform crossover analysis.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("estimate", help="carbon breakdown per platform")
    _add_common(p)
    p.add_argument("--platform", help="only this platform")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="two platforms side by side with crossover verdict")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="1-D sweep with crossover detection (CSV + sidecar)")
    _add_common(p)
    _add_grid(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("heatmap", help="2-D ratio grid with ratio=1 locus (CSV + sidecar)")
    _add_common(p)
    _add_grid(p, "x_")
    _add_grid(p, "y_")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("prob", help="probability the second platform is lower-carbon (CSV + sidecar)")
    _add_common(p)
    _add_grid(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("validate", help="industry validation against published figures")
    p.add_argument("--case", choices=(*VALIDATION_CASES, "all"), default="all")
    _add_common(p, need_scenario=False)
    p.set_defaults(func=cmd_validate)

    # debugging aid, not listed in the help
    p = sub.add_parser("oracle")
    p.add_argument("check", choices=("replacements", "aging"))
    p.add_argument("--t", type=float, default=2.0, help="lifetime in years")
    p.add_argument("--rate", type=float, default=0.3, help="total EOL rate per year")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=float, default=0.05)
    p.add_argument("--n", type=float, default=0.2)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (scenario.ScenarioError, ConfigError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"carbonscope: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
