"""Fit the baseline absolutes of the shipped testcase configs.

Only area/power ratios are published for the FPGA testcases, so the absolute die
area, power and gate counts of each baseline are chosen here to reproduce the
reported crossover behaviour.  Results are written to ``data/calibration``.

    python3 scripts/calibrate.py            # fit and write every testcase
    python3 scripts/calibrate.py dnn rnn_ee # selected testcases
    python3 scripts/calibrate.py --check    # evaluate the shipped files only
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
from scipy.optimize import minimize

from carbonscope import analysis, scenario
from carbonscope.params import EXPECTED
from carbonscope.platform import total_cfp

CAL_DIR = scenario.DATA_DIR / "calibration"
APP_SIZE = 1e6
FIT_STEPS = 64  # Simpson steps while fitting; the report re-evaluates at full precision
CI_USE = {"kind": "kde", "samples_file": "../defaults/ci_us.csv", "bandwidth": "silverman"}
RECONFIG = {"t_sw_dev_mo": 1.5, "t_compile_mo": 1.0, "t_reg_mo": 0.8, "t_app_config_hr": 0.01,
            "dev_system_power_w": 200,
            "dev_carbon_intensity": {"kind": "kde", "samples_file": "../defaults/ci_us.csv",
                                     "bandwidth": "silverman"}}

# name: baseline kind, ratios (FPGA area, FPGA power), f_use, description, nominal baseline
CASES = {
    "dnn": ("ASIC", (4.0, 3.0), 0.2, "DNN inference"),
    "imgproc": ("ASIC", (7.42, 1.25), 0.2, "image processing"),
    "crypto": ("ASIC", (1.0, 1.0), 0.2, "cryptography"),
    "rnn_hp": ("GPU", (4.39, 1.02), 0.5, "RNN, high-performance deployment"),
    "rnn_ee": ("GPU", (3.17, 4.16), 0.5, "RNN, energy-efficient deployment"),
    "lhcb": ("GPU", (0.377, 0.489), 0.5, "LHCb trigger"),
    "randgen": ("CPU", (2.8, 0.005), 0.2, "pseudo-random number generation"),
    "llama2": ("CPU", (0.78, 0.086), 0.2, "Llama 2 inference"),
    "fir": ("CPU", (2.38, 0.011), 0.2, "FIR filter"),
}
NOMINAL = {"ASIC": (50.0, 2.0), "GPU": (300.0, 20.0), "CPU": (150.0, 20.0)}
FILE_NAMES = {k: f"{k}_vs_{v[0].lower()}.json" for k, v in CASES.items()}


def make_raw(case: str, area: float, power: float, gates: float, fpga_gates: float) -> dict:
    kind, (ar, pr), f_use, desc = CASES[case]
    base = kind
    sc = {"n_app": 5, "t_i_yr": 2.0, "n_vol": 1e6, "f_use": f_use, "app_size_gates": APP_SIZE,
          "operation": {"carbon_intensity_use": CI_USE, "aging": {"form": "power_law", "k": 0.05, "n": 0.2}},
          "reconfig": RECONFIG}
    if kind == "GPU":
        sc["apps_per_device"] = 2
    analysis_section = {"mode": "expected", "n_samples": 10000, "seed": 0,
                        "platform_a": base, "platform_b": "FPGA",
                        "sweep": {"variable": "n_app", "from": 1, "to": 32 if kind == "GPU" else 8},
                        "prob": {"variable": "n_app", "from": 1, "to": 8}}
    if case == "imgproc":
        analysis_section["sweep"] = {"variable": "n_vol", "from": 1e3, "to": 1e7, "steps": 81, "scale": "log"}
    if kind == "ASIC":
        analysis_section["heatmap"] = {"x": {"variable": "n_app", "from": 1, "to": 8},
                                       "y": {"variable": "t_i", "from": 0.2, "to": 2.4, "steps": 12}}
    return {
        "version": "1",
        "description": f"{desc}: FPGA vs iso-performance {kind}; baseline absolutes are calibration data",
        "platforms": [
            {"name": base, "extends": f"../defaults/{kind.lower()}_10nm.json",
             "die_area_mm2": round(area, 4), "p_use_w": round(power, 6),
             "n_gates": float(f"{gates:.6g}"), "cores_capacity_gates": float(f"{gates:.6g}")},
            {"name": "FPGA", "extends": "../defaults/fpga_10nm.json",
             "from_baseline": {"platform": base, "area_ratio": ar, "power_ratio": pr},
             "n_gates": float(f"{fpga_gates:.6g}"), "cores_capacity_gates": float(f"{fpga_gates:.6g}")},
        ],
        "scenario": sc,
        "analysis": analysis_section,
    }


def build(raw: dict):
    return scenario.build(raw, CAL_DIR)


def ratio_at(sf, **changes) -> float:
    """CFP(baseline) / CFP(FPGA) in expected mode."""
    a, b = sf.pair()
    sc = sf.scenario.with_changes(**changes)
    return float(total_cfp(a, sc, EXPECTED, FIT_STEPS).total / total_cfp(b, sc, EXPECTED, FIT_STEPS).total)


def series(spec, sc, n_max: int, k: int) -> np.ndarray:
    """Totals for n_app = 1..n_max under a scalar T_i, built from per-generation pieces."""
    from carbonscope import embodied
    from carbonscope.deployment import deployment_cfp
    from carbonscope.platform import operation_profile, reconfig_profile

    if spec.is_asic:
        k = 1
    elif spec.apps_per_device is not None:
        k = spec.apps_per_device
    elif spec.kind != "GPU":
        k = n_max  # one device serves every application
    t = float(sc.t_i_yr)
    nproc = embodied.n_proc(sc.app_size_gates, spec.cores_capacity_gates)
    op, rc = operation_profile(spec, sc), reconfig_profile(spec, sc)
    emb = [embodied.embodied_cfp(spec, sc.n_vol, m * t, EXPECTED, nproc).total for m in range(1, k + 1)]
    dep = np.cumsum([deployment_cfp(op, rc, sc.n_vol, 1, t, EXPECTED, nproc, t_start=j * t,
                                    n_steps=FIT_STEPS).total for j in range(k)])
    gen = [emb[m - 1] + dep[m - 1] for m in range(1, k + 1)]
    return np.array([(n // k) * gen[-1] + (gen[n % k - 1] if n % k else 0.0) for n in range(1, n_max + 1)])


def ratio_series(sf, k: int, n_max: int = 32) -> np.ndarray:
    a, b = sf.pair()
    sc = sf.scenario
    return series(a, sc, n_max, k) / series(b, sc, n_max, k)


def hinge(value: float, lo: float | None = None, hi: float | None = None) -> float:
    """Squared log-distance of ``value`` outside [lo, hi]."""
    v = math.log(value)
    out = 0.0
    if lo is not None and v < math.log(lo):
        out += (math.log(lo) - v) ** 2
    if hi is not None and v > math.log(hi):
        out += (v - math.log(hi)) ** 2
    return out


# ---- objectives: ratio r = baseline / FPGA; r > 1 means the FPGA is lower

def objective(case: str, sf) -> float:
    m = 0.03
    if case == "dnn":
        # FPGA/ASIC = 1/r: +150 % at one app, -44 % at five, flip between 2 and 3
        return (hinge(1 / ratio_at(sf, n_app=1), 2.45, 2.55) + hinge(1 / ratio_at(sf, n_app=5), 0.55, 0.57)
                + hinge(ratio_at(sf, n_app=2), hi=1 - 0.1) + hinge(ratio_at(sf, n_app=3), lo=1 + 0.05))
    if case == "imgproc":
        return (hinge(ratio_at(sf, n_app=5, n_vol=9e5), 0.995, 1.005)
                + hinge(ratio_at(sf, n_app=5, n_vol=1e6), lo=1 - 0.04, hi=1 - 0.01)
                + hinge(ratio_at(sf, n_app=6, n_vol=1e6), lo=1.04)
                + hinge(ratio_at(sf, n_app=5, n_vol=1e3), lo=1.5))
    if case == "crypto":
        return sum(hinge(ratio_at(sf, n_app=n), lo=1.05) for n in (1, 2, 8))
    if case in ("rnn_hp", "rnn_ee"):
        targets = {"rnn_hp": {2: 5, 3: None, 4: None, 5: 11}, "rnn_ee": {2: 13, 3: 22, 4: 29, 5: 0}}[case]
        loss = 0.0
        for k, n_star in targets.items():
            if n_star is None:
                continue
            for n, r in enumerate(ratio_series(sf, k), start=1):
                if n_star == 0 or n < n_star:
                    loss += hinge(r, hi=1 - m)
                elif n < n_star + 4:
                    loss += hinge(r, lo=1 + m)
        return loss
    if case == "lhcb":
        return sum(hinge(ratio_at(sf, n_app=n, apps_per_device=k), lo=1.1)
                   for k in (2, 5) for n in (1, 2, 5))
    if case == "randgen":
        return (hinge(ratio_at(sf, n_app=1), hi=1 - 0.08) + hinge(ratio_at(sf, n_app=2), lo=1 + 0.08)
                + hinge(ratio_at(sf, t_i_yr=0.6), 0.99, 1.01)
                + hinge(ratio_at(sf, t_i_yr=0.4), hi=0.95) + hinge(ratio_at(sf, t_i_yr=0.8), lo=1.05))
    if case in ("llama2", "fir"):
        return sum(hinge(ratio_at(sf, n_app=n, t_i_yr=t), lo=1.1) for n in (1, 5) for t in (0.2, 2.0))
    raise KeyError(case)


def report(case: str, sf) -> dict:
    a, b = sf.pair()
    out = {}
    if CASES[case][0] == "GPU":
        for k in (2, 3, 4, 5):
            rep = analysis.sweep_1d(a, b, sf.scenario.with_changes(apps_per_device=k), "n_app",
                                    range(1, 33))
            out[f"k={k}"] = [(c.interpolated_x, c.direction) for c in rep.crossings]
        return out
    rep = analysis.sweep_1d(a, b, sf.scenario, "n_app", range(1, 9))
    out["n_app crossings"] = [(c.interpolated_x, c.direction) for c in rep.crossings]
    out["first FPGA-lower n_app"] = rep.first_b_lower()
    out["FPGA/base n=1"] = 1 / ratio_at(sf, n_app=1)
    out["FPGA/base n=5"] = 1 / ratio_at(sf, n_app=5)
    if case == "imgproc":
        grid = np.geomspace(1e3, 1e7, 81)
        rep = analysis.sweep_1d(a, b, sf.scenario, "n_vol", grid)
        out["n_vol crossings"] = [(c.interpolated_x, c.direction) for c in rep.crossings]
    if CASES[case][0] == "CPU":
        rep = analysis.sweep_1d(a, b, sf.scenario, "t_i", np.round(np.arange(0.2, 2.41, 0.1), 10))
        out["t_i crossings"] = [(c.interpolated_x, c.direction) for c in rep.crossings]
    return out


def fit(case: str, start=None, restarts: int = 6, seed: int = 0):
    kind = CASES[case][0]
    area0, power0 = NOMINAL[kind]
    x_nom = np.log([area0, power0, 1e10, 2e10])

    def loss(x):
        area, power, gates, fgates = np.exp(x)
        if gates < APP_SIZE or fgates < APP_SIZE or area < 1 or area > 2000:
            return 1e6
        sf = build(make_raw(case, area, power, gates, fgates))
        return 100.0 * objective(case, sf) + 1e-4 * float(np.sum((x - x_nom) ** 2))

    rng = np.random.default_rng(seed)
    best = None
    starts = [x_nom if start is None else np.log(start)]
    starts += [x_nom + rng.normal(0, 1.5, 4) for _ in range(restarts)]
    for x0 in starts:
        res = minimize(loss, x0, method="Nelder-Mead",
                       options={"maxiter": 3000, "xatol": 1e-4, "fatol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < 1e-2:
            break
    return np.exp(best.x), best.fun


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("cases", nargs="*", default=list(CASES))
    ap.add_argument("--check", action="store_true", help="evaluate the shipped files without fitting")
    args = ap.parse_args(argv)
    for case in args.cases:
        path = CAL_DIR / FILE_NAMES[case]
        if args.check:
            sf = scenario.load_scenario(path)
            print(case, json.dumps(report(case, sf), default=str))
            continue
        theta, val = fit(case)
        raw = make_raw(case, *theta)
        sf = build(raw)
        print(f"{case}: loss={val:.3g} area={theta[0]:.4g} mm2 power={theta[1]:.4g} W "
              f"gates={theta[2]:.4g} fpga_gates={theta[3]:.4g}", file=sys.stderr)
        print(case, json.dumps(report(case, sf), default=str))
        path.write_text(json.dumps(raw, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
