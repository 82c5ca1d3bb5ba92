"""Command-line front door: reproducible experiments emitting CSV + JSON.

Every run writes into --out:
  * one or more CSV data files (schemas recorded in the manifest),
  * report.json with the scenario's results,
  * manifest.json (deterministic: config, config hash, versions, seed),
  * timing.json (wall time; the one non-deterministic output).

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 internal invariant violation.  Identical (config, seed) reproduce the
CSV/JSON outputs byte for byte on a given platform.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import calibrate_constants
from .core import ModelParams, forward_transform, inverse_transform, make_grid
from .dispersion import roots_sweep, threshold_N0, threshold_eps0
from .errors import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DiagnosticError,
    JmgtError,
)
from .kernels import check_large_freq_bounds, check_small_freq_bounds, kernel_table
from .propagator import (
    DECAY_HORIZON,
    band_profile,
    decay_grid_defaults,
    verify_decay_prop_4_3,
    verify_decay_prop_4_4,
    verify_prop_3_2,
)
from .solver import (
    MildSolverConfig,
    picard_solve,
    scaled_large_data_pipeline,
    verify_theorem_2_2_decay,
)
from .spaces import (
    box_l2_profile,
    box_labels,
    check_algebra_prop_3_6,
    check_data_estimates_prop_4_8,
    check_embedding,
    check_gns,
    check_leibniz,
    check_nonlinearity_estimates_prop_4_9,
    decomposition_e_norm,
    e_norm,
    random_band_limited,
    sobolev_norm,
)

SCENARIOS = (
    "roots",
    "kernels",
    "linear-decay",
    "simulate",
    "nonlinear-decay",
    "norms",
    "inequalities",
    "scaling-pipeline",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_INTERNAL = 4


# ---------------------------------------------------------------------------
# config plumbing

_PARAM_KEYS = {"tau", "delta", "b_over_a", "sigma", "lam"}
_GRID_KEYS = {"n", "N", "L"}


def _load_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except Exception as exc:  # noqa: BLE001 - single funnel to exit 2
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _merge_config(file_cfg, flag_cfg, allowed):
    """Flags win over file values; unknown keys are rejected (strict mode)."""
    merged = dict(file_cfg)
    unknown = set(merged) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k, v in flag_cfg.items():
        if v is not None:
            merged[k] = v
    for k, v in allowed.items():
        merged.setdefault(k, v)
    return merged


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _config_hash(cfg) -> str:
    return hashlib.sha256(_canonical_json(cfg).encode()).hexdigest()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return repr(complex(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _emit(outdir, scenario, cfg, report, csv_files, started):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(
        json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    )
    manifest = {
        "scenario": scenario,
        "config": cfg,
        "config_hash": _config_hash(cfg),
        "package_version": __version__,
        "csv_schema": {name: header for name, header, _ in csv_files},
        "outputs": sorted([name for name, _, _ in csv_files] + ["report.json"]),
        "seed": cfg.get("seed"),
        "timing_file": "timing.json",
    }
    (outdir / "manifest.json").write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n"
    )
    for name, header, rows in csv_files:
        _write_csv(outdir / name, header, rows)
    (outdir / "timing.json").write_text(
        json.dumps({"wall_time_s": time.monotonic() - started}) + "\n"
    )


def _params_from(cfg) -> ModelParams:
    return ModelParams(
        tau=float(cfg["tau"]), delta=float(cfg["delta"]),
        b_over_a=float(cfg["b_over_a"]), sigma=float(cfg["sigma"]),
        lam=float(cfg.get("lam", 1.0)),
    )


def _grid_from(cfg):
    return make_grid(int(cfg["n"]), int(cfg["N"]), float(cfg["L"]))


def _parse_sweep(spec):
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ConfigError(f"sweep must be lo:hi:count, got {spec!r}") from exc
    if not (0 < lo < hi and count >= 2):
        raise ConfigError(f"invalid sweep range {spec!r}")
    return lo, hi, count


# ---------------------------------------------------------------------------
# scenarios


def run_roots(cfg, outdir, started):
    params = _params_from(cfg)
    lo, hi, count = _parse_sweep(cfg["sweep"])
    xi = np.geomspace(lo, hi, count)
    roots, regimes, disc = roots_sweep(xi, params)
    rows = [
        (
            xi[i],
            roots[i, 0].real, roots[i, 0].imag,
            roots[i, 1].real, roots[i, 1].imag,
            roots[i, 2].real, roots[i, 2].imag,
            disc[i], regimes[i],
        )
        for i in range(count)
    ]
    header = [
        "xi_mag", "mu1_re", "mu1_im", "mu2_re", "mu2_im",
        "mu3_re", "mu3_im", "discriminant", "regime",
    ]
    report = {
        "scenario": "roots",
        "rows": count,
        "N0": threshold_N0(params),
        "eps0": threshold_eps0(params),
        "spectral_abscissa_max": float(np.max(roots.real)),
    }
    _emit(outdir, "roots", cfg, report, [("roots.csv", header, rows)], started)
    return EXIT_OK


def run_kernels(cfg, outdir, started):
    params = _params_from(cfg)
    lo, hi, count = _parse_sweep(cfg["xi_sweep"])
    xi = np.geomspace(lo, hi, count)
    ts = np.geomspace(cfg["tmin"], cfg["tmax"], int(cfg["tcount"]))
    tab = kernel_table(ts, xi, params)
    rows = []
    for i, t in enumerate(ts):
        for j, x in enumerate(xi):
            rows.append(
                (t, x,
                 tab["k0"][i, j].real, tab["k1"][i, j].real, tab["k2"][i, j].real,
                 tab["dk0"][i, j].real, tab["dk1"][i, j].real, tab["dk2"][i, j].real,
                 tab["ddk2"][i, j].real,
                 "ode" if tab["ode_fallback"][j] else "eigen")
            )
    header = ["t", "xi_mag", "k0", "k1", "k2", "dk0", "dk1", "dk2", "ddk2", "method"]
    large = check_large_freq_bounds(params)
    small = check_small_freq_bounds(params.with_lam(1.0))
    report = {
        "scenario": "kernels",
        "large_freq_bounds": large.as_dict(),
        "small_freq_bounds": small.as_dict(),
    }
    _emit(outdir, "kernels", cfg, report, [("kernels.csv", header, rows)], started)
    return EXIT_OK


def run_linear_decay(cfg, outdir, started):
    params = _params_from(cfg)
    gd = decay_grid_defaults(int(cfg["n"]))
    grid = make_grid(int(cfg["n"]), int(cfg.get("N") or gd["N"]), float(cfg.get("L") or gd["L"]))
    horizon = float(cfg["horizon"])
    m, s = float(cfg["m"]), float(cfg["s"])
    rep = verify_decay_prop_4_3(params, m, s, grid, horizon=horizon)
    report = {"scenario": "linear-decay", "prop_4_3": rep.as_dict()}
    csvs = []
    if cfg.get("inhomogeneous"):
        reps = verify_decay_prop_4_4(params, m, s, grid, horizon=horizon)
        report["prop_4_4"] = [r.as_dict() for r in reps]
    # time series of the fitted norm for the fixed-profile branch
    if m == 1.0:
        from .propagator import _dense_norm_history

        prof = band_profile(grid, 0.5)
        data = tuple(w * prof for w in (0.25, 1.0, 0.25))
        t_hist, nsq = _dense_norm_history(data, params, grid, s + params.sigma, horizon, 200)
        csvs.append(
            ("decay.csv", ["t", "norm"], list(zip(t_hist, np.sqrt(nsq))))
        )
    _emit(outdir, "linear-decay", cfg, report, csvs, started)
    if not rep.fitted.conclusive:
        return EXIT_NONCONVERGED
    return EXIT_OK


def _gaussian_data(grid, rng, amplitude, width, hermitian=False):
    out = []
    mag = grid.magnitudes
    for _ in range(3):
        f = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        fh = amplitude * f * np.exp(-(mag**2) / (2.0 * width**2)) * grid.dealias_mask
        fh[(0,) * grid.n] = 0.0
        if hermitian:
            fh = 0.5 * (fh + np.conj(fh[grid.negation_index()]))
        out.append(fh)
    return tuple(out)


def run_simulate(cfg, outdir, started):
    params = _params_from(cfg)
    grid = _grid_from(cfg)
    rng = np.random.default_rng(int(cfg["seed"]))
    data = _gaussian_data(grid, rng, float(cfg["amplitude"]), float(cfg["width"]))
    config = MildSolverConfig(
        horizon=float(cfg["horizon"]), samples=int(cfg["samples"]),
        picard_tol=float(cfg["picard_tol"]),
        representation=str(cfg["representation"]),
    )
    sol = picard_solve(data, params, config, grid)
    rows = []
    for i, t in enumerate(sol.t_samples):
        rows.append(
            (t,
             sobolev_norm(sol.dpsi[i], 0.0, grid),
             sobolev_norm(sol.dpsi[i], params.sigma, grid))
        )
    header = ["t", "dpsi_l2", "dpsi_hdot_sigma"]
    report = {"scenario": "simulate", **sol.as_summary()}
    _emit(outdir, "simulate", cfg, report, [("timeseries.csv", header, rows)], started)
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def run_nonlinear_decay(cfg, outdir, started):
    params = _params_from(cfg)
    n = int(cfg["n"])
    grid = make_grid(n, int(cfg["N"]), float(cfg["L"]))
    rng = np.random.default_rng(int(cfg["seed"]))
    amp = float(cfg["amplitude"])
    prof = band_profile(grid, float(cfg["band"]))
    jitter = lambda: 1.0 + 0.05 * rng.standard_normal()
    u_data = tuple(amp * c * jitter() * prof for c in (0.25, 1.0, 0.25))
    v_data = tuple(0.6 * amp * c * jitter() * prof for c in (0.3, 1.0, 0.2))
    config = MildSolverConfig(
        horizon=float(cfg["horizon"]), samples=int(cfg["samples"]),
        picard_tol=float(cfg["picard_tol"]), representation="coupled_real",
    )
    rep = verify_theorem_2_2_decay(
        u_data, v_data, params, float(cfg["m1"]), float(cfg["m2"]),
        float(cfg["s"]), grid, config,
    )
    report = {"scenario": "nonlinear-decay", **rep.as_dict()}
    _emit(outdir, "nonlinear-decay", cfg, report, [], started)
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def run_norms(cfg, outdir, started):
    grid = _grid_from(cfg)
    rng = np.random.default_rng(int(cfg["seed"]))
    alpha, s = float(cfg["alpha"]), float(cfg["s"])
    f = random_band_limited(grid, rng)
    direct = e_norm(f, alpha, s, grid)
    decomp = decomposition_e_norm(f, alpha, s, grid)
    uniq, _, kmag = box_labels(grid)
    prof = box_l2_profile(f, grid)
    rows = [(kmag[i],) + tuple(uniq[i]) + (prof[i],) for i in range(len(uniq))]
    header = ["k_mag"] + [f"k{j}" for j in range(grid.n)] + ["box_l2"]
    report = {
        "scenario": "norms",
        "e_norm": direct,
        "decomposition_e_norm": decomp,
        "form_ratio": decomp / direct if direct else float("nan"),
        "l2": sobolev_norm(f, 0.0, grid),
        "sobolev_s": sobolev_norm(f, s, grid, homogeneous=False),
    }
    _emit(outdir, "norms", cfg, report, [("boxes.csv", header, rows)], started)
    return EXIT_OK


def _inequality_trial(grid, seed, alpha, s, sigma):
    rng = np.random.default_rng(seed)
    f = random_band_limited(grid, rng)
    g = random_band_limited(grid, rng)
    out = {}
    out["gns"] = check_gns(f, kappa=s / 2.0, s=s, p=2.0, p0=2.0, p1=2.0, grid=grid).ratio
    out["embedding"] = check_embedding(f, 0.0, s + sigma, grid).ratio
    out["leibniz"] = check_leibniz(f, g, s, 2.0, 4.0, 4.0, 4.0, 4.0, grid).ratio
    u1 = random_band_limited(grid, rng)
    v1 = random_band_limited(grid, rng)
    u1 = 0.5 * (u1 + np.conj(u1[grid.negation_index()]))
    v1 = 0.5 * (v1 + np.conj(v1[grid.negation_index()]))
    r48 = check_data_estimates_prop_4_8(u1, v1, s, sigma, 1.0, 1.0, grid)
    out["data_sq"] = r48[0].ratio
    out["data_cross"] = r48[1].ratio
    # octant product estimate with a two-profile time envelope
    n0 = threshold_N0(ModelParams(sigma=sigma))
    g1 = random_band_limited(grid, rng, octant_R=n0)
    g2 = random_band_limited(grid, rng, octant_R=n0)
    ts = np.linspace(0.0, 10.0, 33)
    env1 = np.exp(-0.3 * ts)
    env2 = 1.0 / (1.0 + ts)
    sl = (slice(None),) + (None,) * grid.n
    halg = check_algebra_prop_3_6(
        g1[None] * env1[sl], g2[None] * env2[sl], ts,
        alpha, max(s, grid.n / 2.0 - sigma), sigma, grid,
    )
    out["algebra_3_6"] = halg.ratio
    return out


def run_inequalities(cfg, outdir, started):
    grid = _grid_from(cfg)
    alpha, s, sigma = float(cfg["alpha"]), float(cfg["s"]), float(cfg["sigma"])
    trials = int(cfg["trials"])
    seed = int(cfg["seed"])
    threads = max(1, int(cfg.get("threads") or 1))
    seeds = [seed + 1000 * i for i in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda sd: _inequality_trial(grid, sd, alpha, s, sigma), seeds))
    else:
        results = [_inequality_trial(grid, sd, alpha, s, sigma) for sd in seeds]
    names = sorted(results[0])
    rows = [[seeds[i]] + [results[i][k] for k in names] for i in range(trials)]
    const = {k: max(r[k] for r in results) for k in names}
    report = {
        "scenario": "inequalities",
        "trials": trials,
        "empirical_constants": const,
        "finite": all(math.isfinite(v) for v in const.values()),
    }
    _emit(
        outdir, "inequalities", cfg, report,
        [("ratios.csv", ["seed"] + names, rows)], started,
    )
    return EXIT_OK


def run_scaling_pipeline(cfg, outdir, started):
    params = _params_from(cfg)
    grid = _grid_from(cfg)
    alpha, s = float(cfg["alpha"]), float(cfg["s"])
    rng = np.random.default_rng(int(cfg["seed"]))
    n0 = threshold_N0(params)
    data = tuple(
        float(cfg["scale"]) * random_band_limited(
            grid, rng, band=grid.dxi * grid.N // 8, octant_R=n0)
        for _ in range(3)
    )
    calib = calibrate_constants(params, grid, alpha, s, seed=int(cfg["seed"]), trials=6)
    config = MildSolverConfig(
        horizon=float(cfg["horizon"]), samples=int(cfg["samples"]),
        picard_tol=float(cfg["picard_tol"]),
    )
    rep = scaled_large_data_pipeline(data, alpha, s, params, grid, config, calib)
    report = {
        "scenario": "scaling-pipeline",
        "calibration": calib.as_dict(),
        "pipeline": rep.as_dict(),
    }
    _emit(outdir, "scaling-pipeline", cfg, report, [], started)
    ok = rep.solve_summary.get("converged", False)
    return EXIT_OK if ok else EXIT_NONCONVERGED


# ---------------------------------------------------------------------------
# compare


def compare_runs(dir_a, dir_b, rtol=1e-9):
    """Field-wise numeric diff of two run directories' reports."""
    ma = json.loads((Path(dir_a) / "manifest.json").read_text())
    mb = json.loads((Path(dir_b) / "manifest.json").read_text())
    if ma["scenario"] != mb["scenario"]:
        raise ConfigError(
            f"scenario mismatch: {ma['scenario']} vs {mb['scenario']}"
        )
    ra = json.loads((Path(dir_a) / "report.json").read_text())
    rb = json.loads((Path(dir_b) / "report.json").read_text())
    diffs = []

    def walk(a, b, path):
        if isinstance(a, dict) and isinstance(b, dict):
            for k in sorted(set(a) | set(b)):
                if k not in a or k not in b:
                    diffs.append({"path": f"{path}/{k}", "kind": "missing"})
                else:
                    walk(a[k], b[k], f"{path}/{k}")
        elif isinstance(a, list) and isinstance(b, list):
            if len(a) != len(b):
                diffs.append({"path": path, "kind": "length", "a": len(a), "b": len(b)})
            for i, (x, y) in enumerate(zip(a, b)):
                walk(x, y, f"{path}[{i}]")
        elif isinstance(a, (int, float)) and isinstance(b, (int, float)):
            scale = max(abs(a), abs(b), 1.0)
            if abs(a - b) > rtol * scale:
                diffs.append({"path": path, "kind": "numeric", "a": a, "b": b,
                              "abs_diff": abs(a - b)})
        elif a != b:
            diffs.append({"path": path, "kind": "value", "a": str(a), "b": str(b)})

    walk(ra, rb, "")
    return {"scenario": ma["scenario"], "differences": diffs, "identical": not diffs}


# ---------------------------------------------------------------------------
# argument parsing / dispatch


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help="worker cap for ensembles")
    for name in ("tau", "delta", "b_over_a", "sigma", "lam"):
        p.add_argument(f"--{name}", type=float, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="jmgtlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", help="characteristic-root sweep -> CSV")
    _add_common(p)
    p.add_argument("--sweep", default=None, help="xi sweep lo:hi:count")

    p = sub.add_parser("kernels", help="kernel tables + pointwise-bound fits")
    _add_common(p)
    p.add_argument("--xi-sweep", dest="xi_sweep", default=None)
    p.add_argument("--tmin", type=float, default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--tcount", type=int, default=None)

    p = sub.add_parser("linear-decay", help="linear decay-rate verification")
    _add_common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--inhomogeneous", action="store_true", default=None)

    p = sub.add_parser("simulate", help="single nonlinear Picard run")
    _add_common(p)
    for name, typ in (("n", int), ("N", int), ("L", float), ("amplitude", float),
                      ("width", float), ("horizon", float), ("samples", int),
                      ("picard_tol", float)):
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--representation", choices=("complex_field", "coupled_real"),
                   default=None)

    p = sub.add_parser("nonlinear-decay", help="nonlinear sharp-decay sweep")
    _add_common(p)
    for name, typ in (("n", int), ("N", int), ("L", float), ("amplitude", float),
                      ("band", float), ("horizon", float), ("samples", int),
                      ("picard_tol", float), ("m1", float), ("m2", float),
                      ("s", float)):
        p.add_argument(f"--{name}", type=typ, default=None)

    p = sub.add_parser("norms", help="norms of a seeded random field")
    _add_common(p)
    for name, typ in (("n", int), ("N", int), ("L", float), ("alpha", float),
                      ("s", float)):
        p.add_argument(f"--{name}", type=typ, default=None)

    p = sub.add_parser("inequalities", help="functional-inequality ensembles")
    _add_common(p)
    for name, typ in (("n", int), ("N", int), ("L", float), ("alpha", float),
                      ("s", float), ("trials", int)):
        p.add_argument(f"--{name}", type=typ, default=None)

    p = sub.add_parser("scaling-pipeline", help="large-data lambda-selection demo")
    _add_common(p)
    for name, typ in (("n", int), ("N", int), ("L", float), ("alpha", float),
                      ("s", float), ("scale", float), ("horizon", float),
                      ("samples", int), ("picard_tol", float)):
        p.add_argument(f"--{name}", type=typ, default=None)

    p = sub.add_parser("compare", help="diff two run directories")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--rtol", type=float, default=1e-9)
    p.add_argument("--out", default=None)
    return ap


_DEFAULTS = {
    "roots": {
        "tau": 1.0, "delta": 1.0, "b_over_a": 1.0, "sigma": 1.0, "lam": 1.0,
        "sweep": "0.01:100:500", "seed": 0,
    },
    "kernels": {
        "tau": 1.0, "delta": 1.0, "b_over_a": 1.0, "sigma": 1.0, "lam": 1.0,
        "xi_sweep": "0.05:50:40", "tmin": 0.01, "tmax": 50.0, "tcount": 24,
        "seed": 0,
    },
    "linear-decay": {
        "tau": 1.0, "delta": 1.0, "b_over_a": 1.0, "sigma": 1.0, "lam": 1.0,
        "n": 1, "N": None, "L": None, "m": 1.0, "s": 0.0,
        "horizon": DECAY_HORIZON, "inhomogeneous": False, "seed": 0,
    },
    "simulate": {
        "tau": 1.0, "delta": 1.0, "b_over_a": 1.0, "sigma": 1.0, "lam": 1.0,
        "n": 1, "N": 128, "L": 2.0 * math.pi, "amplitude": 1e-3, "width": 3.0,
        "horizon": 10.0, "samples": 513, "picard_tol": 1e-10,
        "representation": "complex_field", "seed": 0,
    },
    "nonlinear-decay": {
        "tau": 1.0, "delta": 1.0, "b_over_a": 1.0, "sigma": 1.0, "lam": 1.0,
        "n": 1, "N": 256, "L": 160.0 * math.pi, "amplitude": 1e-3, "band": 0.4,
        "horizon": 100.0, "samples": 361, "picard_tol": 1e-9,
        "m1": 1.0, "m2": 1.0, "s": 0.0, "seed": 0,
    },
    "norms": {
        "n": 1, "N": 64, "L": 2.0 * math.pi, "alpha": -1.0, "s": 0.5, "seed": 0,
    },
    "inequalities": {
        "n": 1, "N": 64, "L": 2.0 * math.pi, "alpha": -1.0, "s": 1.0,
        "sigma": 1.0, "trials": 50, "seed": 0, "threads": 1,
    },
    "scaling-pipeline": {
        "tau": 1.0, "delta": 1.0, "b_over_a": 1.0, "sigma": 1.0, "lam": 1.0,
        "n": 1, "N": 256, "L": 2.0 * math.pi, "alpha": -3.0, "s": -0.5,
        "scale": 50.0, "horizon": 10.0, "samples": 129, "picard_tol": 1e-9,
        "seed": 0,
    },
}

_RUNNERS = {
    "roots": run_roots,
    "kernels": run_kernels,
    "linear-decay": run_linear_decay,
    "simulate": run_simulate,
    "nonlinear-decay": run_nonlinear_decay,
    "norms": run_norms,
    "inequalities": run_inequalities,
    "scaling-pipeline": run_scaling_pipeline,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    started = time.monotonic()
    try:
        if args.command == "compare":
            diff = compare_runs(args.run_a, args.run_b, rtol=args.rtol)
            text = json.dumps(_jsonable(diff), indent=2, sort_keys=True)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "diff.json").write_text(text + "\n")
            print(text)
            return EXIT_OK
        defaults = dict(_DEFAULTS[args.command])
        if args.command == "inequalities":
            defaults["sigma"] = defaults.get("sigma", 1.0)
        file_cfg = _load_config(args.config) if args.config else {}
        flag_cfg = {
            k: v for k, v in vars(args).items()
            if k not in ("command", "config", "out") and v is not None
        }
        flag_cfg.pop("threads", None)
        if args.threads is not None:
            flag_cfg["threads"] = args.threads
        allowed = dict(defaults)
        allowed.setdefault("threads", 1)
        cfg = _merge_config(file_cfg, flag_cfg, allowed)
        code = _RUNNERS[args.command](cfg, args.out, started)
        return code
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ContractError, DiagnosticError, JmgtError) as exc:
        print(f"invariant-violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
