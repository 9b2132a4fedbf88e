"""Experiment runner.

Each subcommand takes a single JSON config file, validates it, runs the
experiment, and writes versioned CSV/JSON outputs into the configured
directory.  A summary is printed to stdout as JSON.  Exit codes: 0 success,
2 config error, 3 numerical failure.

    nufsamp landscape  config.json     two-point cost/term grids + minima
    nufsamp psd        config.json     average spectral density + maxima
    nufsamp certify    config.json     spurious-minimizer certificate
    nufsamp gradcheck  config.json     analytic vs finite-difference gradients
    nufsamp optimize   config.json     one optimizer run with trajectory
    nufsamp table1     config.json     six-strategy cross-evaluation
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    LANDSCAPE_TERMS,
    average_psd,
    certify_spurious_minima,
    minimizer_count_scaling,
    scan_landscape,
)
from .fourier import Signal
from .objective import ObjectiveSpec, cost_gradient, cost_gradient_fd
from .optimize import (
    MetricInterp,
    NumericsError,
    OptimizerConfig,
    Trajectory,
    evaluate_scheme,
    run_gd,
    run_lbfgs,
    run_sgd,
    run_var_metric,
)
from .reconstruct import KINDS, Reconstructor, back_projection
from .signals import (
    RectangleModel,
    gaussian_bump,
    high_freq_cosine,
    low_freq_sine,
    rectangle_dataset,
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"missing required config key {key!r}")
    return config[key]


def _signals_from_config(sig_cfg: dict) -> list[Signal]:
    family = _require(sig_cfg, "family")
    n_len = int(_require(sig_cfg, "n_len"))
    if family == "cosine":
        return [high_freq_cosine(n_len)]
    if family == "low_sine":
        return [low_freq_sine(n_len)]
    if family == "gaussian":
        return [gaussian_bump(n_len, sig_cfg.get("width"))]
    if family == "rectangles":
        count = int(_require(sig_cfg, "count"))
        seed = int(_require(sig_cfg, "seed"))
        return rectangle_dataset(n_len, count, seed)
    raise ConfigError(f"unknown signal family {family!r}")


def _reconstructor_from_config(cfg: dict) -> Reconstructor:
    kind = cfg.get("kind", "back_projection")
    if kind not in KINDS:
        raise ConfigError(f"unknown reconstructor kind {kind!r}")
    try:
        return Reconstructor(
            kind, lam=cfg.get("lam", 0.0), bias_correct=cfg.get("bias_correct", True)
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _init_scheme(init_cfg, n_len: int) -> np.ndarray:
    if isinstance(init_cfg, dict) and "subgrid_spacing" in init_cfg:
        spacing = float(init_cfg["subgrid_spacing"])
        return np.arange(-n_len / 2, n_len / 2, spacing)
    if isinstance(init_cfg, dict) and "points" in init_cfg:
        return np.asarray(init_cfg["points"], dtype=float)
    raise ConfigError("init must provide subgrid_spacing or points")


# ---------------------------------------------------------------------------


def cmd_landscape(config: dict) -> dict:
    sig_cfg = _require(config, "signal")
    n_len = int(_require(config, "n_len"))
    terms = config.get("terms", ["J1"])
    if isinstance(terms, str):
        terms = [terms]
    resolved = {
        "command": "landscape",
        "signal": sig_cfg,
        "n_len": n_len,
        "terms": terms,
        "res": int(config.get("res", 256)),
        "sigma": float(config.get("sigma", 0.0)),
        "lam": config.get("lam"),
        "bias_correct": bool(config.get("bias_correct", True)),
        "out_dir": _require(config, "out_dir"),
    }
    signals = _signals_from_config({**sig_cfg, "n_len": n_len})
    out = Path(resolved["out_dir"])
    summary = {"out_dir": str(out), "terms": {}}
    for term in terms:
        if term == "absU":
            profile = average_psd(signals)
            profile.rho = np.sqrt(profile.rho)
            profile.maxima = []
            io.write_psd_csv(out / "profile_absU.csv", profile, resolved)
            summary["terms"][term] = {"grid": str(out / "profile_absU.csv")}
            continue
        if term not in LANDSCAPE_TERMS:
            raise ConfigError(f"unknown landscape term {term!r}")
        try:
            grid = scan_landscape(
                signals,
                term,
                n_len,
                res=resolved["res"],
                sigma=resolved["sigma"],
                lam=resolved["lam"],
                bias_correct=resolved["bias_correct"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        io.write_grid_csv(out / f"landscape_{term}.csv", grid, resolved)
        io.write_minima_json(out / f"minima_{term}.json", grid, resolved)
        summary["terms"][term] = {
            "grid": str(out / f"landscape_{term}.csv"),
            "minima": str(out / f"minima_{term}.json"),
            "count": len(grid.minima),
        }
    return summary


def cmd_psd(config: dict) -> dict:
    sig_cfg = _require(config, "signal")
    n_len = int(_require(config, "n_len"))
    p_values = config.get("p_values")
    if p_values is None:
        p_values = [int(sig_cfg.get("count", 1))]
    resolved = {
        "command": "psd",
        "signal": sig_cfg,
        "n_len": n_len,
        "p_values": [int(p) for p in p_values],
        "grid_points": int(config.get("grid_points", 20)),
        "out_dir": _require(config, "out_dir"),
    }
    if sig_cfg.get("family") == "rectangles":
        # one seed, nested prefixes: the P-signal set is the first P draws
        full = _signals_from_config(
            {**sig_cfg, "n_len": n_len, "count": max(resolved["p_values"])}
        )
        families = {p: full[:p] for p in resolved["p_values"]}
    else:
        base = _signals_from_config({**sig_cfg, "n_len": n_len})
        families = {p: base for p in resolved["p_values"]}
    out = Path(resolved["out_dir"])
    summary = {"out_dir": str(out), "profiles": {}}
    for p, fam in families.items():
        profile = average_psd(fam, resolved["grid_points"])
        io.write_psd_csv(out / f"psd_P{p}.csv", profile, resolved)
        io.write_psd_maxima_json(out / f"psd_maxima_P{p}.json", profile, resolved)
        curv = profile.max_curvatures()
        summary["profiles"][str(p)] = {
            "count": len(profile.maxima),
            "max_curvature": float(curv.max()) if curv.size else 0.0,
        }
    return summary


def cmd_certify(config: dict) -> dict:
    sig_cfg = _require(config, "signal")
    n_len = int(_require(config, "n_len"))
    z_cfg = _require(config, "z")
    if isinstance(z_cfg, dict):
        spacing = float(_require(z_cfg, "spacing"))
        z = np.arange(-n_len / 2, n_len / 2, spacing)
    else:
        z = np.asarray(z_cfg, dtype=float)
    resolved = {
        "command": "certify",
        "signal": sig_cfg,
        "n_len": n_len,
        "z": z.tolist(),
        "radius": float(_require(config, "radius")),
        "curvature": float(_require(config, "curvature")),
        "m_samples": int(_require(config, "m_samples")),
        "sigma": float(config.get("sigma", 0.0)),
        "reconstructor": config.get("reconstructor", {"kind": "back_projection"}),
        "out_dir": _require(config, "out_dir"),
    }
    signals = _signals_from_config({**sig_cfg, "n_len": n_len})
    rec = _reconstructor_from_config(resolved["reconstructor"])
    cert = certify_spurious_minima(
        signals,
        z,
        resolved["radius"],
        resolved["curvature"],
        resolved["m_samples"],
        resolved["sigma"],
        rec,
    )
    report = {
        "holds": cert.holds,
        "reason": cert.reason,
        "separation": cert.separation,
        "eps": cert.eps,
        "worst_energy": cert.worst_energy,
        "condition_lhs": cert.condition_lhs,
        "condition_rhs": cert.condition_rhs,
        "count_lower_bound": cert.count_lower_bound,
    }
    if n_len % 4 == 0:
        scaling = minimizer_count_scaling(n_len, resolved["sigma"], rec)
        report["scaling"] = {
            "eta": scaling.eta,
            "eta_formula": scaling.eta_formula,
            "m_samples": scaling.m_samples,
            "k_candidates": scaling.k_candidates,
            "lower_bound": scaling.lower_bound,
            "exact_count": scaling.exact_count,
        }
    out = Path(resolved["out_dir"])
    io.write_json(out / "certificate.json", report, resolved)
    return {"out_dir": str(out), **report}


def cmd_gradcheck(config: dict) -> dict:
    resolved = {
        "command": "gradcheck",
        "count": int(config.get("count", 100)),
        "n_max": int(config.get("n_max", 64)),
        "m_max": int(config.get("m_max", 16)),
        "sigmas": config.get("sigmas", [0.0, 0.1]),
        "h": float(config.get("h", 1e-5)),
        "seed": int(config.get("seed", 0)),
        "out_dir": _require(config, "out_dir"),
    }
    rng = np.random.default_rng(resolved["seed"])
    worst = 0.0
    rows = []
    for k in range(resolved["count"]):
        n_len = 2 * int(rng.integers(4, resolved["n_max"] // 2 + 1))
        m = int(rng.integers(1, resolved["m_max"] + 1))
        sigma = float(rng.choice(resolved["sigmas"]))
        values = rng.normal(size=n_len) + 1j * rng.normal(size=n_len)
        u = Signal(values / np.linalg.norm(values))
        freqs = rng.uniform(-n_len / 2, n_len / 2, m)
        spec = ObjectiveSpec.single(u, back_projection(), sigma)
        g = cost_gradient(spec, freqs)
        g_fd = cost_gradient_fd(spec, freqs, resolved["h"])
        err = float(np.max(np.abs(g - g_fd) / (1 + np.abs(g_fd))))
        worst = max(worst, err)
        rows.append({"n_len": n_len, "m": m, "sigma": sigma, "rel_error": err})
    report = {"max_rel_error": worst, "instances": rows}
    out = Path(resolved["out_dir"])
    io.write_json(out / "gradcheck.json", report, resolved)
    return {"out_dir": str(out), "max_rel_error": worst}


def _run_one(method, spec_or_model, x0, opt_cfg, sigma, metric):
    if method in ("gd",):
        return run_gd(spec_or_model, x0, opt_cfg)
    if method == "var_metric_gd":
        return run_var_metric(spec_or_model, x0, opt_cfg, metric)
    if method == "lbfgs":
        return run_lbfgs(spec_or_model, x0, opt_cfg)
    if method in ("sgd", "var_metric_sgd"):
        return run_sgd(spec_or_model.draw, x0, opt_cfg, sigma=sigma, metric=metric)
    raise ConfigError(f"unknown method {method!r}")


def cmd_optimize(config: dict) -> dict:
    ds_cfg = _require(config, "dataset")
    n_len = int(_require(config, "n_len"))
    method = _require(config, "method")
    if "step" not in config:
        raise ConfigError("missing required config key 'step' (no silent default)")
    resolved = {
        "command": "optimize",
        "dataset": ds_cfg,
        "n_len": n_len,
        "method": method,
        "step": float(config["step"]),
        "iters": int(_require(config, "iters")),
        "beta": float(config.get("beta", 1.0)),
        "lbfgs_memory": int(config.get("lbfgs_memory", 8)),
        "seed": int(config.get("seed", 0)),
        "record_every": int(config.get("record_every", 100)),
        "smooth_window": int(config.get("smooth_window", 10000)),
        "sigma": float(config.get("sigma", 0.0)),
        "use_fd_grad": bool(config.get("use_fd_grad", False)),
        "reconstructor": config.get("reconstructor", {"kind": "back_projection"}),
        "metric": config.get("metric", method.startswith("var_metric")),
        "init": _require(config, "init"),
        "out_dir": _require(config, "out_dir"),
    }
    try:
        opt_cfg = OptimizerConfig(
            method=method,
            step=resolved["step"],
            iters=resolved["iters"],
            beta=resolved["beta"],
            lbfgs_memory=resolved["lbfgs_memory"],
            seed=resolved["seed"],
            record_every=resolved["record_every"],
            smooth_window=resolved["smooth_window"],
            use_fd_grad=resolved["use_fd_grad"],
            fd_step=float(config.get("fd_step", 1e-5)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    x0 = _init_scheme(resolved["init"], n_len)
    rec = _reconstructor_from_config(resolved["reconstructor"])
    sigma = resolved["sigma"]

    stochastic = method in ("sgd", "var_metric_sgd")
    signals = _signals_from_config({**ds_cfg, "n_len": n_len})
    metric = None
    if resolved["metric"]:
        metric = MetricInterp.from_signals(signals)
    if stochastic:
        if ds_cfg.get("family") != "rectangles":
            raise ConfigError("stochastic methods need the rectangles model")
        target = RectangleModel(n_len)
    else:
        target = ObjectiveSpec(rec, tuple(signals), sigma)
    traj = _run_one(method, target, x0, opt_cfg, sigma, metric)

    out = Path(resolved["out_dir"])
    io.write_trajectory_csv(out / "trajectory.csv", traj, resolved)
    final_value = evaluate_scheme(traj.final, signals, rec, sigma)
    payload = {
        "final": traj.final.tolist(),
        "smoothed_final": None
        if traj.smoothed_final is None
        else traj.smoothed_final.tolist(),
        "final_recorded_value": traj.values[-1],
        "final_value_on_dataset": final_value,
        "stalls": traj.stalls,
    }
    io.write_json(out / "final_scheme.json", payload, resolved)
    return {
        "out_dir": str(out),
        "final_value_on_dataset": final_value,
        "iterations": traj.iterations[-1],
    }


STRATEGIES = ("gd_p1", "gd", "var_metric_gd", "lbfgs", "sgd", "var_metric_sgd")


def cmd_table1(config: dict) -> dict:
    n_len = int(config.get("n_len", 128))
    m_samples = int(config.get("m_samples", 64))
    if n_len % m_samples:
        raise ConfigError("m_samples must divide n_len for the subgrid init")
    steps = _require(config, "steps")
    for strat in STRATEGIES:
        if strat not in steps:
            raise ConfigError(f"missing step size for strategy {strat!r}")
    resolved = {
        "command": "table1",
        "n_len": n_len,
        "m_samples": m_samples,
        "p_train": int(config.get("p_train", 1000)),
        "seed": int(config.get("seed", 0)),
        "sgd_seed": int(config.get("sgd_seed", 1234)),
        "sigma": float(config.get("sigma", 0.0)),
        "iters": int(config.get("iters", 100000)),
        "iters_lbfgs": int(config.get("iters_lbfgs", 300)),
        "record_every": int(config.get("record_every", 1000)),
        "smooth_window": int(config.get("smooth_window", 10000)),
        "beta": float(config.get("beta", 1.0)),
        "steps": {k: float(v) for k, v in steps.items()},
        "out_dir": _require(config, "out_dir"),
    }
    out = Path(resolved["out_dir"])
    sigma = resolved["sigma"]
    rec = back_projection()
    dataset = rectangle_dataset(n_len, resolved["p_train"], resolved["seed"])
    metric = MetricInterp.from_signals(dataset)
    model = RectangleModel(n_len)
    x0 = np.arange(-n_len / 2, n_len / 2, n_len / m_samples)

    def opt_cfg(method, step, iters):
        return OptimizerConfig(
            method=method,
            step=step,
            iters=iters,
            beta=resolved["beta"],
            seed=resolved["sgd_seed"],
            record_every=resolved["record_every"],
            smooth_window=resolved["smooth_window"],
        )

    runs: dict[str, Trajectory] = {}
    full_spec = ObjectiveSpec(rec, tuple(dataset), sigma)
    single_spec = ObjectiveSpec(rec, (dataset[0],), sigma)
    it = resolved["iters"]
    runs["gd_p1"] = run_gd(single_spec, x0, opt_cfg("gd", resolved["steps"]["gd_p1"], it))
    runs["gd"] = run_gd(full_spec, x0, opt_cfg("gd", resolved["steps"]["gd"], it))
    runs["var_metric_gd"] = run_var_metric(
        full_spec, x0, opt_cfg("var_metric_gd", resolved["steps"]["var_metric_gd"], it), metric
    )
    runs["lbfgs"] = run_lbfgs(
        full_spec, x0, opt_cfg("lbfgs", resolved["steps"]["lbfgs"], resolved["iters_lbfgs"])
    )
    runs["sgd"] = run_sgd(
        model.draw, x0, opt_cfg("sgd", resolved["steps"]["sgd"], it), sigma=sigma
    )
    runs["var_metric_sgd"] = run_sgd(
        model.draw,
        x0,
        opt_cfg("var_metric_sgd", resolved["steps"]["var_metric_sgd"], it),
        sigma=sigma,
        metric=metric,
    )

    scores = {}
    schemes = {}
    for strat, traj in runs.items():
        scheme = traj.smoothed_final if traj.smoothed_final is not None else traj.final
        schemes[strat] = scheme
        scores[strat] = evaluate_scheme(scheme, dataset, rec, sigma)
        io.write_trajectory_csv(out / f"traj_{strat}.csv", traj, resolved)

    rows = [[strat, scores[strat]] for strat in STRATEGIES]
    io.write_csv(out / "table1.csv", ["strategy", "score"], rows, resolved)
    io.write_json(
        out / "table1.json",
        {"scores": scores, "schemes": {k: v.tolist() for k, v in schemes.items()}},
        resolved,
    )
    return {"out_dir": str(out), "scores": scores}


# ---------------------------------------------------------------------------

_COMMANDS = {
    "landscape": cmd_landscape,
    "psd": cmd_psd,
    "certify": cmd_certify,
    "gradcheck": cmd_gradcheck,
    "optimize": cmd_optimize,
    "table1": cmd_table1,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nufsamp", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="path to the JSON run configuration")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, sort_keys=True, default=io._jsonable))
    return 0


if __name__ == "__main__":
    sys.exit(main())
