"""Command-line interface.

The JSON report goes to stdout; logs go to stderr.  Exit codes: 0 success,
2 configuration error, 3 numeric failure (no protected probe exists, or the
signal is inside the silenced subspace), 4 oracle mismatch in self-check
mode.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    GridSpec,
    convergence_study,
    delta_map,
    full_measure_rank_check,
    noise_impact_map,
    phase_sweep,
    sensitivity_map,
    two_circle_scaling_study,
    worst_case_delta,
)
from .errors import ConfigError, NoiseSpansFullSpace, SignalInNoiseSpace
from .geometry import sampling_vector
from .noise import distribution_from_dict, support_from_dict
from .probes import grid_silencer, probe_metrics
from .qfi import (
    brute_force_qfi,
    decoherence_closed_form,
    decoherence_from_rates,
    discretize_gaussian_grid,
    qfi_value,
)
from .scenario import (
    build_array,
    build_field,
    build_probe,
    canonical_json,
    config_hash,
    load_preset,
    preset_names,
    run_scenario,
    validate_config,
)

log = logging.getLogger("dfsnet")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SELFCHECK = 4


def _load_config(args) -> dict:
    if args.config is None:
        raise ConfigError("--config", "a configuration file is required for this command")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {args.config}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
    return _apply_overrides(cfg, args)


def _apply_overrides(cfg: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "samples", None) is not None:
        cfg["mc_samples"] = args.samples
    return cfg


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        name = payload.get("name") or payload.get("config", {}).get("name") or "report"
        (out_dir / f"{name}.json").write_text(text + "\n")
        log.info("wrote %s", out_dir / f"{name}.json")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_map_csv(result, path: Path) -> None:
    """One row per grid cell: coordinates, value, mask flag."""
    pts = result.grid.points()
    values = result.values.reshape(-1)
    mask = result.mask.reshape(-1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(result.grid.dim)] + ["value", "masked"])
        for pt, val, flagged in zip(pts, values, mask):
            writer.writerow(list(pt) + [val, int(bool(flagged))])


def _map_payload(cfg: dict, result, extrema: dict) -> dict:
    return {
        "name": cfg.get("name", "map"),
        "config_hash": config_hash(cfg),
        "quantity": result.quantity,
        "grid": {"bounds": result.grid.bounds, "resolution": result.grid.resolution},
        "masked_cells": int(result.mask.sum()),
        "extrema": extrema,
        "tool_version": __version__,
    }


def _run_map(cfg: dict, args) -> dict:
    array = build_array(cfg["array"])
    sig_field = build_field(cfg["signal"]["field"], "signal.field")
    noise_field = (
        build_field(cfg["noise"]["field"], "noise.field")
        if cfg.get("noise", {}).get("field")
        else sig_field
    )
    s = sampling_vector(sig_field, np.asarray(cfg["signal"]["position"], float), array)
    k = build_probe(cfg["probe"], s, noise_field, array)
    spec = cfg.get("map")
    if not spec:
        raise ConfigError("map", "map commands need a 'map' section")
    grid = GridSpec(tuple(map(tuple, spec["bounds"])), tuple(spec["resolution"]))
    quantity = spec.get("quantity", "noise_impact")
    if quantity == "noise_impact":
        result = noise_impact_map(noise_field, array, k, grid)
    elif quantity == "sensitivity":
        result = sensitivity_map(sig_field, array, grid, k=k)
    elif quantity == "delta":
        result = delta_map(noise_field, array, k, s, grid)
    else:
        raise ConfigError("map.quantity", f"unknown map quantity {quantity!r}")
    finite = result.values[~result.mask & np.isfinite(result.values)]
    extrema = {
        "min": float(finite.min()),
        "max": float(finite.max()),
    }
    payload = _map_payload(cfg, result, extrema)
    payload["probe_k"] = k.tolist()
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{payload['name']}.csv"
        _write_map_csv(result, csv_path)
        payload["csv"] = str(csv_path)
        log.info("wrote %s", csv_path)
    return payload


def _run_scaling(cfg: dict, args) -> dict:
    spec = cfg.get("scaling", {})
    m_values = spec.get("m_values", list(range(4, 21)))
    surplus = spec.get("surplus", [15, 16])
    sigma = float(spec.get("sigma", 1.0))
    runs = []
    for c in surplus:
        res = two_circle_scaling_study(m_values, int(c), sigma)
        runs.append(
            {
                "surplus": int(c),
                "kappa": res.kappa,
                "fit_r2": res.fit_r2,
                "rows": [
                    {
                        "m": r.m,
                        "n_sensors": r.n_sensors,
                        "sensitivity": r.sensitivity,
                        "delta": r.delta,
                        "t_opt": r.t_opt,
                    }
                    for r in res.rows
                ],
            }
        )
    return {
        "name": cfg.get("name", "scaling"),
        "config_hash": config_hash(cfg),
        "runs": runs,
        "tool_version": __version__,
    }


def _run_sweep(cfg: dict, args) -> dict:
    array = build_array(cfg["array"])
    sig_field = build_field(cfg["signal"]["field"], "signal.field")
    noise_field = (
        build_field(cfg["noise"]["field"], "noise.field")
        if cfg.get("noise", {}).get("field")
        else sig_field
    )
    s = sampling_vector(sig_field, np.asarray(cfg["signal"]["position"], float), array)
    k = build_probe(cfg["probe"], s, noise_field, array)
    spec = cfg.get("sweep", {})
    wavevector = np.asarray(spec["wavevector"], float)
    samples = int(spec.get("samples", 360))
    tol = float(spec.get("tol", 1e-10))
    phis = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    res = phase_sweep(array, k, wavevector, phis, tol=tol)
    return {
        "name": cfg.get("name", "sweep"),
        "config_hash": config_hash(cfg),
        "classification": res.classification,
        "max_impact": res.max_impact,
        "phi_samples": samples,
        "probe_k": k.tolist(),
        "tool_version": __version__,
    }


def _run_convergence(cfg: dict, args) -> dict:
    spec = cfg.get("convergence", {})
    res = convergence_study(
        spec.get("n_values", [25, 50, 100, 200, 500, 1000]),
        m=int(spec.get("m", 3)),
        sigma=float(spec.get("sigma", 1.0)),
    )
    return {
        "name": cfg.get("name", "convergence"),
        "config_hash": config_hash(cfg),
        "reference_n": res.reference_n,
        "rows": [
            {
                "n_sensors": r.n_sensors,
                "s_bar": r.s_bar,
                "n_bar": r.n_bar,
                "sensitivity": r.sensitivity,
                "delta": None if not np.isfinite(r.delta) else r.delta,
            }
            for r in res.rows
        ],
        "tool_version": __version__,
    }


def _run_rank_check(cfg: dict, args) -> dict:
    array = build_array(cfg["array"])
    field = build_field(cfg["signal"]["field"], "signal.field")
    spec = cfg.get("rank_check")
    if not spec:
        raise ConfigError("rank_check", "rank-check commands need a 'rank_check' section")
    support = support_from_dict(spec["area"], path="rank_check.area")
    s = sampling_vector(field, np.asarray(cfg["signal"]["position"], float), array)
    rank, residual = full_measure_rank_check(
        field,
        array,
        support,
        samples=int(spec.get("samples", 1000)),
        tol=float(spec.get("tol", 1e-12)),
        seed=int(cfg.get("seed", 0)),
        signal=s,
    )
    return {
        "name": cfg.get("name", "rank_check"),
        "config_hash": config_hash(cfg),
        "rank": rank,
        "n_sensors": array.n_sensors,
        "signal_residual": residual,
        "full_rank": bool(rank >= array.n_sensors),
        "tool_version": __version__,
    }


def _self_check(cfg: dict, report: dict) -> list[str]:
    """Cross-validate the engine on the loaded scenario; returns failures."""
    failures = []
    array = build_array(cfg["array"])
    sig_field = build_field(cfg["signal"]["field"], "signal.field")
    s = sampling_vector(sig_field, np.asarray(cfg["signal"]["position"], float), array)
    k = np.asarray(report["probe"]["k"], float)
    # closed form versus direct characteristic sum on a synthetic source
    n_vec = s[::-1].copy()
    sigma, t = 0.7, 0.9
    nodes, weights = np.polynomial.hermite.hermgauss(64)
    betas = np.sqrt(2.0) * sigma * nodes
    d_quad = abs(decoherence_from_rates(betas * float(n_vec @ k), weights / np.sqrt(np.pi), t))
    d_closed = decoherence_closed_form(n_vec, k, sigma, t)
    if abs(d_quad - d_closed) > 1e-10:
        failures.append(f"closed-form decoherence mismatch: {d_quad} vs {d_closed}")
    # small systems: full Hilbert-space oracle versus the engine formula
    if array.n_sensors <= 4:
        lo = np.full(array.dim, 2.0)
        hi = lo + 0.5
        w, om = discretize_gaussian_grid(sig_field, array, lo, hi, 3, 0.0, sigma)
        f_engine = qfi_value(s, k, t, abs(decoherence_from_rates(om @ k, w, t)))
        f_oracle = brute_force_qfi(s, k, t, w, om)
        if abs(f_engine - f_oracle) > 1e-8 * max(f_engine, 1e-12):
            failures.append(f"oracle mismatch: engine {f_engine} vs oracle {f_oracle}")
    return failures


def _cmd_design(args) -> int:
    cfg = validate_config(_load_config(args))
    array = build_array(cfg["array"])
    sig_field = build_field(cfg["signal"]["field"], "signal.field")
    noise_field = (
        build_field(cfg["noise"]["field"], "noise.field")
        if cfg.get("noise", {}).get("field")
        else sig_field
    )
    s = sampling_vector(sig_field, np.asarray(cfg["signal"]["position"], float), array)
    k = build_probe(cfg["probe"], s, noise_field, array)
    payload = {
        "name": cfg.get("name", "design"),
        "config_hash": config_hash(cfg),
        "probe_k": k.tolist(),
        "sensitivity": float(abs(s @ k) / np.abs(s).sum()),
        "tool_version": __version__,
    }
    noise_cfg = cfg.get("noise")
    if noise_cfg and "distribution" in noise_cfg:
        dist = distribution_from_dict(noise_cfg["distribution"])
        d_min, x_min = worst_case_delta(noise_field, array, k, s, dist.position_support())
        payload["delta_worst"] = None if not np.isfinite(d_min) else d_min
        payload["delta_worst_position"] = x_min.tolist()
    _emit(payload, args)
    return EXIT_OK


def _cmd_qfi(args) -> int:
    cfg = _load_config(args)
    report = run_scenario(cfg).to_dict()
    code = EXIT_OK
    if args.self_check:
        failures = _self_check(cfg, report)
        report["self_check"] = {"passed": not failures, "failures": failures}
        if failures:
            code = EXIT_SELFCHECK
    _emit(report, args)
    return code


def _cmd_reproduce(args) -> int:
    cfg = load_preset(args.preset)
    cfg = _apply_overrides(cfg, args)
    kind = cfg.get("kind", "scenario")
    if kind == "scenario":
        report = run_scenario(cfg).to_dict()
        report["name"] = cfg["name"]
        code = EXIT_OK
        if args.self_check:
            failures = _self_check(cfg, report)
            report["self_check"] = {"passed": not failures, "failures": failures}
            if failures:
                code = EXIT_SELFCHECK
        _emit(report, args)
        return code
    if kind == "map":
        _emit(_run_map(cfg, args), args)
        return EXIT_OK
    if kind == "scaling":
        _emit(_run_scaling(cfg, args), args)
        return EXIT_OK
    if kind == "sweep":
        _emit(_run_sweep(cfg, args), args)
        return EXIT_OK
    if kind == "convergence":
        _emit(_run_convergence(cfg, args), args)
        return EXIT_OK
    raise ConfigError("kind", f"preset kind {kind!r} not runnable")


def _cmd_map(args) -> int:
    _emit(_run_map(_load_config(args), args), args)
    return EXIT_OK


def _cmd_scaling(args) -> int:
    _emit(_run_scaling(_load_config(args), args), args)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    _emit(_run_sweep(_load_config(args), args), args)
    return EXIT_OK


def _cmd_rank_check(args) -> int:
    _emit(_run_rank_check(_load_config(args), args), args)
    return EXIT_OK


def _cmd_presets(args) -> int:
    _emit({"name": "presets", "presets": preset_names(), "tool_version": __version__}, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfsnet",
        description="Probe design and QFI analysis for distributed qubit sensor networks",
    )
    parser.add_argument("--version", action="version", version=f"dfsnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="scenario configuration (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--samples", type=int, default=None, help="override Monte Carlo samples")
        p.add_argument("--out", help="directory for report artifacts")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("design", help="construct the probe and report its metrics")
    common(p)
    p.set_defaults(handler=_cmd_design)

    p = sub.add_parser("qfi", help="full scenario evaluation with baselines")
    common(p)
    p.add_argument("--self-check", action="store_true", help="cross-validate against oracles")
    p.set_defaults(handler=_cmd_qfi)

    p = sub.add_parser("map", help="spatial figure-of-merit map")
    common(p)
    p.set_defaults(handler=_cmd_map)

    p = sub.add_parser("scaling", help="grid-silencing scaling study")
    common(p)
    p.set_defaults(handler=_cmd_scaling)

    p = sub.add_parser("rank-check", help="noise-area rank and signal residual")
    common(p)
    p.set_defaults(handler=_cmd_rank_check)

    p = sub.add_parser("sweep-phase", help="periodic-field phase sweep")
    common(p)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("reproduce", help="run a shipped preset")
    p.add_argument("preset", choices=preset_names())
    common(p)
    p.add_argument("--self-check", action="store_true")
    p.set_defaults(handler=_cmd_reproduce)

    p = sub.add_parser("presets", help="list shipped presets")
    common(p)
    p.set_defaults(handler=_cmd_presets)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        log.error("configuration error at %s: %s", exc.path, exc.message)
        return EXIT_CONFIG
    except (NoiseSpansFullSpace, SignalInNoiseSpace) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
