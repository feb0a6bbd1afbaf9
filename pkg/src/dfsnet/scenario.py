"""Scenario configuration, preset registry, and end-to-end evaluation.

A scenario document is a JSON-compatible dict: sensor array, signal and noise
field models, a noise distribution, a probe recipe, and run controls (time
limit, Monte Carlo samples, seed).  ``run_scenario`` turns one into a report
comparing the designed probe against the GHZ probe and the noiseless
separable bound, echoing enough of the input to re-run it bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from . import __version__ as _pkg_version
from .errors import ConfigError
from .geometry import FieldModel, SensorArray, halton_disc, preset_array, sampling_vector
from .noise import distribution_from_dict
from .probes import (
    design_probe,
    first_order_silencer,
    flip_schedule,
    grid_silencer,
    mirror_charge_probe,
    probe_metrics,
)
from .qfi import qfi_time_limited, separable_bound
from .analysis import worst_case_coupling, worst_case_delta

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0  # 0.618034


def canonical_json(obj) -> str:
    """Canonical serialized form: sorted keys, minimal separators.

    parse -> serialize is byte-stable, which makes config hashes and
    round-trip tests meaningful.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Validation helpers: fail with the path of the offending field
# ---------------------------------------------------------------------------


def _need(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return d[key]


def _as_float(value, path: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {value!r}") from None
    if not np.isfinite(out):
        raise ConfigError(path, "must be finite")
    return out


def _as_positive(value, path: str) -> float:
    out = _as_float(value, path)
    if out <= 0:
        raise ConfigError(path, "must be positive")
    return out


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return value


def build_array(spec: dict, path: str = "array") -> SensorArray:
    if "positions" in spec:
        try:
            return SensorArray(np.asarray(spec["positions"], dtype=float))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}.positions", str(exc)) from None
    if "preset" in spec:
        name = spec["preset"]
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{path}.params", "must be a mapping")
        try:
            return preset_array(name, **params)
        except Exception as exc:
            raise ConfigError(f"{path}.preset", str(exc)) from None
    raise ConfigError(path, "need either 'positions' or 'preset'")


def build_field(spec: dict, path: str) -> FieldModel:
    try:
        return FieldModel.from_dict(spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def build_probe(
    probe: dict,
    s: np.ndarray,
    noise_field: FieldModel,
    array: SensorArray,
    path: str = "probe",
) -> np.ndarray:
    """Probe vector for any of the supported construction modes."""
    mode = _need(probe, "mode", path)
    lp = bool(probe.get("lp", False))
    design_mode = "lp_optimal" if lp else "infinity"
    if mode == "ghz":
        return np.ones(array.n_sensors)
    if mode == "mirror":
        return mirror_charge_probe(array)
    if mode == "explicit":
        k = np.asarray(_need(probe, "k", path), dtype=float).reshape(-1)
        if k.shape[0] != array.n_sensors:
            raise ConfigError(f"{path}.k", "length must equal the sensor count")
        if np.abs(k).max() > 1.0 + 1e-12 or not np.any(k):
            raise ConfigError(f"{path}.k", "entries must lie in [-1, 1] and not all be zero")
        return k
    if mode in ("dfs", "grid_silencer"):
        pts = probe.get("points")
        if pts is None:
            m = _as_int(_need(probe, "m", path), f"{path}.m", minimum=0)
            region = probe.get("region")
            if region is None:
                raise ConfigError(f"{path}.region", "grid silencing with 'm' needs a disc region")
            center = np.asarray(_need(region, "center", f"{path}.region"), dtype=float)
            radius = _as_positive(_need(region, "radius", f"{path}.region"), f"{path}.region.radius")
            if center.size != 2:
                raise ConfigError(f"{path}.region.center", "auto placement is 2-D only")
            pts = halton_disc(m, center, radius) if m else np.empty((0, 2))
        pts = np.asarray(pts, dtype=float)
        return design_probe(s, grid_silencer(noise_field, array, pts), mode=design_mode)
    if mode == "first_order":
        center = np.asarray(_need(probe, "center", path), dtype=float)
        beta0 = _as_float(probe.get("beta0", 1.0), f"{path}.beta0")
        return design_probe(
            s, first_order_silencer(noise_field, array, beta0, center), mode=design_mode
        )
    raise ConfigError(f"{path}.mode", f"unknown probe mode {mode!r}")


_SEP_CONVENTIONS = ("rate_limited", "adfs_time", "time_limit")


def validate_config(config: dict) -> dict:
    """Validate and normalize a scenario document; returns it unchanged."""
    if not isinstance(config, dict):
        raise ConfigError("$", "scenario configuration must be a mapping")
    _need(config, "array", "$")
    signal = _need(config, "signal", "$")
    _need(signal, "field", "signal")
    _need(signal, "position", "signal")
    _need(config, "probe", "$")
    _as_positive(_need(config, "time_limit", "$"), "time_limit")
    _as_int(config.get("seed", 0), "seed", minimum=0)
    _as_int(config.get("mc_samples", 100_000), "mc_samples", minimum=1000)
    conv = config.get("separable_convention", "rate_limited")
    if conv not in _SEP_CONVENTIONS:
        raise ConfigError("separable_convention", f"must be one of {_SEP_CONVENTIONS}")
    return config


@dataclass(frozen=True)
class ScenarioReport:
    """Everything run_scenario produced, JSON-ready via ``to_dict``."""

    config: dict
    probe_k: np.ndarray
    metrics: dict
    qfi: dict
    baselines: dict
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "config_hash": config_hash(self.config),
            "config": self.config,
            "probe": {
                "k": self.probe_k.tolist(),
                "flip_schedule_at_best_time": [
                    {"qubit": q, "time": t}
                    for q, t in flip_schedule(self.probe_k, self.qfi["t_best"])
                ],
            },
            "metrics": self.metrics,
            "qfi": self.qfi,
            "baselines": self.baselines,
            "tool_version": _pkg_version,
            "wall_time_s": self.wall_time_s,
        }


def run_scenario(config: dict) -> ScenarioReport:
    """Evaluate one scenario: probe design, time-limited QFI, and baselines.

    Deterministic given the config (all randomness flows from its seed).
    """
    started = time.perf_counter()
    validate_config(config)
    array = build_array(config["array"])
    sig_field = build_field(config["signal"]["field"], "signal.field")
    sig_pos = np.asarray(config["signal"]["position"], dtype=float)
    if sig_pos.size != array.dim:
        raise ConfigError("signal.position", "dimension does not match the array")
    s = sampling_vector(sig_field, sig_pos, array)

    noise_cfg = config.get("noise")
    if noise_cfg is None:
        noise_field, dist = sig_field, None
    else:
        noise_field = (
            build_field(noise_cfg["field"], "noise.field")
            if "field" in noise_cfg
            else sig_field
        )
        dist = distribution_from_dict(_need(noise_cfg, "distribution", "noise"))

    k = build_probe(config["probe"], s, noise_field, array)

    t_limit = float(config["time_limit"])
    samples = int(config.get("mc_samples", 100_000))
    seed = int(config.get("seed", 0))

    main = qfi_time_limited(s, k, dist, noise_field, array, t_limit, samples=samples, seed=seed)
    ghz = qfi_time_limited(
        s, np.ones(array.n_sensors), dist, noise_field, array, t_limit,
        samples=samples, seed=seed,
    )

    # worst-case diagnostics over the noise support (single source at a time)
    if dist is not None:
        support = dist.position_support()
        sigma_beta = dist.strength_std()
        delta_min, x_delta = worst_case_delta(noise_field, array, k, s, support)
        c_max, x_coupling = worst_case_coupling(noise_field, array, k, support)
        n_wc = sampling_vector(noise_field, x_delta, array)
        met = probe_metrics(s, n_wc, k)
        if c_max > 0 and sigma_beta > 0:
            t_opt = 1.0 / (2.0 * np.sqrt(2.0) * sigma_beta * c_max)
            rate = 4.0 * float(s @ k) ** 2 * t_opt / np.sqrt(np.e)
            infinite = False
        else:
            t_opt, rate, infinite = np.inf, np.inf, True
        metrics = {
            "s_bar": met.s_bar,
            "n_bar_worst": met.n_bar,
            "sensitivity": met.sensitivity,
            "delta_worst": met.delta if np.isfinite(met.delta) else None,
            "delta_worst_position": x_delta.tolist(),
            "coupling_worst": c_max,
            "coupling_worst_position": x_coupling.tolist(),
            "signal_silenced": met.signal_silenced,
        }
    else:
        n_count = array.n_sensors
        metrics = {
            "s_bar": float(np.abs(s).sum() / n_count),
            "n_bar_worst": None,
            "sensitivity": float(abs(s @ k) / np.abs(s).sum()),
            "delta_worst": None,
            "delta_worst_position": None,
            "coupling_worst": 0.0,
            "coupling_worst_position": None,
            "signal_silenced": False,
        }
        t_opt, rate, infinite = np.inf, np.inf, True

    # Separable comparisons (noiseless bound).  Three figures are reported:
    #   time_limit:   whole budget in one run of duration t_l
    #   rate_limited: runs capped at the worst-case-analytic optimal time
    #   adfs_time:    runs of the aDFS probe's optimal measurement time
    t_cap = min(t_opt, t_limit) if np.isfinite(t_opt) else t_limit
    f_sep_rate = (t_limit / t_cap) * separable_bound(s, t_cap)[0]
    f_sep_tl, s_sep = separable_bound(s, t_limit)
    f_sep_adfs = (t_limit / main.t_best) * separable_bound(s, main.t_best)[0]
    convention = config.get("separable_convention", "rate_limited")
    headline = {
        "rate_limited": f_sep_rate,
        "adfs_time": f_sep_adfs,
        "time_limit": f_sep_tl,
    }[convention]

    report = ScenarioReport(
        config=config,
        probe_k=k,
        metrics=metrics,
        qfi={
            "value": main.qfi,
            "se": main.qfi_se,
            "t_best": main.t_best,
            "t_limit": t_limit,
            "rate_analytic": None if infinite else rate,
            "t_opt_analytic": None if infinite else t_opt,
            "rate_unbounded": infinite,
        },
        baselines={
            "ghz": {"value": ghz.qfi, "se": ghz.qfi_se, "t_best": ghz.t_best},
            "separable": {
                "headline": headline,
                "convention": convention,
                "rate_limited": f_sep_rate,
                "adfs_time": f_sep_adfs,
                "time_limit": f_sep_tl,
                "sensitivity": s_sep,
            },
        },
        wall_time_s=time.perf_counter() - started,
    )
    return report


# ---------------------------------------------------------------------------
# Preset registry
#
# Frozen scenario documents reproducing the published example table and the
# figure constructions.  Geometry choices that the source material leaves
# open are documented inline in each preset's "notes".
# ---------------------------------------------------------------------------


def _square_lattice_preset() -> dict:
    phi = 1.0 / _GOLDEN  # 1.618034
    return {
        "name": "table1_square_lattice",
        "kind": "scenario",
        "notes": (
            "Two probe qubits watch a surface particle of a unit-spacing square "
            "lattice; the particle's three in-lattice neighbours are noise "
            "sources.  Silencing all three with N=2 forces the sensors onto the "
            "outward surface normal at the golden-section distances 0.618 and "
            "1.618 (inverse points of the neighbour circle), which reproduces "
            "the published probe k = (1, -0.618034).  Lattice spacing defaults "
            "to one length unit (not stated in the source)."
        ),
        "array": {"positions": [[phi, 0.0], [_GOLDEN, 0.0]]},
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [0.0, 0.0]},
        "noise": {
            "distribution": {
                "kind": "product",
                "factors": [
                    {
                        "kind": "truncated_gaussian",
                        "mean": [0.0, cx, cy],
                        "cov": [
                            [9.0, 0.0, 0.0],
                            [0.0, 1.0 / 900.0, 0.0],
                            [0.0, 0.0, 1.0 / 900.0],
                        ],
                        "position_radius": 0.1,
                    }
                    for cx, cy in [(0.0, 1.0), (0.0, -1.0), (-1.0, 0.0)]
                ],
            }
        },
        "probe": {"mode": "grid_silencer", "points": [[0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]]},
        "time_limit": 8.0,
        "mc_samples": 100_000,
        "seed": 7,
        "separable_convention": "rate_limited",
    }


def _direction_preset(first_order: bool = False) -> dict:
    cfg = {
        "name": "table1_direction" + ("_first_order" if first_order else ""),
        "kind": "scenario",
        "notes": (
            "Ten qubits on two circles around a central signal, shielded from a "
            "noise source arriving from one direction.  Circle radii (0.6, 0.9) "
            "and the noise-centre distance 4.5 are not stated in the source; "
            "they are chosen so the reproduced figures land on the published "
            "ones.  Baseline probe silences the centre of the noise region."
        ),
        "array": {
            "preset": "two_circles",
            "params": {"n_inner": 5, "n_outer": 5, "r_inner": 0.6, "r_outer": 0.9},
        },
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [0.0, 0.0]},
        "noise": {
            "distribution": {
                "kind": "truncated_gaussian",
                "mean": [0.0, 4.5, 0.0],
                "cov": [
                    [1.0, 0.0, 0.0],
                    [0.0, 1.0 / 9.0, 0.0],
                    [0.0, 0.0, 1.0 / 9.0],
                ],
                "position_radius": 1.0,
            }
        },
        "probe": {"mode": "grid_silencer", "points": [[4.5, 0.0]]},
        "time_limit": 35.0,
        "mc_samples": 100_000,
        "seed": 7,
        "separable_convention": "rate_limited",
    }
    if first_order:
        cfg["probe"] = {"mode": "first_order", "center": [4.5, 0.0], "beta0": 1.0}
        cfg["notes"] += (
            "  Variant: silences the full first order (strength and both "
            "spatial derivatives) at the noise centre."
        )
    return cfg


def _outside_preset() -> dict:
    pts = [[3.0, 0.0, 0.0], [-3.0, 0.0, 0.0], [0.0, 3.0, 0.0],
           [0.0, -3.0, 0.0], [0.0, 0.0, 3.0], [0.0, 0.0, -3.0]]
    return {
        "name": "table1_outside",
        "kind": "scenario",
        "notes": (
            "Signal at the centre of a 26-qubit cube (3x3x3 minus centre, "
            "spacing 0.5 so the sensor volume is one).  Noise arrives from an "
            "isotropic shell: radius normal around 3.5 with deviation 1/6, "
            "truncated to [3, 4], weighted by the 1/r^2 geometric factor; "
            "strength deviation 1.  The probe silences the six axis points at "
            "radius 3."
        ),
        "array": {"preset": "cube3", "params": {"spacing": 0.5}},
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [0.0, 0.0, 0.0]},
        "noise": {
            "distribution": {
                "kind": "radial_shell",
                "center": [0.0, 0.0, 0.0],
                "r_mean": 3.5,
                "r_sigma": 1.0 / 6.0,
                "r_min": 3.0,
                "r_max": 4.0,
                "strength_mean": 0.0,
                "strength_sigma": 1.0,
            }
        },
        "probe": {"mode": "grid_silencer", "points": pts},
        "time_limit": 175.0,
        "mc_samples": 100_000,
        "seed": 7,
        "separable_convention": "rate_limited",
    }


#: Probe for the cylinder scenario: k maximizing signal overlap against the
#: sampled second moment of the cylinder noise (ridge-regularized solve
#: (C + 1e-8 I) k = s with C from 2e4 seeded draws), frozen for
#: reproducibility.  Plain silencing of m points cannot keep any useful
#: sensitivity here because the signal is nearly parallel to the cylinder's
#: mean noise direction.
_CYLINDER_K = [
    -0.475588626239142, -0.25458328948510983, -0.11649903371192875,
    -0.02001116431929844, 0.7521188135260494, -0.150319395312151,
    -0.5222210032181028, -0.19943218688756906, -0.1504402442919742,
    0.006096822246186035, 0.7082414945883998, -0.1460949977476307,
    1.0, 0.08177179931279041, -0.0063548684086946255,
    0.7530363189810143, -0.12460509614909468, -0.4615338097674101,
    -0.27300861844518726, -0.11189681241290135, -0.002444565737464246,
    0.6852901831573565, -0.09600333442513315, -0.46195926674195936,
    -0.2675856377046007, -0.14571764968313494,
]


def _cylinder_preset() -> dict:
    return {
        "name": "table1_cylinder",
        "kind": "scenario",
        "notes": (
            "Signal at the centre of the 26-qubit unit-volume cube; noise "
            "uniform over a cylinder of radius 15 and length 15.5 whose near "
            "cap sits one unit beyond the cube face (base plane z = 1.5 from "
            "the cube centre); strength deviation 100.  The frozen probe "
            "maximizes signal overlap against the sampled noise second moment "
            "(see _CYLINDER_K).  The published separable figure for this row "
            "is not reproducible together with the aDFS figure under any "
            "single time convention; all three separable figures are reported."
        ),
        "array": {"preset": "cube3", "params": {"spacing": 0.5}},
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [0.0, 0.0, 0.0]},
        "noise": {
            "distribution": {
                "kind": "uniform_volume",
                "support": {
                    "shape": "cylinder",
                    "base_center": [0.0, 0.0, 1.5],
                    "radius": 15.0,
                    "length": 15.5,
                },
                "strength_mean": 0.0,
                "strength_sigma": 100.0,
            }
        },
        "probe": {"mode": "explicit", "k": list(_CYLINDER_K)},
        "time_limit": 500.0,
        "mc_samples": 100_000,
        "seed": 7,
        "separable_convention": "adfs_time",
    }


def _fig2a_preset() -> dict:
    return {
        "name": "fig2a_sphere",
        "kind": "map",
        "notes": (
            "Two sensors one unit apart with k = (1, -0.5): every source on "
            "the circle of radius 2/3 around (4/3, 0) is exactly silenced."
        ),
        "array": {"positions": [[0.0, 0.0], [1.0, 0.0]]},
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [-1.5, 0.0]},
        "probe": {"mode": "explicit", "k": [1.0, -0.5]},
        "map": {
            "quantity": "noise_impact",
            "bounds": [[-1.0, 3.0], [-2.0, 2.0]],
            "resolution": [201, 201],
        },
        "time_limit": 1.0,
        "seed": 7,
    }


def _fig2b_preset() -> dict:
    return {
        "name": "fig2b_square",
        "kind": "map",
        "notes": "Square sensor with alternating probe: both coordinate axes are silenced.",
        "array": {"preset": "square", "params": {"side": 2.0}},
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [2.5, 2.5]},
        "probe": {"mode": "mirror"},
        "map": {
            "quantity": "noise_impact",
            "bounds": [[-3.0, 3.0], [-3.0, 3.0]],
            "resolution": [201, 201],
        },
        "time_limit": 1.0,
        "seed": 7,
    }


def _fig3_preset() -> dict:
    return {
        "name": "fig3_maps",
        "kind": "map",
        "notes": (
            "Eight sensors on two circles, probe silencing three clustered "
            "points; the signal-to-noise map shows non-local ridges of high "
            "suppression away from the silenced cluster."
        ),
        "array": {
            "preset": "two_circles",
            "params": {"n_inner": 4, "n_outer": 4, "r_inner": 0.8, "r_outer": 1.2},
        },
        "signal": {"field": {"kind": "inverse_power", "eta": 1.0}, "position": [-2.0, 0.0]},
        "probe": {
            "mode": "grid_silencer",
            "points": [[2.0, -0.4], [2.0, 0.0], [2.0, 0.4]],
        },
        "map": {
            "quantity": "delta",
            "bounds": [[-3.0, 3.0], [-3.0, 3.0]],
            "resolution": [201, 201],
        },
        "time_limit": 1.0,
        "seed": 7,
    }


def _fig4_preset() -> dict:
    return {
        "name": "fig4_scaling",
        "kind": "scaling",
        "notes": (
            "Grid-silencing trade-off on the two-circle geometry: sensitivity "
            "falls and worst-case protection rises exponentially as more disc "
            "points are silenced; delta ~ S^-kappa with kappa around 18."
        ),
        "scaling": {
            "geometry": "two_circles",
            "m_values": list(range(4, 21)),
            "surplus": [15, 16],
            "sigma": 1.0,
        },
        "seed": 7,
    }


def _fig5_preset(orthogonal: bool = True) -> dict:
    wave_noise = [2.0, 0.0] if orthogonal else [2.0, 0.8]
    if orthogonal:
        array_spec = {"preset": "honeycomb", "params": {"radius": 1.0}}
        notes = (
            "Honeycomb (hexagon) sensor in a periodic field.  Signal wavevector "
            "along y, noise wavevector along x: the probe silenced at phase 0 "
            "stays silenced for every phase.  (A hexagon centred on the wave "
            "phase origin is inversion symmetric, which by itself already "
            "protects every odd probe; the orthogonal-wavevector case keeps "
            "that protection.)"
        )
    else:
        hexagon = preset_array("honeycomb", radius=1.0).positions + np.array([0.35, 0.2])
        array_spec = {"positions": hexagon.tolist()}
        notes = (
            "Counterexample with non-orthogonal wavevectors on a honeycomb "
            "shifted off the wave phase origin (the shift removes the "
            "inversion symmetry that would otherwise silence every phase): "
            "silencing at phase 0 does not survive the sweep."
        )
    return {
        "name": "fig5_honeycomb" + ("" if orthogonal else "_oblique"),
        "kind": "sweep",
        "notes": notes,
        "array": array_spec,
        "signal": {"field": {"kind": "periodic", "phase": 0.0}, "position": [0.0, 2.5]},
        "noise": {"field": {"kind": "periodic", "phase": 0.0}},
        "probe": {"mode": "grid_silencer", "points": [wave_noise]},
        "sweep": {"wavevector": wave_noise, "samples": 360, "tol": 1e-10},
        "time_limit": 1.0,
        "seed": 7,
    }


def _appendix_line_preset() -> dict:
    return {
        "name": "appendixA_line",
        "kind": "convergence",
        "notes": (
            "Line sensor at cell midpoints of [-0.5, 0.5], signal at -1, noise "
            "at +1 with three silenced points straddling it; tracks how the "
            "figure-of-merit scalars settle as the sensor densifies."
        ),
        "convergence": {
            "n_values": [25, 50, 100, 200, 500, 1000],
            "m": 3,
            "sigma": 1.0,
        },
        "seed": 7,
    }


_PRESET_BUILDERS = {
    "table1_square_lattice": _square_lattice_preset,
    "table1_direction": _direction_preset,
    "table1_direction_first_order": lambda: _direction_preset(first_order=True),
    "table1_outside": _outside_preset,
    "table1_cylinder": _cylinder_preset,
    "fig2a_sphere": _fig2a_preset,
    "fig2b_square": _fig2b_preset,
    "fig3_maps": _fig3_preset,
    "fig4_scaling": _fig4_preset,
    "fig5_honeycomb": _fig5_preset,
    "fig5_honeycomb_oblique": lambda: _fig5_preset(orthogonal=False),
    "appendixA_line": _appendix_line_preset,
}


def preset_names() -> list[str]:
    return sorted(_PRESET_BUILDERS)


def load_preset(name: str) -> dict:
    try:
        return _PRESET_BUILDERS[name]()
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; available: {preset_names()}") from None
