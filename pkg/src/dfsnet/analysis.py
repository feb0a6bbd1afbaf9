"""Spatial maps, worst-case searches, scaling and convergence studies.

Everything here is a data product: arrays of figure-of-merit values over
grids of source positions, fitted exponents, and rank diagnostics.  Values
are stored linearly; log scaling is applied only at export.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    FieldModel,
    SensorArray,
    halton_disc,
    line_array,
    line_midpoints_array,
    sampling_vector,
    sampling_vectors,
    two_circles_array,
)
from .probes import InsensitiveSubspace, design_probe, grid_silencer, probe_metrics
from .qfi import qfi_rate_and_topt
from .rng import stream

_SINGULAR_GUARD = 1e-6  # mask map cells this close to a sensor


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid: per-axis (lo, hi) bounds and resolutions."""

    bounds: tuple
    resolution: tuple

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        res = tuple(int(r) for r in self.resolution)
        if len(bounds) != len(res):
            raise ValueError("bounds and resolution must have the same length")
        if any(r < 2 for r in res):
            raise ValueError("grid resolution must be at least 2 per axis")
        if any(not np.isfinite([lo, hi]).all() or hi <= lo for lo, hi in bounds):
            raise ValueError("grid bounds must be finite with hi > lo")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, r) for (lo, hi), r in zip(self.bounds, self.resolution)]

    def points(self) -> np.ndarray:
        """All grid points, shape (prod(resolution), dim), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.reshape(-1) for m in mesh])


@dataclass(frozen=True)
class MapResult:
    """Values over a grid plus a mask of cells that could not be evaluated
    (sensor singularities) or hold non-finite figures (exact silencing)."""

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray
    quantity: str

    def log10(self) -> np.ndarray:
        """Export view: log10 of the values, masked cells set to NaN."""
        out = np.full(self.values.shape, np.nan)
        ok = ~self.mask & (self.values > 0)
        out[ok] = np.log10(self.values[ok])
        return out


def _evaluate_on_grid(model, array, grid, fn, singular_guard=_SINGULAR_GUARD):
    pts = grid.points()
    mask = np.zeros(pts.shape[0], dtype=bool)
    if model.singular:
        diff = pts[:, None, :] - array.positions[None, :, :]
        dmin = np.sqrt((diff**2).sum(-1)).min(axis=1)
        mask = dmin < singular_guard
    values = np.full(pts.shape[0], np.nan)
    ok = ~mask
    if ok.any():
        values[ok] = fn(pts[ok])
    return values.reshape(grid.resolution), mask.reshape(grid.resolution)


def sensitivity_map(
    model: FieldModel,
    array: SensorArray,
    grid: GridSpec,
    k: np.ndarray | None = None,
    subspace: InsensitiveSubspace | None = None,
    readapt_k: bool = False,
) -> MapResult:
    """Sensitivity S of the probe to a signal source at each grid point.

    With ``readapt_k`` the probe is re-derived from the local signal vector
    and the fixed insensitive subspace at every point (the best achievable
    sensitivity there); otherwise the supplied ``k`` is held fixed.
    """
    if readapt_k:
        if subspace is None:
            raise ValueError("readapt_k needs the insensitive subspace")
    elif k is None:
        raise ValueError("need a probe vector when readapt_k is off")
    k_fixed = None if k is None else np.asarray(k, dtype=float).reshape(-1)

    def fn(pts):
        svecs = sampling_vectors(model, pts, array)
        norms = np.abs(svecs).sum(axis=1)
        if not readapt_k:
            return np.abs(svecs @ k_fixed) / norms
        out = np.empty(pts.shape[0])
        for i, s in enumerate(svecs):
            try:
                kk = design_probe(s, subspace)
                out[i] = abs(s @ kk) / np.abs(s).sum()
            except Exception:
                out[i] = 0.0
        return out

    values, mask = _evaluate_on_grid(model, array, grid, fn)
    return MapResult(grid, values, mask, "sensitivity")


def noise_impact_map(
    model: FieldModel,
    array: SensorArray,
    k: np.ndarray,
    grid: GridSpec,
) -> MapResult:
    """Squared noise coupling <n(x), k>^2 over the grid.

    The noise field model may differ from the signal's; silenced points show
    up as exact zeros.
    """
    k = np.asarray(k, dtype=float).reshape(-1)

    def fn(pts):
        return (sampling_vectors(model, pts, array) @ k) ** 2

    values, mask = _evaluate_on_grid(model, array, grid, fn)
    return MapResult(grid, values, mask, "noise_impact")


def delta_map(
    model: FieldModel,
    array: SensorArray,
    k: np.ndarray,
    s: np.ndarray,
    grid: GridSpec,
) -> MapResult:
    """Signal-to-noise ratio delta for a noise source at each grid point.

    Exactly silenced cells carry +inf and are flagged in the mask together
    with singular cells.
    """
    k = np.asarray(k, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    sk = abs(float(s @ k))
    n_count = s.shape[0]
    s_bar = np.abs(s).sum() / n_count

    def fn(pts):
        nvecs = sampling_vectors(model, pts, array)
        n_bar = np.abs(nvecs).sum(axis=1) / n_count
        nk = np.abs(nvecs @ k)
        with np.errstate(divide="ignore"):
            return (sk / s_bar) * n_bar / nk

    values, mask = _evaluate_on_grid(model, array, grid, fn)
    mask = mask | ~np.isfinite(values)
    return MapResult(grid, values, mask, "delta")


def delta_at(model, array, k, s, points) -> np.ndarray:
    """delta for noise sources at explicit points (vectorized helper)."""
    k = np.asarray(k, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    sk = abs(float(s @ k))
    s_bar = np.abs(s).sum() / s.shape[0]
    nvecs = sampling_vectors(model, np.atleast_2d(points), array)
    n_bar = np.abs(nvecs).sum(axis=1) / s.shape[0]
    with np.errstate(divide="ignore"):
        return (sk / s_bar) * n_bar / np.abs(nvecs @ k)


def _minimize_over_support(
    point_fn,
    model: FieldModel,
    array: SensorArray,
    support,
    resolution: int,
    refine_rounds: int,
) -> tuple[float, np.ndarray]:
    """Deterministic grid scan over the support's bounding box (cells outside
    the support or on sensor singularities are skipped) followed by rounds of
    per-axis coordinate descent with shrinking step."""
    from .noise import UnionSupport

    if isinstance(support, UnionSupport):
        # search each part at full resolution; small disjoint parts would be
        # under-resolved by one scan over the union's bounding box
        results = [
            _minimize_over_support(point_fn, model, array, part, resolution, refine_rounds)
            for part in support.parts
        ]
        return min(results, key=lambda item: item[0])

    lo, hi = support.bounding_box()
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    dim = lo.size
    span = hi - lo
    if np.all(span <= 0):  # point support
        pt = lo.copy()
        return float(point_fn(pt[None, :])[0]), pt

    axes = [
        np.linspace(lo[d], hi[d], resolution) if span[d] > 0 else np.array([lo[d]])
        for d in range(dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.reshape(-1) for m in mesh])
    inside = support.contains(pts)
    if model.singular:
        diff = pts[:, None, :] - array.positions[None, :, :]
        inside &= np.sqrt((diff**2).sum(-1)).min(axis=1) > _SINGULAR_GUARD
    pts = pts[inside]
    if pts.shape[0] == 0:
        raise ValueError("no admissible grid point inside the noise region")
    vals = point_fn(pts)
    i0 = int(np.argmin(vals))
    best_pt, best_val = pts[i0].copy(), float(vals[i0])

    step = span / resolution
    for _ in range(refine_rounds):
        for d in range(dim):
            if span[d] <= 0:
                continue
            offs = np.linspace(-step[d], step[d], 5)
            cand = np.tile(best_pt, (offs.size, 1))
            cand[:, d] += offs
            keep = support.contains(cand)
            if model.singular:
                diff = cand[:, None, :] - array.positions[None, :, :]
                keep &= np.sqrt((diff**2).sum(-1)).min(axis=1) > _SINGULAR_GUARD
            cand = cand[keep]
            if cand.shape[0] == 0:
                continue
            cvals = point_fn(cand)
            j = int(np.argmin(cvals))
            if cvals[j] < best_val:
                best_val, best_pt = float(cvals[j]), cand[j].copy()
        step = step / 2.0
    return best_val, best_pt


def worst_case_delta(
    model: FieldModel,
    array: SensorArray,
    k: np.ndarray,
    s: np.ndarray,
    support,
    resolution: int = 64,
    refine_rounds: int = 3,
) -> tuple[float, np.ndarray]:
    """Minimum of delta over a bounded noise region and its location."""
    return _minimize_over_support(
        lambda pts: delta_at(model, array, k, s, pts),
        model,
        array,
        support,
        resolution,
        refine_rounds,
    )


def worst_case_coupling(
    model: FieldModel,
    array: SensorArray,
    k: np.ndarray,
    support,
    resolution: int = 64,
    refine_rounds: int = 3,
) -> tuple[float, np.ndarray]:
    """Maximum of |<n(x), k>| over a noise region and its location.

    This is the worst case for the decoherence rate: the source position that
    forces the shortest optimal interrogation time.
    """
    k = np.asarray(k, dtype=float).reshape(-1)

    def neg_coupling(pts):
        return -np.abs(sampling_vectors(model, pts, array) @ k)

    val, pt = _minimize_over_support(
        neg_coupling, model, array, support, resolution, refine_rounds
    )
    return -val, pt


# ---------------------------------------------------------------------------
# Scaling and convergence studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRow:
    m: int
    n_sensors: int
    sensitivity: float
    delta: float
    t_opt: float


@dataclass(frozen=True)
class ScalingResult:
    """Per-m protection/sensitivity trade-off and the fitted exponent kappa
    in delta ∝ S^(-kappa)."""

    rows: tuple
    kappa: float
    fit_r2: float

    def as_arrays(self):
        m = np.array([r.m for r in self.rows])
        s = np.array([r.sensitivity for r in self.rows])
        d = np.array([r.delta for r in self.rows])
        return m, s, d


def fit_power_law(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and R^2 of log y against log x."""
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = ((ly - pred) ** 2).sum()
    ss_tot = ((ly - ly.mean()) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(r2)


@dataclass(frozen=True)
class TwoCircleScalingConfig:
    """Geometry for the two-circle grid-silencing scaling study.

    Sensors sit on two concentric circles around the origin; the signal is a
    fixed external source; silenced points cover a disc on the far side.
    """

    r_inner: float = 1.0
    r_outer: float = 1.3
    signal_position: tuple = (-1.5, 0.0)
    disc_center: tuple = (3.2, 0.0)
    disc_radius: float = 0.25
    eta: float = 1.0


def two_circle_scaling_study(
    m_values,
    c: int,
    sigma: float,
    config: TwoCircleScalingConfig = TwoCircleScalingConfig(),
    resolution: int = 64,
) -> ScalingResult:
    """Silence m disc points with N = m + c sensors and track S, worst-case
    delta, and the optimal time as m grows."""
    from .noise import BallSupport

    model = FieldModel.inverse_power(config.eta)
    support = BallSupport(np.asarray(config.disc_center, float), config.disc_radius)
    rows = []
    for m in m_values:
        n = m + c
        array = two_circles_array((n + 1) // 2, n // 2, config.r_inner, config.r_outer)
        s = sampling_vector(model, np.asarray(config.signal_position, float), array)
        if m == 0:
            sub = InsensitiveSubspace.empty(array.n_sensors)
        else:
            pts = halton_disc(m, config.disc_center, config.disc_radius)
            sub = grid_silencer(model, array, pts)
        k = design_probe(s, sub)
        d_min, x_min = worst_case_delta(model, array, k, s, support, resolution=resolution)
        n_wc = sampling_vector(model, x_min, array)
        met = probe_metrics(s, n_wc, k)
        rate = qfi_rate_and_topt(s, n_wc, k, sigma)
        rows.append(ScalingRow(m, array.n_sensors, met.sensitivity, d_min, rate.t_opt))
    rows = tuple(rows)
    fitted = [r for r in rows if np.isfinite(r.delta) and r.delta > 0 and r.sensitivity > 0]
    s_arr = np.array([r.sensitivity for r in fitted])
    d_arr = np.array([r.delta for r in fitted])
    slope, r2 = fit_power_law(s_arr, d_arr)
    return ScalingResult(rows=rows, kappa=-slope, fit_r2=r2)


@dataclass(frozen=True)
class LineScalingConfig:
    """1-D analogue: sensors on a segment, signal left, noise disc right."""

    sensor_start: float = -0.5
    sensor_stop: float = 0.5
    signal_position: float = -1.0
    noise_center: float = 1.0
    noise_halfwidth: float = 0.05
    eta: float = 1.0


def line_scaling_study(
    m_values,
    c: int,
    sigma: float,
    config: LineScalingConfig = LineScalingConfig(),
    resolution: int = 512,
) -> ScalingResult:
    from .noise import BoxSupport

    model = FieldModel.inverse_power(config.eta)
    support = BoxSupport(
        np.array([config.noise_center - config.noise_halfwidth]),
        np.array([config.noise_center + config.noise_halfwidth]),
    )
    rows = []
    for m in m_values:
        n = m + c
        array = line_array(n, config.sensor_start, config.sensor_stop)
        s = sampling_vector(model, [config.signal_position], array)
        pts = _line_points(m, config.noise_center, config.noise_halfwidth)
        sub = (
            InsensitiveSubspace.empty(n)
            if m == 0
            else grid_silencer(model, array, pts)
        )
        k = design_probe(s, sub)
        d_min, x_min = worst_case_delta(model, array, k, s, support, resolution=resolution)
        n_wc = sampling_vector(model, x_min, array)
        met = probe_metrics(s, n_wc, k)
        rate = qfi_rate_and_topt(s, n_wc, k, sigma)
        rows.append(ScalingRow(m, n, met.sensitivity, d_min, rate.t_opt))
    rows = tuple(rows)
    fitted = [r for r in rows if np.isfinite(r.delta) and r.delta > 0 and r.sensitivity > 0]
    slope, r2 = fit_power_law(
        np.array([r.sensitivity for r in fitted]), np.array([r.delta for r in fitted])
    )
    return ScalingResult(rows=rows, kappa=-slope, fit_r2=r2)


def _line_points(m: int, center: float, halfwidth: float) -> np.ndarray:
    if m == 1:
        return np.array([[center]])
    return np.linspace(center - halfwidth, center + halfwidth, m).reshape(-1, 1)


@dataclass(frozen=True)
class HeisenbergLineConfig:
    """Line sensor embedded in the plane with signal and silenced cluster on
    opposite sides.

    The couplings of signal and noise concentrate on different parts of the
    segment, so the retained sensitivity converges by N ~ 20 and the
    noiseless QFI shows its quadratic growth cleanly over the study range.
    Sensors sit at cell midpoints for the same reason.
    """

    sensor_start: float = -0.5
    sensor_stop: float = 0.5
    signal_position: tuple = (-0.3, -0.25)
    noise_center: tuple = (0.3, 0.25)
    noise_halfwidth: float = 0.04
    m: int = 5
    eta: float = 1.0


def heisenberg_line_study(
    n_values,
    t: float = 1.0,
    config: HeisenbergLineConfig = HeisenbergLineConfig(),
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Noiseless DFS QFI versus sensor count and its log-log growth exponent.

    Returns (N values, QFI values, exponent, fit R^2).
    """
    model = FieldModel.inverse_power(config.eta)
    m = config.m
    cx, cy = config.noise_center
    pts = np.column_stack(
        [np.linspace(cx - config.noise_halfwidth, cx + config.noise_halfwidth, m), np.full(m, cy)]
    )
    ns = np.asarray(list(n_values), dtype=int)
    qfis = np.empty(ns.size)
    for i, n in enumerate(ns):
        h = (config.sensor_stop - config.sensor_start) / n
        xs = config.sensor_start + h * (np.arange(n) + 0.5)
        array = SensorArray(np.column_stack([xs, np.zeros(n)]))
        s = sampling_vector(model, np.asarray(config.signal_position, float), array)
        k = design_probe(s, grid_silencer(model, array, pts))
        qfis[i] = 4.0 * float(s @ k) ** 2 * t * t
    exponent, r2 = fit_power_law(ns.astype(float), qfis)
    return ns, qfis, exponent, r2


@dataclass(frozen=True)
class ConvergenceRow:
    n_sensors: int
    s_bar: float
    n_bar: float
    sensitivity: float
    delta: float


@dataclass(frozen=True)
class ConvergenceResult:
    """Figure-of-merit scalars versus sensor count for the line geometry,
    plus closed-form QFI curves predicted from the largest-N scalars."""

    rows: tuple
    m: int
    sigma: float
    reference_n: int
    times: np.ndarray
    qfi_curves: dict       # n -> F(t) computed from that n's own scalars
    predicted_curves: dict  # n -> F(t) extrapolated from the reference scalars


def convergence_study(
    n_values,
    m: int,
    sigma: float,
    times=None,
    config: LineScalingConfig = LineScalingConfig(),
) -> ConvergenceResult:
    """Track s_bar, n_bar, S, delta while the line sensor grows.

    The noise source sits at the fixed worst-case-free position
    ``config.noise_center``; the m silenced points straddle it.  The largest
    N serves as the reference for the extrapolated QFI prediction

        F(N, t) = 4 s_bar^2 S^2 N^2 t^2 exp(-4 sigma^2 (n_bar S N / delta)^2 t^2).
    """
    model = FieldModel.inverse_power(config.eta)
    times = np.linspace(0.0, 2.0, 81) if times is None else np.asarray(times, float)
    # silenced cluster sits next to the reference source, not on it, so the
    # reported signal-to-noise ratio stays finite
    hw = config.noise_halfwidth
    pts = _line_points(m, config.noise_center + 2.0 * hw, hw)
    rows = []
    for n in n_values:
        array = line_midpoints_array(n, config.sensor_start, config.sensor_stop)
        s = sampling_vector(model, [config.signal_position], array)
        sub = InsensitiveSubspace.empty(n) if m == 0 else grid_silencer(model, array, pts)
        k = design_probe(s, sub)
        nvec = sampling_vector(model, [config.noise_center], array)
        met = probe_metrics(s, nvec, k)
        rows.append(ConvergenceRow(n, met.s_bar, met.n_bar, met.sensitivity, met.delta))
    rows = tuple(rows)
    ref = rows[-1]

    def closed_curve(row: ConvergenceRow, n: int) -> np.ndarray:
        nk = row.n_bar * row.sensitivity * n / row.delta if np.isfinite(row.delta) else 0.0
        amp = 4.0 * (row.s_bar * row.sensitivity * n) ** 2
        return amp * times**2 * np.exp(-4.0 * (sigma * nk) ** 2 * times**2)

    qfi_curves = {row.n_sensors: closed_curve(row, row.n_sensors) for row in rows}
    predicted = {row.n_sensors: closed_curve(ref, row.n_sensors) for row in rows}
    return ConvergenceResult(
        rows=rows,
        m=m,
        sigma=sigma,
        reference_n=ref.n_sensors,
        times=times,
        qfi_curves=qfi_curves,
        predicted_curves=predicted,
    )


# ---------------------------------------------------------------------------
# Full-measure rank check and periodic-phase sweep
# ---------------------------------------------------------------------------


def full_measure_rank_check(
    model: FieldModel,
    array: SensorArray,
    support,
    samples: int,
    tol: float = 1e-12,
    seed: int = 0,
    signal: np.ndarray | None = None,
) -> tuple[int, float]:
    """Numerical rank of the noise vectors drawn from a positive-volume area,
    and the residual fraction of the signal outside their span.

    A full-rank result means no probe can be silenced against the whole area
    while retaining signal sensitivity; the residual quantifies what is left.
    Rank counts singular values above ``tol * sigma_max``.
    """
    if samples < array.n_sensors:
        raise ValueError("need at least N samples to probe the rank")
    rng = stream(seed, "rank_check")
    pts = support.sample_uniform(rng, samples)
    if model.singular:
        # resample anything that collided with a sensor
        for _ in range(16):
            diff = pts[:, None, :] - array.positions[None, :, :]
            bad = np.sqrt((diff**2).sum(-1)).min(axis=1) < _SINGULAR_GUARD
            if not bad.any():
                break
            pts[bad] = support.sample_uniform(rng, int(bad.sum()))
    mat = sampling_vectors(model, pts, array)
    sv = np.linalg.svd(mat, compute_uv=False)
    rank = int((sv > tol * sv[0]).sum()) if sv[0] > 0 else 0
    if signal is None:
        residual = np.nan
    else:
        s = np.asarray(signal, dtype=float).reshape(-1)
        _, _, vt = np.linalg.svd(mat, full_matrices=False)
        basis = vt[:rank]
        s_perp = s - basis.T @ (basis @ s)
        residual = float(np.linalg.norm(s_perp) / np.linalg.norm(s))
    return rank, residual


@dataclass(frozen=True)
class PhaseSweepResult:
    max_impact: float
    classification: str  # "PERFECT" | "PARTIAL"
    phis: np.ndarray
    impacts: np.ndarray


def phase_sweep(
    array: SensorArray,
    k: np.ndarray,
    wavevector,
    phis=None,
    tol: float = 1e-10,
) -> PhaseSweepResult:
    """Noise coupling of a periodic source over a full phase sweep.

    A probe silenced at phase 0 stays silenced for every phase exactly when
    it is orthogonal to both the sine and cosine vectors of the wavevector;
    the sweep reports the worst coupling and classifies PERFECT when it stays
    below ``tol``.
    """
    k = np.asarray(k, dtype=float).reshape(-1)
    w = np.asarray(wavevector, dtype=float).reshape(-1)
    phis = np.linspace(0.0, 2.0 * np.pi, 360, endpoint=False) if phis is None else np.asarray(phis, float)
    dots = array.positions @ w
    impacts = (np.sin(dots[None, :] + phis[:, None]) @ k) ** 2
    worst = float(impacts.max())
    return PhaseSweepResult(
        max_impact=worst,
        classification="PERFECT" if worst < tol else "PARTIAL",
        phis=phis,
        impacts=impacts,
    )
