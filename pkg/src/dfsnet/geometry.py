"""Physical space, sensor arrays, field models, and the sampling-space map.

A scenario lives in D-dimensional space (D in {1, 2, 3}).  A scalar field
emitted by a source at position ``x`` is felt by a sensor at position ``r``
with amplitude ``f(x, r)`` given by the chosen :class:`FieldModel`.  Stacking
the amplitudes at all N sensor positions maps a source into sampling space
R^N; these vectors are the raw material for every probe construction and
figure of merit in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoincidentSourceSensor, InvalidPresetParams

#: Hard guard around inverse-power singularities.  Amplitudes are never
#: clamped; a source this close to a sensor is an error.
EPS_POSITION = 1e-12

_FIELD_KINDS = ("inverse_power", "linear", "quadratic", "periodic")


@dataclass(frozen=True)
class FieldModel:
    """Spatial kernel of a scalar field.

    Variants:

    ``inverse_power``
        ``f(x, r) = 1 / |x - r|**eta`` with ``eta > 0``.
    ``linear``
        ``f(x, r) = x . r``.
    ``quadratic``
        ``f(x, r) = (x . r)**2``.
    ``periodic``
        ``f(x, r) = sin(x . r + phase)``; the "source position" argument is
        interpreted as a wavevector.
    """

    kind: str
    eta: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in _FIELD_KINDS:
            raise ValueError(f"unknown field kind: {self.kind!r}")
        if self.kind == "inverse_power" and not self.eta > 0:
            raise ValueError("inverse_power field requires eta > 0")

    @classmethod
    def inverse_power(cls, eta: float = 1.0) -> "FieldModel":
        return cls(kind="inverse_power", eta=float(eta))

    @classmethod
    def linear(cls) -> "FieldModel":
        return cls(kind="linear")

    @classmethod
    def quadratic(cls) -> "FieldModel":
        return cls(kind="quadratic")

    @classmethod
    def periodic(cls, phase: float = 0.0) -> "FieldModel":
        return cls(kind="periodic", phase=float(phase))

    @property
    def singular(self) -> bool:
        """Whether the kernel diverges when source and sensor coincide."""
        return self.kind == "inverse_power"

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "inverse_power":
            d["eta"] = self.eta
        if self.kind == "periodic":
            d["phase"] = self.phase
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FieldModel":
        return cls(
            kind=d["kind"],
            eta=float(d.get("eta", 1.0)),
            phase=float(d.get("phase", 0.0)),
        )


@dataclass(frozen=True)
class SensorArray:
    """Ordered list of N distinct sensor positions, shape ``(N, D)``.

    Positions are stored in physical length units.  Duplicate positions are
    rejected at construction: they reduce the effective rank of every
    sampling-space construction without adding information.

    Immutable after construction; safe to share across parallel workers.
    """

    positions: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2:
            raise ValueError("positions must be a (N, D) array")
        n, dim = pos.shape
        if n < 1:
            raise ValueError("need at least one sensor")
        if dim not in (1, 2, 3):
            raise ValueError("spatial dimension must be 1, 2 or 3")
        if not np.all(np.isfinite(pos)):
            raise ValueError("sensor positions must be finite")
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= EPS_POSITION:
            raise ValueError("sensor positions must be pairwise distinct")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_sensors(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def _as_points(x, dim: int) -> np.ndarray:
    """Coerce one position or a batch of positions to shape (M, D)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, dim) if arr.size == dim else arr.reshape(-1, 1)
    if arr.shape[-1] != dim:
        raise ValueError(f"expected positions of dimension {dim}, got shape {arr.shape}")
    return arr


def field_amplitude(model: FieldModel, source, sensor, eps_pos: float = EPS_POSITION) -> float:
    """Amplitude of the field from ``source`` at a single ``sensor`` position.

    Raises :class:`CoincidentSourceSensor` when an inverse-power source lies
    within ``eps_pos`` of the sensor.
    """
    source = np.asarray(source, dtype=float).reshape(-1)
    sensor = np.asarray(sensor, dtype=float).reshape(-1)
    if source.shape != sensor.shape:
        raise ValueError("source and sensor must have the same dimension")
    if model.kind == "inverse_power":
        r = np.linalg.norm(source - sensor)
        if r < eps_pos:
            raise CoincidentSourceSensor(
                f"source at {source} is within {eps_pos:g} of sensor at {sensor}"
            )
        return float(r ** (-model.eta))
    dot = float(source @ sensor)
    if model.kind == "linear":
        return dot
    if model.kind == "quadratic":
        return dot * dot
    return float(np.sin(dot + model.phase))


def sampling_vectors(
    model: FieldModel,
    sources,
    array: SensorArray,
    eps_pos: float = EPS_POSITION,
) -> np.ndarray:
    """Map a batch of source positions to sampling-space vectors, shape (M, N).

    Entry ``[w, i]`` is the amplitude of source ``w`` at sensor ``i``.  Used
    identically for signal and noise sources.
    """
    pts = _as_points(sources, array.dim)
    if model.kind == "inverse_power":
        diff = pts[:, None, :] - array.positions[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        if dist.min() < eps_pos:
            w, i = np.unravel_index(np.argmin(dist), dist.shape)
            raise CoincidentSourceSensor(
                f"source at {pts[w]} is within {eps_pos:g} of sensor {i}"
            )
        return dist ** (-model.eta)
    dots = pts @ array.positions.T
    if model.kind == "linear":
        return dots
    if model.kind == "quadratic":
        return dots**2
    return np.sin(dots + model.phase)


def sampling_vector(model: FieldModel, source, array: SensorArray) -> np.ndarray:
    """Sampling-space image of a single source, shape (N,)."""
    return sampling_vectors(model, source, array)[0]


def sampling_map_jacobian(
    model: FieldModel,
    array: SensorArray,
    beta0: float,
    position,
    step: float | None = None,
) -> np.ndarray:
    """Jacobian of ``F(beta, x) = beta * (f_1(x), ..., f_N(x))`` at a point.

    Returns an ``(N, D+1)`` matrix: column 0 is the strength derivative
    ``(f_1, ..., f_N)``, columns ``1..D`` are ``beta0 * df_i/dx_d``.  Central
    finite differences with ``h = 1e-6 * (1 + |(beta0, x)|)`` so every field
    variant is supported without symbolic derivatives; first-order accuracy is
    all downstream consumers need.
    """
    x0 = np.asarray(position, dtype=float).reshape(-1)
    if x0.size != array.dim:
        raise ValueError("position dimension does not match the array")
    v0 = np.concatenate(([float(beta0)], x0))
    h = step if step is not None else 1e-6 * (1.0 + np.linalg.norm(v0))

    def f_of(v: np.ndarray) -> np.ndarray:
        return v[0] * sampling_vector(model, v[1:], array)

    cols = []
    for d in range(v0.size):
        vp = v0.copy()
        vm = v0.copy()
        vp[d] += h
        vm[d] -= h
        cols.append((f_of(vp) - f_of(vm)) / (2.0 * h))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# Array presets.  Vertex orderings are deterministic and documented because
# some probe constructions (alternating signs) depend on them.
# ---------------------------------------------------------------------------


def line_array(n: int, start: float = -0.5, stop: float = 0.5) -> SensorArray:
    """``n`` equally spaced 1-D positions from ``start`` to ``stop`` inclusive."""
    if n < 1:
        raise InvalidPresetParams("line preset needs n >= 1")
    if not stop > start:
        raise InvalidPresetParams("line preset needs stop > start")
    xs = np.linspace(start, stop, n) if n > 1 else np.array([(start + stop) / 2.0])
    return SensorArray(xs.reshape(-1, 1))


def line_midpoints_array(n: int, start: float = -0.5, stop: float = 0.5) -> SensorArray:
    """``n`` 1-D positions at the centers of equal cells of [start, stop].

    Unlike :func:`line_array` the interval endpoints are excluded, so sums
    over sensors converge like midpoint quadrature as the array densifies;
    scaling studies that compare different N rely on that.
    """
    if n < 1:
        raise InvalidPresetParams("line_mid preset needs n >= 1")
    if not stop > start:
        raise InvalidPresetParams("line_mid preset needs stop > start")
    h = (stop - start) / n
    return SensorArray((start + h * (np.arange(n) + 0.5)).reshape(-1, 1))


def square_array(side: float = 2.0) -> SensorArray:
    """Four corners of an axis-aligned square, ordered cyclically.

    Order: (+s/2, +s/2), (+s/2, -s/2), (-s/2, -s/2), (-s/2, +s/2), so an
    alternating sign pattern puts opposite signs on every mirror pair.
    """
    if not side > 0:
        raise InvalidPresetParams("square preset needs side > 0")
    h = side / 2.0
    return SensorArray(np.array([[h, h], [h, -h], [-h, -h], [-h, h]]))


def hexagon_array(radius: float = 1.0) -> SensorArray:
    """Six vertices of a regular hexagon, counter-clockwise from angle 0."""
    if not radius > 0:
        raise InvalidPresetParams("hexagon preset needs radius > 0")
    ang = np.arange(6) * (np.pi / 3.0)
    return SensorArray(radius * np.column_stack([np.cos(ang), np.sin(ang)]))


#: A single honeycomb cell is a regular hexagon; kept as an alias so scenario
#: files can say what they mean.
honeycomb_array = hexagon_array


def two_circles_array(
    n_inner: int,
    n_outer: int,
    r_inner: float,
    r_outer: float,
    center=(0.0, 0.0),
    stagger: bool = True,
) -> SensorArray:
    """Sensors on two concentric circles.

    Inner-circle vertices come first (counter-clockwise from angle 0), then
    the outer circle, staggered by half a step when ``stagger`` is set so the
    two rings do not line up radially.
    """
    if n_inner < 1 or n_outer < 1:
        raise InvalidPresetParams("two_circles preset needs at least one sensor per circle")
    if not (0 < r_inner < r_outer):
        raise InvalidPresetParams("two_circles preset needs 0 < r_inner < r_outer")
    c = np.asarray(center, dtype=float)
    a1 = 2.0 * np.pi * np.arange(n_inner) / n_inner
    a2 = 2.0 * np.pi * np.arange(n_outer) / n_outer
    if stagger:
        a2 = a2 + np.pi / n_outer
    inner = c + r_inner * np.column_stack([np.cos(a1), np.sin(a1)])
    outer = c + r_outer * np.column_stack([np.cos(a2), np.sin(a2)])
    return SensorArray(np.vstack([inner, outer]))


def square_lattice_array(nx: int, ny: int, spacing: float = 1.0, origin=(0.0, 0.0)) -> SensorArray:
    """``nx`` by ``ny`` square lattice, row-major from ``origin``.

    The lattice spacing defaults to one length unit and is exposed because
    scenario geometries quote absolute distances.
    """
    if nx < 1 or ny < 1:
        raise InvalidPresetParams("square_lattice preset needs nx, ny >= 1")
    if not spacing > 0:
        raise InvalidPresetParams("square_lattice preset needs spacing > 0")
    ox, oy = float(origin[0]), float(origin[1])
    pts = [
        (ox + i * spacing, oy + j * spacing)
        for j in range(ny)
        for i in range(nx)
    ]
    return SensorArray(np.array(pts))


def cube3_array(spacing: float = 0.5) -> SensorArray:
    """3 x 3 x 3 cube of sensors with the center removed: 26 qubits.

    Lexicographic order over (x, y, z) in {-spacing, 0, +spacing}, skipping
    the origin.  The default spacing 0.5 gives the cube a volume of one.
    """
    if not spacing > 0:
        raise InvalidPresetParams("cube3 preset needs spacing > 0")
    vals = np.array([-spacing, 0.0, spacing])
    pts = [
        (x, y, z)
        for x in vals
        for y in vals
        for z in vals
        if not (x == 0.0 and y == 0.0 and z == 0.0)
    ]
    return SensorArray(np.array(pts))


_PRESETS = {
    "line": line_array,
    "line_mid": line_midpoints_array,
    "square": square_array,
    "hexagon": hexagon_array,
    "honeycomb": honeycomb_array,
    "two_circles": two_circles_array,
    "square_lattice": square_lattice_array,
    "cube3": cube3_array,
}


def preset_array(name: str, **params) -> SensorArray:
    """Build one of the named array presets; see the individual builders."""
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise InvalidPresetParams(
            f"unknown preset {name!r}; available: {sorted(_PRESETS)}"
        ) from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise InvalidPresetParams(f"bad parameters for preset {name!r}: {exc}") from None


def sunflower_disc(count: int, center=(0.0, 0.0), radius: float = 1.0) -> np.ndarray:
    """``count`` low-discrepancy points covering a disc, shape (count, 2).

    Golden-angle (sunflower) layout: deterministic, near-uniform area
    coverage for any count.  Used to place silenced points "homogeneously"
    inside a noise region.
    """
    if count < 1:
        raise InvalidPresetParams("sunflower_disc needs count >= 1")
    c = np.asarray(center, dtype=float)
    i = np.arange(count) + 0.5
    r = radius * np.sqrt(i / count)
    theta = i * np.pi * (3.0 - np.sqrt(5.0))
    return c + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _van_der_corput(count: int, base: int) -> np.ndarray:
    out = np.zeros(count)
    for i in range(count):
        x, denom, j = 0.0, 1.0, i + 1
        while j > 0:
            j, rem = divmod(j, base)
            denom *= base
            x += rem / denom
        out[i] = x
    return out


def halton_disc(count: int, center=(0.0, 0.0), radius: float = 1.0) -> np.ndarray:
    """Nested low-discrepancy disc coverage, shape (count, 2).

    Unlike the sunflower layout, every prefix of the Halton sequence is
    itself a homogeneous covering, so point sets for growing counts are
    nested.  Scaling studies rely on that: adding a silenced point must not
    reshuffle the ones already placed.
    """
    if count < 1:
        raise InvalidPresetParams("halton_disc needs count >= 1")
    c = np.asarray(center, dtype=float)
    u = _van_der_corput(count, 2)
    v = _van_der_corput(count, 3)
    r = radius * np.sqrt(u)
    theta = 2.0 * np.pi * v
    return c + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
