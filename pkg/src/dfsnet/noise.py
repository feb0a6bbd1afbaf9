"""Noise-source probability laws, seeded sampling, and the first-order
Gaussian pushforward onto sampling space.

A noise source is a pair (strength beta, position x); its effect on the probe
is governed by beta * <n(x), k>.  Strength and position are constant during a
single run and fluctuate between runs according to one of the distribution
classes below.  Sampling is counter-based: a fixed (distribution, seed, count)
triple always yields the same stream, regardless of what else was drawn.

Truncation convention: position blocks are truncated radially (rejection);
strengths are never truncated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, RejectionStall
from .geometry import FieldModel, SensorArray, sampling_map_jacobian, sampling_vector
from .rng import stream

_STALL_ACCEPTANCE = 1e-6


# ---------------------------------------------------------------------------
# Position supports: the regions a worst-case search or a rank check has to
# cover.  Each support can report a bounding box, test membership, and draw
# uniform points.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointSupport:
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(-1))

    @property
    def dim(self) -> int:
        return self.point.shape[0]

    def bounding_box(self):
        return self.point.copy(), self.point.copy()

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all(np.abs(pts - self.point) < 1e-12, axis=-1)

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.tile(self.point, (count, 1))


@dataclass(frozen=True)
class BallSupport:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def contains(self, pts: np.ndarray) -> np.ndarray:
        d2 = ((np.atleast_2d(pts) - self.center) ** 2).sum(-1)
        return d2 <= self.radius**2 * (1 + 1e-12)

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return _rejection_box(self, rng, count)


@dataclass(frozen=True)
class BoxSupport:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float).reshape(-1))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float).reshape(-1))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))


@dataclass(frozen=True)
class ShellSupport:
    """Spherical shell r_min <= |x - center| <= r_max."""

    center: np.ndarray
    r_min: float
    r_max: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def bounding_box(self):
        return self.center - self.r_max, self.center + self.r_max

    def contains(self, pts: np.ndarray) -> np.ndarray:
        d = np.sqrt(((np.atleast_2d(pts) - self.center) ** 2).sum(-1))
        return (d >= self.r_min * (1 - 1e-12)) & (d <= self.r_max * (1 + 1e-12))

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return _rejection_box(self, rng, count)


@dataclass(frozen=True)
class CylinderSupport:
    """Cylinder along the z axis: lateral radius about (x0, y0), z in [z0, z1].

    Only defined in 3-D.
    """

    base_center: np.ndarray  # (x0, y0, z0)
    radius: float
    length: float

    def __post_init__(self):
        c = np.asarray(self.base_center, dtype=float).reshape(-1)
        if c.shape[0] != 3:
            raise ValueError("cylinder support is 3-D only")
        object.__setattr__(self, "base_center", c)

    @property
    def dim(self) -> int:
        return 3

    def bounding_box(self):
        c = self.base_center
        lo = np.array([c[0] - self.radius, c[1] - self.radius, c[2]])
        hi = np.array([c[0] + self.radius, c[1] + self.radius, c[2] + self.length])
        return lo, hi

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        c = self.base_center
        lat = (pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2
        ok_lat = lat <= self.radius**2 * (1 + 1e-12)
        ok_z = (pts[:, 2] >= c[2] - 1e-12) & (pts[:, 2] <= c[2] + self.length + 1e-12)
        return ok_lat & ok_z

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        c = self.base_center
        r = self.radius * np.sqrt(rng.uniform(size=count))
        phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
        z = c[2] + rng.uniform(0.0, self.length, size=count)
        return np.column_stack([c[0] + r * np.cos(phi), c[1] + r * np.sin(phi), z])


@dataclass(frozen=True)
class UnionSupport:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def bounding_box(self):
        los, his = zip(*(p.bounding_box() for p in self.parts))
        return np.min(los, axis=0), np.max(his, axis=0)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        ok = np.zeros(pts.shape[0], dtype=bool)
        for p in self.parts:
            ok |= p.contains(pts)
        return ok

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        # equal weight per part; good enough for rank checks and searches
        splits = np.array_split(np.arange(count), len(self.parts))
        out = [p.sample_uniform(rng, len(ix)) for p, ix in zip(self.parts, splits) if len(ix)]
        return np.vstack(out)


def _rejection_box(support, rng: np.random.Generator, count: int) -> np.ndarray:
    lo, hi = support.bounding_box()
    out = np.empty((0, support.dim))
    tried = 0
    while out.shape[0] < count:
        batch = max(4 * (count - out.shape[0]), 128)
        pts = rng.uniform(lo, hi, size=(batch, support.dim))
        keep = pts[support.contains(pts)]
        out = np.vstack([out, keep])
        tried += batch
        if tried > 64 and out.shape[0] < _STALL_ACCEPTANCE * tried:
            raise RejectionStall("uniform rejection sampling accepted almost nothing")
    return out[:count]


# ---------------------------------------------------------------------------
# Sampled noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleSet:
    """Strength/position draws for one noise source: betas (M,), positions (M, D)."""

    betas: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return self.betas.shape[0]


class NoiseDistribution:
    """Base class; concrete laws implement sample() and describe themselves."""

    dim: int

    def sample(self, seed: int, count: int) -> SampleSet:
        raise NotImplementedError

    def position_support(self):
        raise NotImplementedError

    def strength_std(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FixedPositionGaussianStrength(NoiseDistribution):
    """Source pinned at one position with normally distributed strength."""

    position: np.ndarray
    mean: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(-1))
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def dim(self) -> int:
        return self.position.shape[0]

    def sample(self, seed: int, count: int) -> SampleSet:
        rng = stream(seed, "noise.fixed")
        betas = self.mean + self.sigma * rng.standard_normal(count)
        return SampleSet(betas, np.tile(self.position, (count, 1)))

    def position_support(self):
        return PointSupport(self.position)

    def strength_std(self) -> float:
        return self.sigma

    def to_dict(self) -> dict:
        return {
            "kind": "fixed_position",
            "position": self.position.tolist(),
            "strength_mean": self.mean,
            "strength_sigma": self.sigma,
        }


@dataclass(frozen=True)
class TruncatedGaussianSource(NoiseDistribution):
    """Jointly Gaussian (strength, position) with radial position truncation.

    ``mean`` is the (D+1)-vector (beta, x_1..x_D) and ``cov`` its covariance.
    When ``position_radius`` is set, positions are rejection-sampled until
    they fall inside the ball of that radius around the mean position; the
    strength block is never truncated.
    """

    mean: np.ndarray
    cov: np.ndarray
    position_radius: float | None = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("cov must be (D+1, D+1) to match the mean")
        if not np.allclose(cov, cov.T):
            raise ValueError("cov must be symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig.min() < -1e-12 * max(eig.max(), 1.0):
            raise ValueError("cov must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0] - 1

    def sample(self, seed: int, count: int) -> SampleSet:
        rng = stream(seed, "noise.truncgauss")
        # eigenvalue square root handles semidefinite covariances
        w, v = np.linalg.eigh(self.cov)
        root = v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
        out = np.empty((0, self.mean.size))
        tried = 0
        while out.shape[0] < count:
            batch = max(2 * (count - out.shape[0]), 256)
            z = rng.standard_normal((batch, self.mean.size))
            draws = self.mean + z @ root.T
            if self.position_radius is not None:
                d2 = ((draws[:, 1:] - self.mean[1:]) ** 2).sum(-1)
                draws = draws[d2 <= self.position_radius**2]
            out = np.vstack([out, draws])
            tried += batch
            if tried >= 4096 and out.shape[0] < _STALL_ACCEPTANCE * tried:
                raise RejectionStall(
                    "truncated Gaussian acceptance rate below 1e-6; widen the radius"
                )
        out = out[:count]
        return SampleSet(out[:, 0].copy(), out[:, 1:].copy())

    def position_support(self):
        if self.position_radius is None:
            # effectively unbounded; cover +-6 sigma per axis
            sd = np.sqrt(np.diag(self.cov)[1:])
            return BoxSupport(self.mean[1:] - 6 * sd, self.mean[1:] + 6 * sd)
        return BallSupport(self.mean[1:], self.position_radius)

    def strength_std(self) -> float:
        return float(np.sqrt(self.cov[0, 0]))

    def to_dict(self) -> dict:
        return {
            "kind": "truncated_gaussian",
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "position_radius": self.position_radius,
        }


@dataclass(frozen=True)
class UniformVolumeSource(NoiseDistribution):
    """Position uniform over a support shape; strength Gaussian."""

    support: object
    strength_mean: float = 0.0
    strength_sigma: float = 1.0

    @property
    def dim(self) -> int:
        return self.support.dim

    def sample(self, seed: int, count: int) -> SampleSet:
        rng = stream(seed, "noise.uniform")
        pos = self.support.sample_uniform(rng, count)
        betas = self.strength_mean + self.strength_sigma * rng.standard_normal(count)
        return SampleSet(betas, pos)

    def position_support(self):
        return self.support

    def strength_std(self) -> float:
        return self.strength_sigma

    def to_dict(self) -> dict:
        return {
            "kind": "uniform_volume",
            "support": support_to_dict(self.support),
            "strength_mean": self.strength_mean,
            "strength_sigma": self.strength_sigma,
        }


@dataclass(frozen=True)
class RadialShellSource(NoiseDistribution):
    """Isotropic shell: radius ~ N(r_mean, r_sigma) truncated to [r_min, r_max]
    weighted by 1/r^2, direction uniform on the sphere, strength Gaussian.

    The 1/r^2 geometric factor cancels the spherical volume Jacobian, so the
    radius law reduces to a plain truncated normal and is drawn by inverse
    transform; no rejection and no normalization constants are needed.
    """

    center: np.ndarray
    r_mean: float
    r_sigma: float
    r_min: float
    r_max: float
    strength_mean: float = 0.0
    strength_sigma: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if not (0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def sample(self, seed: int, count: int) -> SampleSet:
        rng = stream(seed, "noise.shell")
        lo = ndtr((self.r_min - self.r_mean) / self.r_sigma)
        hi = ndtr((self.r_max - self.r_mean) / self.r_sigma)
        u = rng.uniform(size=count)
        radii = self.r_mean + self.r_sigma * ndtri(lo + u * (hi - lo))
        dirs = rng.standard_normal((count, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pos = self.center + radii[:, None] * dirs
        betas = self.strength_mean + self.strength_sigma * rng.standard_normal(count)
        return SampleSet(betas, pos)

    def position_support(self):
        return ShellSupport(self.center, self.r_min, self.r_max)

    def strength_std(self) -> float:
        return self.strength_sigma

    def to_dict(self) -> dict:
        return {
            "kind": "radial_shell",
            "center": self.center.tolist(),
            "r_mean": self.r_mean,
            "r_sigma": self.r_sigma,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "strength_mean": self.strength_mean,
            "strength_sigma": self.strength_sigma,
        }


@dataclass(frozen=True)
class ProductNoise(NoiseDistribution):
    """Several independent noise sources acting simultaneously."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("product distribution needs at least one factor")

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    def sample(self, seed: int, count: int) -> list[SampleSet]:
        # per-factor subseeds derive from the factor index, so factors stay
        # independent and insertion order does not reshuffle earlier ones
        return [
            _resample_with_subseed(f, seed, j, count) for j, f in enumerate(self.factors)
        ]

    def position_support(self):
        return UnionSupport([f.position_support() for f in self.factors])

    def strength_std(self) -> float:
        return max(f.strength_std() for f in self.factors)

    def to_dict(self) -> dict:
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}


def _resample_with_subseed(factor: NoiseDistribution, seed: int, index: int, count: int) -> SampleSet:
    sub = np.random.SeedSequence(entropy=int(seed), spawn_key=(0x70D0C7, index))
    return factor.sample(int(sub.generate_state(1)[0]), count)


def sample_sets(dist: NoiseDistribution, seed: int, count: int) -> list[SampleSet]:
    """Sample any distribution as a list of per-source sample sets."""
    if count < 1:
        raise ValueError("count must be >= 1")
    drawn = dist.sample(seed, count)
    return drawn if isinstance(drawn, list) else [drawn]


# ---------------------------------------------------------------------------
# Serialization of distribution specs (scenario configuration documents)
# ---------------------------------------------------------------------------


def support_to_dict(support) -> dict:
    if isinstance(support, BallSupport):
        return {"shape": "ball", "center": support.center.tolist(), "radius": support.radius}
    if isinstance(support, BoxSupport):
        return {"shape": "box", "lo": support.lo.tolist(), "hi": support.hi.tolist()}
    if isinstance(support, CylinderSupport):
        return {
            "shape": "cylinder",
            "base_center": support.base_center.tolist(),
            "radius": support.radius,
            "length": support.length,
        }
    if isinstance(support, ShellSupport):
        return {
            "shape": "shell",
            "center": support.center.tolist(),
            "r_min": support.r_min,
            "r_max": support.r_max,
        }
    if isinstance(support, PointSupport):
        return {"shape": "point", "point": support.point.tolist()}
    raise ValueError(f"cannot serialize support {support!r}")


def support_from_dict(d: dict, path: str = "support"):
    shape = d.get("shape")
    try:
        if shape == "ball":
            return BallSupport(np.asarray(d["center"], float), float(d["radius"]))
        if shape == "box":
            return BoxSupport(np.asarray(d["lo"], float), np.asarray(d["hi"], float))
        if shape == "cylinder":
            return CylinderSupport(
                np.asarray(d["base_center"], float), float(d["radius"]), float(d["length"])
            )
        if shape == "shell":
            return ShellSupport(np.asarray(d["center"], float), float(d["r_min"]), float(d["r_max"]))
        if shape == "point":
            return PointSupport(np.asarray(d["point"], float))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing field") from None
    raise ConfigError(f"{path}.shape", f"unknown support shape {shape!r}")


def distribution_from_dict(d: dict, path: str = "noise.distribution") -> NoiseDistribution:
    kind = d.get("kind")
    try:
        if kind == "fixed_position":
            return FixedPositionGaussianStrength(
                position=np.asarray(d["position"], float),
                mean=float(d.get("strength_mean", 0.0)),
                sigma=float(d.get("strength_sigma", 1.0)),
            )
        if kind == "truncated_gaussian":
            return TruncatedGaussianSource(
                mean=np.asarray(d["mean"], float),
                cov=np.asarray(d["cov"], float),
                position_radius=(
                    None if d.get("position_radius") is None else float(d["position_radius"])
                ),
            )
        if kind == "uniform_volume":
            return UniformVolumeSource(
                support=support_from_dict(d["support"], path=f"{path}.support"),
                strength_mean=float(d.get("strength_mean", 0.0)),
                strength_sigma=float(d.get("strength_sigma", 1.0)),
            )
        if kind == "radial_shell":
            return RadialShellSource(
                center=np.asarray(d["center"], float),
                r_mean=float(d["r_mean"]),
                r_sigma=float(d["r_sigma"]),
                r_min=float(d["r_min"]),
                r_max=float(d["r_max"]),
                strength_mean=float(d.get("strength_mean", 0.0)),
                strength_sigma=float(d.get("strength_sigma", 1.0)),
            )
        if kind == "product":
            return ProductNoise(
                tuple(
                    distribution_from_dict(f, path=f"{path}.factors[{j}]")
                    for j, f in enumerate(d.get("factors", []))
                )
            )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"invalid distribution: {exc}") from None
    raise ConfigError(f"{path}.kind", f"unknown distribution kind {kind!r}")


# ---------------------------------------------------------------------------
# First-order Gaussian pushforward
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianImage:
    """Gaussian approximation of the sampling-space image of a noise law:
    mean F(mu) and covariance F_l Sigma F_l^T of rank at most D+1."""

    mean: np.ndarray
    covariance: np.ndarray


def pushforward_gaussian(
    model: FieldModel,
    array: SensorArray,
    mu,
    sigma: np.ndarray,
) -> GaussianImage:
    """Push a Gaussian (strength, position) law through the sampling map to
    first order.

    ``mu`` is the (D+1)-vector (beta, x); ``sigma`` its covariance.  The image
    is Gaussian with mean ``F(mu)`` and covariance ``F_l Sigma F_l^T``, where
    ``F_l`` is the Jacobian at ``mu``.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    beta0, x0 = mu[0], mu[1:]
    if sigma.shape != (mu.size, mu.size):
        raise ValueError("sigma must be (D+1, D+1)")
    jac = sampling_map_jacobian(model, array, beta0, x0)
    mean = beta0 * sampling_vector(model, x0, array)
    cov = jac @ sigma @ jac.T
    return GaussianImage(mean=mean, covariance=cov)
