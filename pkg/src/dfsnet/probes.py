"""Probe-vector construction and figure-of-merit scalars.

A probe is a vector ``k`` in ``[-1, 1]^N``; it fixes the entangled sensor
state together with the spin-flip schedule that realizes non-integer entries.
The constructions here pick ``k`` orthogonal to an insensitive subspace
spanned by noise vectors (exactly decoherence-free for those sources) while
keeping as much signal overlap as the chosen normalization allows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidRatio, NoiseSpansFullSpace, SignalInNoiseSpace
from .geometry import FieldModel, SensorArray, sampling_map_jacobian, sampling_vectors

#: Shared relative SVD tolerance for every subspace construction.  A single
#: constant keeps "exact DFS" statements consistent across modules.
RANK_TOL = 1e-12

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class InsensitiveSubspace:
    """Orthonormal basis of a strict subspace Z of sampling space R^N.

    Probes orthogonal to Z are completely insensitive to every field vector
    inside Z.
    """

    basis: np.ndarray  # (N, z), orthonormal columns, z < N

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a (N, z) matrix")
        n, z = b.shape
        if z >= n:
            raise ValueError("insensitive subspace must be a strict subspace (z < N)")
        if z > 0:
            gram = b.T @ b
            if not np.allclose(gram, np.eye(z), atol=_ORTHO_TOL):
                raise ValueError("basis columns must be orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def empty(cls, n: int) -> "InsensitiveSubspace":
        return cls(np.zeros((n, 0)))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def project_out(self, v: np.ndarray) -> np.ndarray:
        """Component of ``v`` orthogonal to the subspace."""
        if self.dim == 0:
            return np.asarray(v, dtype=float).copy()
        return v - self.basis @ (self.basis.T @ v)


def insensitive_subspace(noise_vectors, rank_tol: float = RANK_TOL) -> InsensitiveSubspace:
    """Orthonormal basis of span{noise vectors} via SVD.

    Singular values below ``rank_tol * sigma_max`` count as zero.  Raises
    :class:`NoiseSpansFullSpace` when the numerical rank fills all of R^N.
    """
    mat = np.atleast_2d(np.asarray(noise_vectors, dtype=float))
    if mat.size == 0:
        raise ValueError("need at least one noise vector")
    n = mat.shape[1]
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    rank = int((s > rank_tol * s[0]).sum()) if s[0] > 0 else 0
    if rank >= n:
        raise NoiseSpansFullSpace(
            f"{mat.shape[0]} noise vectors span all of R^{n}; no protected probe exists"
        )
    return InsensitiveSubspace(vt[:rank].T)


def design_probe(
    s: np.ndarray,
    subspace: InsensitiveSubspace,
    mode: str = "infinity",
) -> np.ndarray:
    """Probe vector orthogonal to the insensitive subspace.

    ``mode="infinity"`` takes the signal component orthogonal to Z and
    normalizes it to unit infinity-norm.  ``mode="lp_optimal"`` instead
    maximizes the signal overlap <s, k> subject to ``|k_i| <= 1`` and
    ``k ⟂ Z`` (linear program); it typically needs flips on fewer qubits.

    Raises :class:`SignalInNoiseSpace` when the signal lies numerically
    inside Z, in which case every admissible probe is blind to it.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != subspace.ambient_dim:
        raise ValueError("signal vector length does not match the subspace")
    s_perp = subspace.project_out(s)
    sup = np.abs(s_perp).max()
    if sup < 1e-10 * np.abs(s).max():
        raise SignalInNoiseSpace(
            "signal vector lies inside the insensitive subspace"
        )
    if mode == "infinity":
        return s_perp / sup
    if mode == "lp_optimal":
        return _lp_probe(s, subspace)
    raise ValueError(f"unknown probe mode: {mode!r}")


def _lp_probe(s: np.ndarray, subspace: InsensitiveSubspace) -> np.ndarray:
    n = s.shape[0]
    a_eq = subspace.basis.T if subspace.dim > 0 else None
    b_eq = np.zeros(subspace.dim) if subspace.dim > 0 else None
    res = linprog(
        c=-s,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(-1.0, 1.0)] * n,
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"probe linear program failed: {res.message}")
    return np.asarray(res.x)


@dataclass(frozen=True)
class ProbeMetrics:
    """Average strengths, retained sensitivity, and signal-to-noise ratio.

    ``delta`` is infinite for an exactly silenced noise vector; when the
    probe is blind to signal and noise alike, ``delta`` is reported as 0
    with ``signal_silenced`` set instead of NaN.
    """

    s_bar: float
    n_bar: float
    sensitivity: float
    delta: float
    signal_silenced: bool = False


def probe_metrics(s: np.ndarray, n: np.ndarray, k: np.ndarray) -> ProbeMetrics:
    """Scalars s_bar = |s|_1/N, S = |<s,k>|/|s|_1, and the normalized
    signal-to-noise ratio delta = (|<s,k>|/s_bar) * (n_bar/|<n,k>|)."""
    s = np.asarray(s, dtype=float).reshape(-1)
    n = np.asarray(n, dtype=float).reshape(-1)
    k = np.asarray(k, dtype=float).reshape(-1)
    if not (s.shape == n.shape == k.shape):
        raise ValueError("s, n and k must have equal length")
    count = s.shape[0]
    s_bar = np.abs(s).sum() / count
    n_bar = np.abs(n).sum() / count
    sk = float(s @ k)
    nk = float(n @ k)
    sens = abs(sk) / (s_bar * count) if s_bar > 0 else 0.0
    noise_dead = abs(nk) < 1e-14 * np.linalg.norm(n) * np.linalg.norm(k)
    signal_dead = abs(sk) < 1e-14 * np.linalg.norm(s) * np.linalg.norm(k)
    if noise_dead and signal_dead:
        return ProbeMetrics(s_bar, n_bar, 0.0, 0.0, signal_silenced=True)
    if noise_dead:
        return ProbeMetrics(s_bar, n_bar, sens, np.inf)
    delta = (abs(sk) / s_bar) * (n_bar / abs(nk))
    return ProbeMetrics(s_bar, n_bar, sens, delta)


@dataclass(frozen=True)
class SphereConstruction:
    """Two-sensor probe silencing a whole sphere (circle in 2D) of sources.

    For ``c = 1`` the sphere degenerates to the perpendicular bisector plane
    of the two sensors; ``is_plane`` is set and ``center``/``radius`` hold the
    plane point and infinity.
    """

    k: np.ndarray
    center: np.ndarray
    radius: float
    is_plane: bool
    plane_normal: np.ndarray | None = None


def sphere_suppressing_pair(x1, x2, c: float, eta: float = 1.0) -> SphereConstruction:
    """Probe ``k = (1, -c**eta)`` for sensors at x1, x2 and its silenced locus.

    Sources at points x with |x - x2| = c * |x - x1| satisfy
    <n(x), k> = 0 exactly for the inverse-power field with exponent eta.
    That locus is the sphere of radius ``l*c/(1 - c**2)`` centered at
    ``x2 - c**2/(1 - c**2) * (x1 - x2)`` with ``l = |x1 - x2|``, for 0 < c < 1;
    for c = 1 it is the bisector plane between the sensors.
    """
    if not (0.0 < c <= 1.0):
        raise InvalidRatio("distance ratio must satisfy 0 < c <= 1")
    x1 = np.asarray(x1, dtype=float).reshape(-1)
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    if x1.shape != x2.shape:
        raise ValueError("sensor positions must have the same dimension")
    sep = x1 - x2
    length = np.linalg.norm(sep)
    if length <= 0:
        raise ValueError("sensors must be distinct")
    k = np.array([1.0, -(c**eta)])
    if c == 1.0:
        midpoint = (x1 + x2) / 2.0
        return SphereConstruction(
            k=k,
            center=midpoint,
            radius=np.inf,
            is_plane=True,
            plane_normal=sep / length,
        )
    radius = length * c / (1.0 - c * c)
    center = x2 - (c * c / (1.0 - c * c)) * sep
    return SphereConstruction(k=k, center=center, radius=radius, is_plane=False)


def mirror_charge_probe(array: SensorArray) -> np.ndarray:
    """Alternating probe ``k_i = (-1)^i`` in the array's vertex order.

    Meaningful for presets whose documented ordering walks the vertices so
    that neighbours alternate across the mirror surfaces (square, hexagon).
    """
    return (-1.0) ** np.arange(array.n_sensors)


def first_order_silencer(
    model: FieldModel,
    array: SensorArray,
    beta0: float,
    position,
) -> InsensitiveSubspace:
    """Insensitive subspace silencing a source's strength and position jitter
    to first order: the column span of the sampling-map Jacobian (dim <= D+1).

    The strength column is proportional to the source's own sampling vector,
    so the silenced subspace always contains the unperturbed source.
    """
    jac = sampling_map_jacobian(model, array, beta0, position)
    return insensitive_subspace(jac.T)


def grid_silencer(model: FieldModel, array: SensorArray, points) -> InsensitiveSubspace:
    """Insensitive subspace spanned by the sampling vectors of ``points``.

    More points than sensors are fine as long as their span is still a
    strict subspace (collinear sampling vectors are common in symmetric
    scenarios); the numerical rank decides.  Passing an empty point list
    yields the empty subspace (probe = plain normalized signal).
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return InsensitiveSubspace.empty(array.n_sensors)
    return insensitive_subspace(sampling_vectors(model, pts, array))


def flip_schedule(k: np.ndarray, t: float) -> list[tuple[int, float]]:
    """Spin-flip times realizing the probe ``k`` over a run of duration ``t``.

    Qubit i is flipped once at ``t_i = t * (1 + |k_i|) / 2``; entries with
    ``|k_i| = 1`` need no flip.  The sign of ``k_i`` is absorbed into the
    local basis label, so only the magnitude enters the schedule.
    """
    k = np.asarray(k, dtype=float).reshape(-1)
    if np.abs(k).max() > 1.0 + 1e-12:
        raise ValueError("probe entries must lie in [-1, 1]")
    out = []
    for i, ki in enumerate(np.abs(k)):
        if ki < 1.0:
            out.append((i, t * (1.0 + ki) / 2.0))
    return out
