"""Array geometries, steering vectors, correlation and eigen-beamformer design.

Angles: azimuth is measured in the XY plane from the x-axis and elevation from
the XY plane.  A geometry carries a boresight azimuth; beamformer fields of view
and scan grids are offsets from it (a ULA on the x-axis looks along +y).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal.windows import taylor
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import SPEED_OF_LIGHT, InternalError, InvalidArgument

__all__ = [
    "ArrayGeometry",
    "DirectionOfArrival",
    "BeamformerBank",
    "EigenBeamformer",
    "direction_cosines",
    "element_delays",
    "angle_derivative",
    "steering_vector",
    "steering_matrix",
    "array_correlation",
    "beam_covariance",
    "beam_grid_weight",
    "design_beamformer",
    "beam_pattern",
    "peak_sidelobe_db",
    "write_geometry_csv",
    "read_geometry_csv",
    "write_weights_csv",
]


@dataclass(frozen=True)
class DirectionOfArrival:
    azimuth: float
    elevation: float = 0.0

    def __post_init__(self):
        if not -np.pi / 2 - 1e-15 <= self.elevation <= np.pi / 2 + 1e-15:
            raise InvalidArgument("elevation must lie in [-pi/2, pi/2]")
        # wrap azimuth onto [-pi, pi)
        object.__setattr__(self, "azimuth", float((self.azimuth + np.pi) % (2 * np.pi) - np.pi))


@dataclass(frozen=True)
class ArrayGeometry:
    """Element coordinates in meters, shape (L, 3)."""

    positions: np.ndarray
    kind: str = "custom"
    boresight: float = np.pi / 2
    spacing: float | None = None

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise InvalidArgument("positions must be an (L, 3) array with L >= 1")
        if not np.all(np.isfinite(p)):
            raise InvalidArgument("positions must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)
        if self.kind == "ula" and p.shape[0] > 1:
            d = np.diff(p, axis=0)
            step = np.linalg.norm(d, axis=1)
            if np.ptp(step) > 1e-12 or np.abs(np.cross(d[0], d)).max() > 1e-12 * max(step[0], 1.0):
                raise InvalidArgument("ULA elements must be collinear and equispaced")
        if self.kind == "uca":
            r = np.linalg.norm(p - p.mean(axis=0), axis=1)
            if np.ptp(r) > 1e-12:
                raise InvalidArgument("UCA elements must be equidistant from the centroid")

    @property
    def L(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def ula(cls, n: int, spacing: float, axis: str = "x", boresight: float | None = None):
        """Centered ULA along a coordinate axis."""
        ax = "xyz".index(axis)
        pos = np.zeros((n, 3))
        pos[:, ax] = (np.arange(n) - (n - 1) / 2) * spacing
        if boresight is None:
            boresight = np.pi / 2 if axis == "x" else 0.0
        return cls(pos, "ula", boresight, spacing)

    @classmethod
    def uca(cls, n: int, radius: float, boresight: float = np.pi / 2):
        """Uniform circular array in the XY plane centered at the origin."""
        ang = 2 * np.pi * np.arange(n) / n
        pos = np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(n)])
        return cls(pos, "uca", boresight, 2 * radius * np.sin(np.pi / n))

    def rotated(self, dphi: float) -> "ArrayGeometry":
        c, s = np.cos(dphi), np.sin(dphi)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        return ArrayGeometry(self.positions @ rot.T, "custom", self.boresight + dphi)


def direction_cosines(azimuth, elevation=0.0) -> np.ndarray:
    """Unit vectors (..., 3) for the given angles."""
    az, el = np.broadcast_arrays(np.asarray(azimuth, float), np.asarray(elevation, float))
    return np.stack([np.cos(az) * np.cos(el), np.sin(az) * np.cos(el), np.sin(el)], axis=-1)


def element_delays(geom: ArrayGeometry, doa: DirectionOfArrival) -> np.ndarray:
    """Per-element delays p . x_l / c in seconds (L,)."""
    return geom.positions @ direction_cosines(doa.azimuth, doa.elevation) / SPEED_OF_LIGHT


def angle_derivative(geom: ArrayGeometry, doa: DirectionOfArrival) -> np.ndarray:
    """Azimuth derivative of the element delays, s/rad (L,)."""
    az, el = doa.azimuth, doa.elevation
    x, y = geom.positions[:, 0], geom.positions[:, 1]
    return np.cos(el) * (y * np.cos(az) - x * np.sin(az)) / SPEED_OF_LIGHT


def steering_vector(geom: ArrayGeometry, doa: DirectionOfArrival, f: float) -> np.ndarray:
    if f <= 0:
        raise InvalidArgument("frequency must be positive")
    return np.exp(-2j * np.pi * f * element_delays(geom, doa))


def steering_matrix(geom: ArrayGeometry, azimuth, f: float, elevation=0.0) -> np.ndarray:
    """Steering vectors for a set of absolute azimuths, shape (L, n)."""
    u = direction_cosines(np.atleast_1d(azimuth), elevation)
    return np.exp(-2j * np.pi * f * (geom.positions @ u.T) / SPEED_OF_LIGHT)


def array_correlation(geom, doa1, doa2, f) -> float:
    """|a1^H a2| / L."""
    a1 = steering_vector(geom, doa1, f)
    a2 = steering_vector(geom, doa2, f)
    return float(np.abs(np.vdot(a1, a2)) / geom.L)


@dataclass(frozen=True)
class BeamformerBank:
    """Rows of ``weights`` are beams; ``raw`` holds the pre-taper orthonormal set."""

    raw: np.ndarray
    weights: np.ndarray
    fov: tuple
    taper: str
    eigenvalues: np.ndarray
    nodes: int

    @property
    def M(self) -> int:
        return self.raw.shape[0]


def _uniform(theta):
    return np.ones_like(theta)


def beam_grid_weight(fov, n_beams: int, L: int, spacing_wl: float = 0.5,
                     width: float | None = None, tilt: float = 0.3) -> Callable:
    """Weight function concentrated on an orthogonal beam grid inside ``fov``.

    Narrow Gaussian bumps (in sine space) sit at beam centers spaced by
    1/(L d/lambda), the spacing at which uniform steering vectors are
    orthogonal.  Bump heights ramp by ``tilt`` so that eigenvalues separate.
    """
    u1, u2 = np.sin(fov[0]), np.sin(fov[1])
    du = 1.0 / (L * spacing_wl)
    if (n_beams - 1) * du > u2 - u1 + 1e-12:
        raise InvalidArgument("beam grid does not fit inside the field of view")
    centers = 0.5 * (u1 + u2) + (np.arange(n_beams) - (n_beams - 1) / 2) * du
    width = du / 80 if width is None else width
    heights = 1 + tilt * np.arange(n_beams)

    def w(theta):
        u = np.sin(theta)[..., None]
        bumps = heights * np.exp(-0.5 * ((u - centers) / width) ** 2) / width
        # cos(theta) turns the sine-space density into a density in theta
        return np.cos(theta) * bumps.sum(axis=-1)

    w.centers = centers
    return w


def beam_covariance(geom, fov, f, weight_fn=None, nodes: int = 721,
                    elevation: float = 0.0) -> np.ndarray:
    """Trapezoidal quadrature of the weighted steering-vector covariance over ``fov``."""
    th1, th2 = fov
    w = _uniform if weight_fn is None else weight_fn
    if th1 == th2:
        a = steering_matrix(geom, geom.boresight + th1, f, elevation)
        return a @ a.conj().T * float(w(np.array([th1]))[0])
    th = np.linspace(th1, th2, nodes)
    wt = np.asarray(w(th), dtype=float)
    if np.any(wt < 0):
        raise InvalidArgument("weight function must be non-negative on the field of view")
    A = steering_matrix(geom, geom.boresight + th, f, elevation)
    h = np.full(nodes, (th2 - th1) / (nodes - 1))
    h[[0, -1]] *= 0.5
    return (A * (wt * h)) @ A.conj().T


def _phase_normalize(V):
    V = V.copy()
    for m in range(V.shape[1]):
        k = int(np.argmax(np.abs(V[:, m]) > 1e-12 * np.abs(V[:, m]).max()))
        V[:, m] *= np.exp(-1j * np.angle(V[k, m]))
    return V


def design_beamformer(geom: ArrayGeometry, fov=(np.deg2rad(-50), np.deg2rad(48)), M: int = 8,
                      weight_fn=None, taper: str = "taylor", nbar: int = 4, sll: float = 35.0,
                      f: float = 24e9, min_nodes: int = 721, rtol: float = 1e-8,
                      max_nodes: int = 400_000) -> BeamformerBank:
    """Beams from the dominant eigenvectors of the field-of-view covariance.

    Quadrature nodes double from ``min_nodes`` until the top eigenvalues move by
    less than ``rtol`` (relative to the largest).  The taper multiplies the
    orthonormal eigenvectors element-wise afterwards.
    """
    if M > geom.L or M < 1:
        raise InvalidArgument(f"need 1 <= M <= L={geom.L}, got {M}")
    if fov[0] > fov[1]:
        raise InvalidArgument("field of view must satisfy theta1 <= theta2")
    nodes = min_nodes
    Q = beam_covariance(geom, fov, f, weight_fn, nodes)
    ev = np.linalg.eigvalsh(Q)[::-1]
    while fov[0] != fov[1]:
        n2 = 2 * nodes - 1
        Q2 = beam_covariance(geom, fov, f, weight_fn, n2)
        ev2 = np.linalg.eigvalsh(Q2)[::-1]
        nodes, Q = n2, Q2
        done = np.max(np.abs(ev2[:M] - ev[:M])) <= rtol * abs(ev2[0])
        ev = ev2
        if done or nodes > max_nodes:
            break
    tr = np.trace(Q).real
    if np.abs(Q - Q.conj().T).max() > 1e-10 * max(tr, 1e-300) / geom.L:
        raise InternalError("beam covariance lost Hermitian symmetry")
    vals, V = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    order = np.argsort(vals)[::-1]
    vals, V = vals[order], _phase_normalize(V[:, order])
    raw = V[:, :M].T.copy()
    if taper == "taylor":
        win = taylor(geom.L, nbar=nbar, sll=sll, norm=False)
    elif taper in (None, "none"):
        win = np.ones(geom.L)
    else:
        raise InvalidArgument(f"unknown taper {taper!r}")
    return BeamformerBank(raw, raw * win, tuple(fov), taper or "none", vals, nodes)


def beam_pattern(weights, geom, scan, f, elevation=0.0) -> np.ndarray:
    """Power response |w^H a(theta)|^2 for scan offsets from boresight; shape (M, n)."""
    W = np.atleast_2d(weights)
    A = steering_matrix(geom, geom.boresight + np.asarray(scan), f, elevation)
    return np.abs(W.conj() @ A) ** 2


def peak_sidelobe_db(pattern) -> float:
    """Highest response outside the mainlobe (peak to first nulls), dB re peak."""
    p = np.asarray(pattern, dtype=float)
    k = int(np.argmax(p))
    i = k
    while i > 0 and p[i - 1] < p[i]:
        i -= 1
    j = k
    while j < p.size - 1 and p[j + 1] < p[j]:
        j += 1
    side = np.concatenate([p[:i], p[j + 1:]])
    if side.size == 0:
        return -np.inf
    return float(10 * np.log10(side.max() / p[k]))


class EigenBeamformer(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` designs the bank, ``transform`` forms beam outputs.

    ``transform`` takes snapshots as rows, shape (n_samples, L), and returns
    (n_samples, M) beam outputs w^H x.
    """

    def __init__(self, geometry=None, fov=(np.deg2rad(-50), np.deg2rad(48)), n_beams=8,
                 weight="uniform", taper="taylor", nbar=4, sll=35.0, frequency=24e9):
        self.geometry = geometry
        self.fov = fov
        self.n_beams = n_beams
        self.weight = weight
        self.taper = taper
        self.nbar = nbar
        self.sll = sll
        self.frequency = frequency

    def _weight_fn(self):
        if self.weight in (None, "uniform"):
            return None
        if self.weight == "beam_grid":
            g = self.geometry
            wl = SPEED_OF_LIGHT / self.frequency
            return beam_grid_weight(self.fov, self.n_beams, g.L, g.spacing / wl)
        if callable(self.weight):
            return self.weight
        raise InvalidArgument(f"unknown weight {self.weight!r}")

    def fit(self, X=None, y=None):
        if self.geometry is None:
            raise InvalidArgument("EigenBeamformer needs a geometry")
        self.bank_ = design_beamformer(self.geometry, self.fov, self.n_beams, self._weight_fn(),
                                       self.taper, self.nbar, self.sll, self.frequency)
        self.weights_ = self.bank_.weights
        self.n_features_in_ = self.geometry.L
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise InvalidArgument(f"expected snapshots of shape (n, {self.n_features_in_})")
        return X @ self.weights_.conj().T


def write_geometry_csv(geom: ArrayGeometry, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_m", "y_m", "z_m"])
        for row in geom.positions:
            w.writerow([format(v, ".17g") for v in row])


def read_geometry_csv(path, boresight: float = np.pi / 2) -> ArrayGeometry:
    pos = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ArrayGeometry(pos, "custom", boresight)


def write_weights_csv(bank: BeamformerBank, path, tapered: bool = True) -> None:
    W = bank.weights if tapered else bank.raw
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beam_index", "element_index", "re", "im"])
        for m in range(W.shape[0]):
            for l in range(W.shape[1]):
                w.writerow([m, l, format(W[m, l].real, ".17g"), format(W[m, l].imag, ".17g")])
