"""Target ambiguity functions, Fisher information and Cramer-Rao bounds.

Per-target FIM for theta = (range, velocity, azimuth) under the real envelope
model mu_{i,l,j} = a_i b_i g x(T s_{lj}), with s_{lj} = t_j - 2r/c - phi_l,
g = gamma alpha(r)^2 ||zeta|| and a Gaussian x.  With the receive grid aligned
to the echo (s_{lj} = tau_j - phi_l) the derivatives are

    D_r   =  (4 pi^2 T^2 / (beta^2 c)) x o s
    D_v   = -(2 pi^2 T dT/dv / beta^2) x o s o s
    D_phi =  (2 pi^2 T^2 / beta^2) x o s o Phi

and FIM = (sum_i a_i^2 b_i^2 / sigma^2) g^2 sum_{l,j} D D^T.  The pathloss
derivative is neglected, as in the closed-form bounds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._validation import SPEED_OF_LIGHT, InvalidArgument
from .array import ArrayGeometry, DirectionOfArrival, angle_derivative, element_delays
from .scenario import Scenario, doppler_compression, doppler_compression_derivative
from .waveform import PulseEnvelope, evaluate

__all__ = [
    "TafInputs",
    "CrbReport",
    "taf_inputs",
    "taf_range",
    "taf_velocity",
    "taf_angle",
    "taf_generalized",
    "expected_taf",
    "fim_derivatives",
    "crb_block",
    "crb_report",
    "jrc_reverse_fim_extension",
    "numeric_fim",
    "write_crb_csv",
]

C = SPEED_OF_LIGHT


@dataclass(frozen=True)
class TafInputs:
    """Per-target received samples x (L, n), relative times t (L, n), angle derivative Phi (L,)."""

    x: np.ndarray
    t: np.ndarray
    Phi: np.ndarray
    R_n: np.ndarray

    def __post_init__(self):
        x, t = np.atleast_2d(self.x), np.atleast_2d(self.t)
        if x.shape != t.shape:
            raise InvalidArgument("x and t must have the same shape")
        L = x.shape[0]
        if np.shape(self.Phi) != (L,) or np.shape(self.R_n) != (L, L):
            raise InvalidArgument("Phi must be (L,) and R_n (L, L)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)


def taf_inputs(geom: ArrayGeometry, env: PulseEnvelope, r: float, v: float, doa: DirectionOfArrival,
               t_grid, R_n=None) -> TafInputs:
    """Sample a target's echo on an absolute receive grid ``t_grid`` (s)."""
    t_grid = np.asarray(t_grid, dtype=float)
    phi = element_delays(geom, doa)
    s = t_grid[None, :] - 2 * r / C - phi[:, None]
    x = evaluate(env, s, doppler_compression(v))
    R = np.eye(geom.L) if R_n is None else np.asarray(R_n, dtype=float)
    return TafInputs(x, s, angle_derivative(geom, doa), R)


def _inner(u_m, u_n, R_n):
    if u_m.shape != u_n.shape:
        raise InvalidArgument("mismatched TAF input shapes")
    R = np.asarray(R_n, dtype=float)
    if np.allclose(R, np.diag(np.diag(R))):
        d = np.diag(R)
        if np.any(d <= 0):
            raise InvalidArgument("noise covariance must be positive definite")
        return float(np.sum(u_n * (u_m / d[:, None])))
    try:
        cf = cho_factor(R)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgument("noise covariance must be positive definite") from exc
    return float(np.sum(u_n * cho_solve(cf, u_m)))


def taf_range(m: TafInputs, n: TafInputs) -> float:
    """(x_n o t_n)^T R^-1 (x_m o t_m), summed over samples."""
    return _inner(m.x * m.t, n.x * n.t, m.R_n)


def taf_velocity(m: TafInputs, n: TafInputs) -> float:
    return _inner(m.x * m.t**2, n.x * n.t**2, m.R_n)


def taf_angle(m: TafInputs, n: TafInputs) -> float:
    return _inner(m.x * m.t * m.Phi[:, None], n.x * n.t * n.Phi[:, None], m.R_n)


def taf_generalized(params1, params2, geom, env, t_grid, R_n=None) -> float:
    """Angle-weighted TAF between two full (r, v, azimuth[, elevation]) tuples."""
    def build(p):
        el = p[3] if len(p) > 3 else 0.0
        return taf_inputs(geom, env, p[0], p[1], DirectionOfArrival(p[2], el), t_grid, R_n)
    return taf_angle(build(params1), build(params2))


_TAFS = {"range": taf_range, "velocity": taf_velocity, "angle": taf_angle}


def expected_taf(kind: str, geom, env, t_grid, base, interval, n_points: int = 64,
                 density=None, R_n=None) -> float:
    """Average TAF over pairs (p_m, p_n) of one parameter, excluding p_m = p_n.

    ``base`` is the (r, v, azimuth, elevation) tuple shared by both targets;
    the parameter named by ``kind`` runs over a uniform tensor grid on
    ``interval``.  ``density(p_m, p_n)`` optionally replaces the uniform prior.
    """
    if kind not in _TAFS:
        raise InvalidArgument(f"unknown TAF kind {kind!r}")
    slot = {"range": 0, "velocity": 1, "angle": 2}[kind]
    grid = np.linspace(interval[0], interval[1], n_points)
    ins = []
    for p in grid:
        q = list(base) + [0.0] * (4 - len(base))
        q[slot] = p
        ins.append(taf_inputs(geom, env, q[0], q[1], DirectionOfArrival(q[2], q[3]), t_grid, R_n))
    fn = _TAFS[kind]
    num = den = 0.0
    for i in range(n_points):
        for j in range(n_points):
            if i == j:
                continue
            w = 1.0 if density is None else float(density(grid[i], grid[j]))
            num += w * fn(ins[i], ins[j])
            den += w
    return num / den if den > 0 else 0.0


@dataclass
class CrbReport:
    target: int
    fim: np.ndarray
    crb: np.ndarray
    crb_no_cross: np.ndarray
    cross_terms: bool
    diagnostic: str = ""

    @property
    def crb_range(self):
        return self.crb[0]

    @property
    def crb_velocity(self):
        return self.crb[1]

    @property
    def crb_azimuth(self):
        return self.crb[2]


def _aligned_grid(env: PulseEnvelope, timing_offset: float = 0.0):
    return env.t + timing_offset


def fim_derivatives(scn: Scenario, k: int, timing_offset: float = 0.0, pathloss_derivative: bool = False):
    """Unit-gain derivative stack D (3, L, n) and the samples x (L, n).

    ``timing_offset`` shifts the receive grid relative to the echo.
    ``pathloss_derivative`` adds the d ln(alpha^2)/dr = -2e/r term to D_r,
    which the closed forms drop.
    """
    env = scn.envelope
    if env.family != "gaussian":
        raise InvalidArgument("closed-form derivatives need a Gaussian envelope")
    tgt = scn.targets[k]
    beta = env.beta
    T = doppler_compression(tgt.velocity)
    dT = doppler_compression_derivative(tgt.velocity)
    phi = element_delays(scn.geometry, tgt.doa)
    Phi = angle_derivative(scn.geometry, tgt.doa)
    s = _aligned_grid(env, timing_offset)[None, :] - phi[:, None]
    x = evaluate(env, s, T)
    k2 = np.pi**2 / beta**2
    D = np.stack([
        (4 * k2 * T**2 / C) * x * s,
        -(2 * k2 * T * dT) * x * s**2,
        (2 * k2 * T**2) * x * s * Phi[:, None],
    ])
    if pathloss_derivative:
        D[0] += (-2 * scn.pathloss.exponent / tgt.range) * x
    return D, x


def _gain(scn: Scenario, k: int) -> float:
    tgt = scn.targets[k]
    return tgt.effective_rcs * float(scn.pathloss(tgt.range)) ** 2 * tgt.zeta_norm


def _safe_inverse_diag(F):
    try:
        Finv = np.linalg.inv(F)
        if not np.all(np.isfinite(Finv)) or np.linalg.cond(F) > 1e15:
            raise np.linalg.LinAlgError
        return np.diag(Finv).copy(), ""
    except np.linalg.LinAlgError:
        return np.full(F.shape[0], np.inf), "singular FIM: CRB unbounded"


def crb_block(scn: Scenario, k: int, cross_terms: bool = True, timing_offset: float = 0.0,
              pathloss_derivative: bool = False) -> CrbReport:
    """3x3 FIM block of target ``k`` and its CRBs (closed form, Gaussian envelope)."""
    D, _ = fim_derivatives(scn, k, timing_offset, pathloss_derivative)
    Dm = D.reshape(3, -1)
    a2b2 = float(np.sum(scn.tx_amplitudes() ** 2 * scn.backscatter(k) ** 2))
    F = (a2b2 / scn.noise_variance) * _gain(scn, k) ** 2 * (Dm @ Dm.T)
    F = 0.5 * (F + F.T)
    d = np.diag(F)
    no_cross = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), np.inf)
    if cross_terms:
        crb, diag = _safe_inverse_diag(F)
    else:
        crb, diag = no_cross.copy(), ""
    return CrbReport(k, F, crb, no_cross, cross_terms, diag)


def crb_report(scn: Scenario, cross_terms: bool = True) -> list:
    return [crb_block(scn, k, cross_terms) for k in range(scn.K)]


def jrc_reverse_fim_extension(scn: Scenario, k: int, timing_offset: float = 0.0) -> dict:
    """FIM over (r, v, phi, b_1..b_N) for backscatter symbols b of target ``k``.

    Returns the full matrix, the symbol-range cross terms, the radar-only
    range CRB, the range CRB from the extended inverse (Schur complement)
    and their ratio.  Symbol rows with zero information are dropped.
    """
    D, x = fim_derivatives(scn, k, timing_offset)
    Dm = D.reshape(3, -1)
    xv = x.ravel()
    a = scn.tx_amplitudes()
    b = scn.backscatter(k)
    g2 = _gain(scn, k) ** 2 / scn.noise_variance
    F_tt = g2 * np.sum(a**2 * b**2) * (Dm @ Dm.T)
    F_tb = g2 * (Dm @ xv)[:, None] * (a**2 * b)[None, :]
    F_bb = g2 * (xv @ xv) * a**2
    N = a.size
    full = np.zeros((3 + N, 3 + N))
    full[:3, :3] = F_tt
    full[:3, 3:] = F_tb
    full[3:, :3] = F_tb.T
    full[3:, 3:] = np.diag(F_bb)
    keep = F_bb > 0
    schur = F_tt - (F_tb[:, keep] / F_bb[keep]) @ F_tb[:, keep].T
    radar, _ = _safe_inverse_diag(F_tt)
    ext, diag = _safe_inverse_diag(0.5 * (schur + schur.T))
    ratio = ext[0] / radar[0] if np.isfinite(radar[0]) and radar[0] > 0 else np.nan
    return {"fim": full, "cross": F_tb, "schur": schur, "crb_radar": radar, "crb_extended": ext,
            "range_inflation": ratio, "diagnostic": diag}


def numeric_fim(mean_fn, theta, noise_var: float, steps, complex_valued: bool = False) -> np.ndarray:
    """Gauss-Newton FIM J^T J / sigma^2 from central differences of ``mean_fn``.

    Complex circular noise of total variance ``noise_var`` doubles the real
    part: 2 Re(J^H J) / sigma^2.
    """
    theta = np.asarray(theta, dtype=float)
    cols = []
    for p, h in enumerate(np.broadcast_to(steps, theta.shape)):
        e = np.zeros_like(theta)
        e[p] = h
        cols.append(((np.asarray(mean_fn(theta + e)) - np.asarray(mean_fn(theta - e))) / (2 * h)).ravel())
    J = np.stack(cols, axis=1)
    if complex_valued:
        return 2 * np.real(J.conj().T @ J) / noise_var
    return (J.T @ J) / noise_var


def write_crb_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "crb_range_m2", "crb_vel_m2s2", "crb_az_rad2", "with_cross_terms"])
        for rep in reports:
            w.writerow([rep.target] + [format(float(v), ".17g") for v in rep.crb] + [int(rep.cross_terms)])
