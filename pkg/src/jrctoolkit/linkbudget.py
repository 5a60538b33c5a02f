"""Forward/reverse SINR, inter-target interference suppression and rate bounds.

Rates are lower bounds on mutual information per frame of N pulses,
(N/2) log2(1 + SINR), reported in bits.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from ._validation import SPEED_OF_LIGHT, InvalidArgument
from .array import ArrayGeometry, DirectionOfArrival, array_correlation
from .scenario import Scenario, Target, doppler_compression
from .waveform import PulseEnvelope, envelope_spectrum_magnitude

__all__ = [
    "SuppressionParams",
    "RateBound",
    "dsinc",
    "suppression_factors",
    "pairwise_suppression",
    "gain_factor",
    "forward_sinr",
    "reverse_sinr",
    "forward_rate",
    "reverse_rate",
    "rate_bits",
    "right_angle_targets",
    "rate_table",
    "write_rates_csv",
]

log = logging.getLogger(__name__)
C = SPEED_OF_LIGHT


@dataclass(frozen=True)
class SuppressionParams:
    """FFT sizes and sampling rates of the range and Doppler processing.

    ``bandwidth`` and ``chirp_duration`` give the beat frequency slope;
    ``floor`` keeps the integer-bin separations, ``floor=False`` uses the
    fractional bin offsets instead.
    """

    N_range_fft: int = 4096
    N_doppler_fft: int = 512
    F_r: float = 40e6
    F_d: float = 1e4
    bandwidth: float = 100e6
    chirp_duration: float = 100e-6
    floor: bool = True

    def __post_init__(self):
        if self.N_range_fft < 2 or self.N_doppler_fft < 2:
            raise InvalidArgument("FFT sizes must be >= 2")
        if not (self.F_r > 0 and self.F_d > 0 and self.bandwidth > 0 and self.chirp_duration > 0):
            raise InvalidArgument("rates, bandwidth and chirp duration must be positive")

    @classmethod
    def from_scenario(cls, scn: Scenario, N_range_fft=4096, N_doppler_fft=512, F_r=40e6, floor=True):
        return cls(N_range_fft, N_doppler_fft, F_r, 1.0 / scn.pulse_period,
                   scn.carrier.sweep_bandwidth, scn.pulse_period, floor)


@dataclass(frozen=True)
class RateBound:
    target: int
    direction: str
    sinr: float
    rate_bits: float
    num_pulses: int

    def __post_init__(self):
        if self.direction not in ("forward", "reverse"):
            raise InvalidArgument("direction must be 'forward' or 'reverse'")
        if not self.rate_bits >= 0:
            raise InvalidArgument("rate must be non-negative")


def dsinc(delta_norm, n: int):
    """Dirichlet kernel magnitude |sin(pi d n) / (n sin(pi d))|, equal to 1 at integer d."""
    if n < 1:
        raise InvalidArgument("kernel length must be >= 1")
    d = np.asarray(delta_norm, dtype=float)
    den = n * np.sin(np.pi * d)
    # integer delta: removable singularity, limit is 1 in magnitude
    sing = np.isclose(d, np.round(d), rtol=0, atol=1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.abs(np.sin(np.pi * d * n) / np.where(sing, 1.0, den))
    out = np.where(sing, 1.0, np.minimum(val, 1.0))
    return float(out) if out.ndim == 0 else out


def suppression_factors(params: SuppressionParams, delta_r, delta_v, delta_theta,
                        geom: ArrayGeometry, f_c: float):
    """The three Dirichlet factors (range, Doppler, angle)."""
    if min(delta_r, delta_v, delta_theta) < 0:
        raise InvalidArgument("separations must be non-negative")
    dn = 2 * delta_r * params.bandwidth * params.N_range_fft / (C * params.F_r * params.chirp_duration)
    df = 2 * delta_v * f_c / C
    dk = df * params.N_doppler_fft / params.F_d
    if params.floor:
        dn, dk = np.floor(dn), np.floor(dk)
    s_r = dsinc(dn / params.N_range_fft, params.N_range_fft)
    s_v = dsinc(dk / params.N_doppler_fft, params.N_doppler_fft)
    if geom.L == 1:
        s_a = 1.0
    else:
        s_a = array_correlation(geom, DirectionOfArrival(geom.boresight),
                                DirectionOfArrival(geom.boresight + delta_theta), f_c)
    return float(s_r), float(s_v), float(min(s_a, 1.0))


def pairwise_suppression(params: SuppressionParams, geom: ArrayGeometry, f_c: float,
                         delta_r: float = 0.0, delta_v: float = 0.0, delta_theta: float = 0.0) -> float:
    """B_s_tot = Dsinc(dr) Dsinc(dv) Dsinc(dtheta), in [0, 1]."""
    s_r, s_v, s_a = suppression_factors(params, delta_r, delta_v, delta_theta, geom, f_c)
    return s_r * s_v * s_a


def gain_factor(env: PulseEnvelope, velocity: float = 0.0, band: float | None = None,
                response=None, n_points: int = 2049) -> float:
    """Normalized integral of |X(f/T) G(f)|^2 over [-band, band].

    The reference is the uncompressed spectrum energy over the same band, so
    a flat response at zero velocity gives exactly 1.  ``response`` is
    ``(freqs_hz, values)`` sampled G(f), linearly interpolated; default flat.
    ``band`` defaults to the Nyquist frequency of the envelope.
    """
    band = env.sample_rate / 2 if band is None else band
    if band <= 0:
        raise InvalidArgument("band must be positive")
    f = np.linspace(-band, band, n_points)
    T = doppler_compression(velocity)
    X = envelope_spectrum_magnitude(env, f / T)
    X0 = envelope_spectrum_magnitude(env, f)
    G = np.ones_like(f) if response is None else np.interp(f, response[0], np.abs(response[1]))
    return float(np.trapezoid((X * G) ** 2, f) / np.trapezoid(X0**2, f))


def _gains(scn: Scenario, G):
    return np.ones(scn.K) if G is None else np.broadcast_to(np.asarray(G, dtype=float), (scn.K,))


def _alpha(scn: Scenario, tgt: Target) -> float:
    return float(scn.pathloss(tgt.range))


def forward_sinr(scn: Scenario, k: int, G=None) -> float:
    """SINR at target k's own receiver.

    alpha_k gamma_k sigma_x^2 G_k / (sigma_nk^2 + sigma_jk^2 + sigma_x^2 sum_j
    lambda^2 G_j alpha_j gamma_j / (16 pi^2 (r_k - r_j)^2)).  Neighbours at
    exactly the same range are skipped (the proximity term is singular).
    """
    G = _gains(scn, G)
    tk = scn.targets[k]
    sx2 = scn.tx_power
    lam2 = scn.wavelength**2
    interf = 0.0
    for j, tj in enumerate(scn.targets):
        if j == k:
            continue
        dr = tk.range - tj.range
        if dr == 0:
            log.warning("targets %d and %d share a range; neighbour term skipped", k, j)
            continue
        interf += lam2 * G[j] * _alpha(scn, tj) * tj.effective_rcs / (16 * np.pi**2 * dr**2)
    den = tk.rx_noise_variance + tk.jammer_variance + sx2 * interf
    num = _alpha(scn, tk) * tk.effective_rcs * sx2 * G[k]
    if np.isinf(den):
        return 0.0
    return float(num / den) if den > 0 else float("inf")


def reverse_sinr(scn: Scenario, k: int, params: SuppressionParams | None = None, G=None) -> float:
    """SINR at the radar receiver for target k's backscatter.

    alpha_k^2 rho_T gamma_k G_k / (1 + rho_T sum_j B_s^{kj} alpha_j^2 gamma_j G_j);
    jammers are not included in this direction.
    """
    G = _gains(scn, G)
    params = SuppressionParams.from_scenario(scn) if params is None else params
    rho = scn.transmit_snr
    tk = scn.targets[k]
    interf = 0.0
    for j, tj in enumerate(scn.targets):
        if j == k:
            continue
        dth = abs(float(np.angle(np.exp(1j * (tk.azimuth - tj.azimuth)))))
        b = pairwise_suppression(params, scn.geometry, scn.f_c, abs(tk.range - tj.range),
                                 abs(tk.velocity - tj.velocity), dth)
        interf += b * _alpha(scn, tj) ** 2 * tj.effective_rcs * G[j]
    num = _alpha(scn, tk) ** 2 * rho * tk.effective_rcs * G[k]
    return float(num / (1 + rho * interf))


def rate_bits(sinr: float, N: int) -> float:
    if sinr < 0:
        raise InvalidArgument("SINR must be non-negative")
    return 0.5 * N * float(np.log2(1 + sinr))


def forward_rate(scn: Scenario, k: int, G=None) -> RateBound:
    s = forward_sinr(scn, k, G)
    return RateBound(k, "forward", s, rate_bits(s, scn.num_pulses), scn.num_pulses)


def reverse_rate(scn: Scenario, k: int, params: SuppressionParams | None = None, G=None) -> RateBound:
    s = reverse_sinr(scn, k, params, G)
    return RateBound(k, "reverse", s, rate_bits(s, scn.num_pulses), scn.num_pulses)


def right_angle_targets(r: float, separation: float, rcs: float = 1.0, rx_noise_variance: float = 1.0,
                        boresight: float = np.pi / 2) -> tuple:
    """Two static targets forming a right angle at target 1.

    Target 1 sits on boresight at range r; target 2 is ``separation`` metres
    away perpendicular to the line of sight, at range sqrt(r^2 + d^2).
    """
    t1 = Target(range=r, azimuth=boresight, rcs=rcs, rx_noise_variance=rx_noise_variance)
    t2 = Target(range=float(np.hypot(r, separation)), azimuth=boresight - float(np.arctan2(separation, r)),
                rcs=rcs, rx_noise_variance=rx_noise_variance)
    return t1, t2


def rate_table(scn: Scenario, ranges, separation: float, params: SuppressionParams | None = None,
               rho_T_db: float | None = None) -> list:
    """Rows (range_m, target, forward_bits, reverse_bits, sinr_fwd_db, sinr_rev_db).

    ``scn`` supplies carrier, array, N and pathloss; its targets are replaced
    by the right-angle pair at each range.  ``rho_T_db`` sets both the radar
    and the target transmit SNR (noise variances scaled against tx_power).
    """
    if rho_T_db is not None:
        nv = scn.tx_power / 10 ** (rho_T_db / 10)
        scn = scn.replace(noise_variance=nv)
    else:
        nv = scn.noise_variance
    params = SuppressionParams.from_scenario(scn) if params is None else params
    rows = []
    for r in np.atleast_1d(ranges):
        s = scn.with_targets(right_angle_targets(float(r), separation, rx_noise_variance=nv,
                                                 boresight=scn.geometry.boresight))
        for k in range(2):
            fw = forward_rate(s, k)
            rv = reverse_rate(s, k, params)
            rows.append((float(r), k, fw.rate_bits, rv.rate_bits,
                         10 * np.log10(max(fw.sinr, 1e-300)), 10 * np.log10(max(rv.sinr, 1e-300))))
    return rows


def write_rates_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["range_m", "target", "forward_bits", "reverse_bits", "sinr_fwd_db", "sinr_rev_db"])
        for r, k, fb, rb, sf, sr in rows:
            w.writerow([format(r, ".17g"), k, format(fb, ".17g"), format(rb, ".17g"),
                        format(sf, ".17g"), format(sr, ".17g")])
