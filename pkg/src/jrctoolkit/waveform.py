"""Pulse envelopes, their derivatives and correlations, and FMCW modulation.

All envelopes live on a centered support ``t in [-T_s/2, T_s/2)`` sampled
at ``t_j = (j - n//2) / fs`` so that one sample sits exactly at ``t = 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from ._validation import InvalidArgument

__all__ = [
    "PulseEnvelope",
    "FmcwCarrier",
    "TxPulseTrain",
    "FAMILIES",
    "time_grid",
    "envelope_amplitude",
    "make_envelope",
    "envelope_spectrum_magnitude",
    "beta_from_bandwidth",
    "bandwidth_from_beta",
    "derivative",
    "normalized_derivative_autocorr",
    "modulate",
    "write_envelope_csv",
    "read_envelope_csv",
    "evaluate",
    "delayed",
]

FAMILIES = ("gaussian", "cubic_spline", "half_sine", "custom")


def time_grid(n: int, sample_rate: float) -> np.ndarray:
    """Centered sample instants, zero at index ``n // 2``."""
    return (np.arange(n) - n // 2) / float(sample_rate)


@dataclass(frozen=True)
class PulseEnvelope:
    """Sampled real baseband envelope on a centered support."""

    samples: np.ndarray
    sample_rate: float
    duration: float
    family: str = "custom"
    beta: float | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise InvalidArgument("envelope needs a 1-D sample vector with >= 2 entries")
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown envelope family {self.family!r}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return time_grid(self.n, self.sample_rate)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    def energy(self) -> float:
        """Trapezoidal energy integral of |y(t)|^2."""
        return float(np.trapezoid(self.samples**2, dx=self.dt))

    def normalized(self) -> "PulseEnvelope":
        return self.with_samples(self.samples / np.sqrt(self.energy()))

    def with_samples(self, samples, family: str | None = None) -> "PulseEnvelope":
        fam = self.family if family is None else family
        return PulseEnvelope(samples, self.sample_rate, self.duration, fam,
                             self.beta if fam == "gaussian" else None)

    def __call__(self, t) -> np.ndarray:
        """Linear interpolation of the envelope, zero outside the sampled support."""
        tg = self.t
        return np.interp(np.asarray(t, dtype=float), tg, self.samples, left=0.0, right=0.0)


@dataclass(frozen=True)
class FmcwCarrier:
    """Linear up-chirp; the carrier frequency is the chirp center."""

    f_start: float
    sweep_bandwidth: float
    chirp_duration: float
    phase0: float = 0.0

    def __post_init__(self):
        if self.sweep_bandwidth <= 0 or self.chirp_duration <= 0:
            raise InvalidArgument("sweep bandwidth and chirp duration must be positive")

    @property
    def slope(self) -> float:
        return self.sweep_bandwidth / self.chirp_duration

    @property
    def f_c(self) -> float:
        return self.f_start + 0.5 * self.sweep_bandwidth

    def phase(self, tau) -> np.ndarray:
        """Phase at time ``tau`` measured from the chirp start."""
        tau = np.asarray(tau, dtype=float)
        return self.phase0 + 2 * np.pi * (self.f_start * tau + 0.5 * self.slope * tau**2)


@dataclass(frozen=True)
class TxPulseTrain:
    envelope: PulseEnvelope
    carrier: FmcwCarrier
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float).ravel()
        object.__setattr__(self, "amplitudes", a)

    @property
    def num_pulses(self) -> int:
        return self.amplitudes.size

    @property
    def mean_power(self) -> float:
        return float(np.mean(self.amplitudes**2))


def envelope_amplitude(family: str, duration: float, beta: float | None = None) -> float:
    """Analytic unit-energy scale factor of a family envelope on its full support."""
    if family == "gaussian":
        return float(np.sqrt(np.sqrt(2 * np.pi) / (beta * erf(np.pi * duration / (np.sqrt(2) * beta)))))
    if family == "cubic_spline":
        # the B-spline shape integrates to 151/315 in t', and dt = T_s/4 dt'
        return float(np.sqrt(4 * 315 / (151 * duration)))
    if family == "half_sine":
        return float(np.sqrt(2 / duration))
    raise InvalidArgument(f"no analytic amplitude for family {family!r}")


def _shape(family, t, duration, beta):
    if family == "gaussian":
        return np.exp(-((np.pi * t / beta) ** 2))
    if family == "cubic_spline":
        u = np.abs(4 * t / duration)
        out = np.where(u < 1, 2 / 3 - u**2 + u**3 / 2, 0.0)
        return np.where((u >= 1) & (u < 2), (2 - u) ** 3 / 6, out)
    if family == "half_sine":
        # half-sine over [0, T_s] shifted onto the centered support
        return np.where(np.abs(t) <= duration / 2, np.cos(np.pi * t / duration), 0.0)
    raise InvalidArgument(f"unknown envelope family {family!r}")


def make_envelope(family: str, duration: float, sample_rate: float, beta: float | None = None,
                  samples=None) -> PulseEnvelope:
    """Build a unit-energy envelope of the given family.

    ``beta`` defaults to ``0.75 * duration`` for the Gaussian family.  For the
    ``custom`` family, ``samples`` are taken as-is and energy-normalized.
    """
    if not (duration > 0 and sample_rate > 0):
        raise InvalidArgument("duration and sample_rate must be positive")
    if sample_rate < 4 / duration:
        raise InvalidArgument("sample_rate must be at least 4/duration")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise InvalidArgument("fewer than 2 samples on the support")
    if family not in FAMILIES:
        raise InvalidArgument(f"unknown envelope family {family!r}")
    if family == "custom":
        if samples is None or len(samples) != n:
            raise InvalidArgument(f"custom envelope needs {n} samples")
        y = np.asarray(samples, dtype=float)
    else:
        if family == "gaussian":
            beta = 0.75 * duration if beta is None else float(beta)
            if beta <= 0:
                raise InvalidArgument("Gaussian envelope requires beta > 0")
        y = _shape(family, time_grid(n, sample_rate), duration, beta)
    env = PulseEnvelope(y, float(sample_rate), float(duration), family,
                        beta if family == "gaussian" else None)
    return env.normalized()


def bandwidth_from_beta(beta: float) -> float:
    """3 dB (half-power) bandwidth of exp(-beta^2 f^2)."""
    return np.sqrt(np.log(2) / 2) / beta


def beta_from_bandwidth(b3db: float) -> float:
    return np.sqrt(np.log(2) / 2) / b3db


def envelope_spectrum_magnitude(env: PulseEnvelope, f, closed_form: bool = True, peak_normalized=True):
    """Spectrum magnitude |Y(f)|.

    Gaussian envelopes use exp(-beta^2 f^2) when ``closed_form``; anything else
    is a direct (non-uniform frequency) DFT of the samples scaled by dt.
    Normalized to the f = 0 value unless ``peak_normalized`` is False.
    """
    f = np.asarray(f, dtype=float)
    if env.family == "gaussian" and closed_form:
        mag = np.exp(-(env.beta**2) * f**2)
        if not peak_normalized:
            amp = env.samples[env.n // 2]
            mag = mag * amp * env.beta / np.sqrt(np.pi)
        return mag
    t = env.t
    ff = np.atleast_1d(f)
    spec = np.abs(np.exp(-2j * np.pi * np.outer(ff, t)) @ env.samples) * env.dt
    if peak_normalized:
        spec = spec / (np.sum(env.samples) * env.dt)
    return spec.reshape(f.shape)


def derivative(env: PulseEnvelope) -> PulseEnvelope:
    """Central-difference time derivative, one-sided at the ends."""
    if env.n < 3:
        raise InvalidArgument("derivative needs at least 3 samples")
    d = np.gradient(env.samples, env.dt)
    return PulseEnvelope(d, env.sample_rate, env.duration, "custom")


def _lagged_autocorr(d: np.ndarray, lags) -> np.ndarray:
    e = float(d @ d)
    n = d.size
    out = np.empty(len(lags))
    for i, k in enumerate(lags):
        k = abs(int(k))
        out[i] = (d[: n - k] @ d[k:]) / e if e > 0 else 0.0
    return out


def normalized_derivative_autocorr(env: PulseEnvelope, lag) -> float | np.ndarray:
    """Autocorrelation of the derivative at integer sample lag(s), normalized to 1 at lag 0."""
    lags = np.atleast_1d(np.asarray(lag))
    if lags.dtype.kind not in "iu" and not np.all(lags == np.round(lags)):
        raise InvalidArgument("lags are integer sample counts")
    if np.any(np.abs(lags) >= env.n):
        raise InvalidArgument("lag must be smaller than the sample count")
    out = _lagged_autocorr(derivative(env).samples, lags)
    return float(out[0]) if np.ndim(lag) == 0 else out


def modulate(train: TxPulseTrain, i: int) -> np.ndarray:
    """Complex samples of pulse ``i``: a_i y(t) exp(j phase(t)), t from the chirp start."""
    if not 0 <= i < train.num_pulses:
        raise InvalidArgument(f"pulse index {i} outside [0, {train.num_pulses})")
    env = train.envelope
    tau = np.arange(env.n) / env.sample_rate
    return train.amplitudes[i] * env.samples * np.exp(1j * train.carrier.phase(tau))


def write_envelope_csv(env: PulseEnvelope, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_seconds", "amplitude"])
        for t, y in zip(env.t, env.samples):
            w.writerow([format(t, ".17g"), format(y, ".17g")])


def read_envelope_csv(path, duration: float | None = None) -> PulseEnvelope:
    """Load an envelope written by :func:`write_envelope_csv` (no renormalization)."""
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    t, y = data[:, 0], data[:, 1]
    # the span is exact to a few ulps; drop the representation noise of 1/fs
    fs = float(f"{(t.size - 1) / (t[-1] - t[0]):.12g}")
    dur = y.size / fs if duration is None else duration
    return PulseEnvelope(y, fs, dur, "custom")


def evaluate(env: PulseEnvelope, t, compression: float = 1.0) -> np.ndarray:
    """Envelope value at arbitrary times y(t * compression), zero off-support.

    Family envelopes are evaluated from their closed form (with the unit-energy
    amplitude of the stored samples); custom envelopes use linear interpolation.
    """
    s = np.asarray(t, dtype=float) * compression
    if env.family == "custom":
        return env(s)
    amp = env.samples[env.n // 2] / _shape(env.family, np.zeros(1), env.duration, env.beta)[0]
    inside = (s >= -env.duration / 2) & (s <= env.duration / 2)
    return np.where(inside, amp * _shape(env.family, s, env.duration, env.beta), 0.0)


def delayed(env: PulseEnvelope, t0: float, n_out: int, delay, compression: float = 1.0) -> np.ndarray:
    """Samples of y((t_j - delay) * compression) on t_j = t0 + j/fs.

    ``delay`` may be an array; the result then has shape (len(delay), n_out).
    Custom envelopes are shifted with an FFT phase ramp (band-limited
    interpolation); their compression is neglected, an error below
    |compression - 1| * T_s / 2 in time.
    """
    delay = np.asarray(delay, dtype=float)
    tj = t0 + np.arange(n_out) / env.sample_rate
    if env.family != "custom":
        return evaluate(env, tj - delay[..., None], compression)
    # place the envelope on the output grid, then shift by the fractional remainder
    fs = env.sample_rate
    start = (env.t[0] - t0) * fs
    nfft = 1 << int(np.ceil(np.log2(n_out + env.n + 2)))
    base = np.zeros(nfft)
    k0 = int(np.floor(start))
    lo, hi = max(k0, 0), min(k0 + env.n, nfft)
    if hi > lo:
        base[lo:hi] = env.samples[lo - k0:hi - k0]
    frac = start - k0 + delay * fs
    spec = np.fft.rfft(base)
    f = np.fft.rfftfreq(nfft)
    out = np.fft.irfft(spec * np.exp(-2j * np.pi * f * frac[..., None]), nfft)[..., :n_out]
    return out
