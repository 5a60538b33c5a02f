"""Targets, scenarios and the multi-antenna received-signal model.

Two synthesis domains are offered:

* ``envelope``: the real baseband model, per antenna l and target k,
  a_i b_ki gamma_k alpha_k^2 sum_p zeta_p x([t - 2 tau_k - phi_l - t_p] T_k),
  plus white noise.
* ``beat``: the complex dechirped FMCW signal rx(t) conj(lo(t)) used by the
  receiver pipeline, with a constant-amplitude local oscillator chirp.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import SPEED_OF_LIGHT, InvalidArgument
from .array import ArrayGeometry, DirectionOfArrival, element_delays
from .waveform import FmcwCarrier, PulseEnvelope, delayed, evaluate

__all__ = [
    "Target",
    "Pathloss",
    "Scenario",
    "doppler_compression",
    "doppler_compression_approx",
    "doppler_compression_derivative",
    "pulse_seed",
    "noise",
    "synthesize_rx",
    "synthesize_frame",
]

C = SPEED_OF_LIGHT


def doppler_compression(v) -> np.ndarray | float:
    """Time-axis compression sqrt((c + 2v)/(c - 2v))."""
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) >= C / 2):
        raise InvalidArgument("|v| must be below c/2")
    out = np.sqrt((C + 2 * v) / (C - 2 * v))
    return float(out) if out.ndim == 0 else out


def doppler_compression_approx(v):
    """First-order form (c + v)/(c - v)."""
    v = np.asarray(v, dtype=float)
    out = (C + v) / (C - v)
    return float(out) if out.ndim == 0 else out


def doppler_compression_derivative(v):
    """dT/dv of the exact square-root form."""
    v = np.asarray(v, dtype=float)
    T = np.sqrt((C + 2 * v) / (C - 2 * v))
    out = 2 * C / ((C - 2 * v) ** 2 * T)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Pathloss:
    """Amplitude pathloss alpha = eps * r^-e; the default is free space 1/(4 pi r^2)."""

    eps: float = 1 / (4 * np.pi)
    exponent: float = 2.0

    def __call__(self, r):
        return self.eps * np.asarray(r, dtype=float) ** (-self.exponent)


@dataclass(frozen=True)
class Target:
    range: float
    velocity: float = 0.0
    azimuth: float = np.pi / 2
    elevation: float = 0.0
    rcs: float = 1.0
    taps: tuple = ((1.0, 0.0),)
    backscatter: np.ndarray | None = None
    data_bits: np.ndarray | None = None
    kappa: float = 1.0
    area: float | None = None
    jammer_variance: float = 0.0
    rx_noise_variance: float = 1.0
    single_point: bool = True

    def __post_init__(self):
        if not self.range > 0:
            raise InvalidArgument("target range must be positive")
        if abs(self.velocity) >= C / 2:
            raise InvalidArgument("|velocity| must be below c/2")
        if len(self.taps) < 1:
            raise InvalidArgument("a target needs at least one tap")
        if not 0 <= self.kappa <= 1:
            raise InvalidArgument("aperture efficiency must lie in [0, 1]")
        object.__setattr__(self, "taps", tuple((float(z), float(t)) for z, t in self.taps))
        if self.backscatter is not None:
            object.__setattr__(self, "backscatter", np.asarray(self.backscatter, dtype=float))

    @property
    def doa(self) -> DirectionOfArrival:
        return DirectionOfArrival(self.azimuth, self.elevation)

    @property
    def zeta_norm(self) -> float:
        return float(np.sqrt(sum(z * z for z, _ in self.taps)))

    @property
    def effective_rcs(self) -> float:
        """kappa * A when an area is given, else the RCS field."""
        return self.kappa * self.area if self.area is not None else self.rcs

    @classmethod
    def from_cartesian(cls, position, velocity, height: float = 0.0, **kw) -> "Target":
        """Target on the ground plane seen from an antenna at ``height``.

        ``position`` and ``velocity`` are ground-plane (x, y) vectors.  The
        radial velocity is the projection on the slant line of sight.
        """
        p = np.array([position[0], position[1], -height], dtype=float)
        r = float(np.linalg.norm(p))
        u = p / r
        vr = float(np.dot(u[:2], np.asarray(velocity, dtype=float)[:2]))
        az = float(np.arctan2(p[1], p[0]))
        el = float(np.arcsin(u[2]))
        return cls(range=r, velocity=vr, azimuth=az, elevation=el, **kw)


@dataclass(frozen=True)
class Scenario:
    """Radar parameters and targets; immutable once built."""

    carrier: FmcwCarrier
    envelope: PulseEnvelope
    geometry: ArrayGeometry
    targets: tuple = ()
    num_pulses: int = 64
    tx_power: float = 1.0
    noise_variance: float = 1.0
    pathloss: Pathloss = field(default_factory=Pathloss)
    rng_seed: int = 0
    amplitudes: np.ndarray | None = None
    antenna_height: float = 0.0

    def __post_init__(self):
        if self.num_pulses < 1:
            raise InvalidArgument("num_pulses must be >= 1")
        if self.tx_power < 0 or self.noise_variance < 0:
            raise InvalidArgument("variances must be non-negative")
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.amplitudes is not None:
            a = np.asarray(self.amplitudes, dtype=float).ravel()
            if a.size != self.num_pulses:
                raise InvalidArgument("amplitudes must have num_pulses entries")
            object.__setattr__(self, "amplitudes", a)

    @property
    def pulse_period(self) -> float:
        return self.carrier.chirp_duration

    @property
    def sample_rate(self) -> float:
        return self.envelope.sample_rate

    @property
    def f_c(self) -> float:
        return self.carrier.f_c

    @property
    def wavelength(self) -> float:
        return C / self.f_c

    @property
    def K(self) -> int:
        return len(self.targets)

    @property
    def transmit_snr(self) -> float:
        return self.tx_power / self.noise_variance if self.noise_variance > 0 else np.inf

    def tx_amplitudes(self) -> np.ndarray:
        """a_i; constant sqrt(tx_power) unless a code is attached."""
        if self.amplitudes is None:
            return np.full(self.num_pulses, np.sqrt(self.tx_power))
        return self.amplitudes

    def backscatter(self, k: int) -> np.ndarray:
        b = self.targets[k].backscatter
        return np.ones(self.num_pulses) if b is None else b

    def with_targets(self, targets) -> "Scenario":
        return replace(self, targets=tuple(targets))

    def replace(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def guard_samples(self) -> int:
        """Extra receive samples that hold the longest echo."""
        if not self.targets:
            return 0
        rmax = max(t.range + abs(t.velocity) * self.num_pulses * self.pulse_period for t in self.targets)
        span = np.abs(self.geometry.positions).sum(axis=1).max() / C
        taps = max(max(abs(tp) for _, tp in t.taps) for t in self.targets)
        return int(np.ceil((2 * rmax / C + span + taps) * self.sample_rate)) + 2


def pulse_seed(seed: int, pulse: int, frame: int = 0) -> np.random.SeedSequence:
    """Per-pulse noise stream, independent of evaluation order."""
    return np.random.SeedSequence(int(seed), spawn_key=(int(frame), int(pulse)))


def noise(scn: Scenario, i: int, n_samples: int, frame: int = 0, complex_valued=False) -> np.ndarray:
    """White Gaussian noise block (L, n_samples) of variance sigma_n^2 per sample."""
    rng = np.random.default_rng(pulse_seed(scn.rng_seed, i, frame))
    sd = np.sqrt(scn.noise_variance)
    if complex_valued:
        z = rng.standard_normal((scn.geometry.L, n_samples, 2)) @ np.array([1.0, 1j])
        return z * sd / np.sqrt(2)
    return rng.standard_normal((scn.geometry.L, n_samples)) * sd


def _target_gain(scn: Scenario, tgt: Target, r: float) -> float:
    return tgt.effective_rcs * float(scn.pathloss(r)) ** 2


def synthesize_rx(scn: Scenario, i: int, domain: str = "envelope", frame: int = 0,
                  with_noise: bool = True, targets=None) -> np.ndarray:
    """Received block for pulse ``i`` of ``frame``, shape (L, n + guard).

    Receive sample j sits at t_j = (j - n//2)/fs relative to the pulse
    center (envelope domain, n + guard samples) or at tau_j = j/fs from the
    chirp start (beat domain, n samples).
    """
    n = scn.envelope.n
    # the beat receiver samples only during the chirp
    n_out = n if domain == "beat" else n + scn.guard_samples()
    idx = range(scn.K) if targets is None else targets
    a_i = scn.tx_amplitudes()[i]
    t_abs = (frame * scn.num_pulses + i) * scn.pulse_period
    out = np.zeros((scn.geometry.L, n_out), dtype=complex if domain == "beat" else float)
    for k in idx:
        tgt = scn.targets[k]
        b = scn.backscatter(k)[i]
        r = tgt.range + tgt.velocity * t_abs
        phi = element_delays(scn.geometry, tgt.doa)
        amp = a_i * b * _target_gain(scn, tgt, r)
        taps = tgt.taps if not tgt.single_point else ((tgt.zeta_norm, 0.0),)
        Tk = doppler_compression(tgt.velocity)
        for zeta, tp in taps:
            d = 2 * r / C + phi + tp
            if domain == "envelope":
                t0 = -(n // 2) / scn.sample_rate
                out += amp * zeta * delayed(scn.envelope, t0, n_out, d, Tk)
            elif domain == "beat":
                out += amp * zeta * _beat(scn, n_out, d, tgt.velocity)
            else:
                raise InvalidArgument(f"unknown domain {domain!r}")
    if with_noise and scn.noise_variance > 0:
        out = out + noise(scn, i, n_out, frame, complex_valued=(domain == "beat"))
    return out


def _beat(scn: Scenario, n_out: int, d, v: float) -> np.ndarray:
    """Dechirped echo for per-element delays ``d`` at chirp start (L, n_out).

    The delay drifts with range rate inside the chirp, which produces the
    Doppler phase progression; the envelope is the pulse shape centered on
    the chirp.
    """
    fs = scn.sample_rate
    car = scn.carrier
    tau = np.arange(n_out) / fs
    dd = d[:, None] + 2 * v * tau[None, :] / C
    half = (scn.envelope.n // 2) / fs
    s = tau[None, :] - half - dd
    if scn.envelope.family == "custom":
        env = np.stack([evaluate(scn.envelope, row) for row in s])
    else:
        env = evaluate(scn.envelope, s)
    # rx(tau) = y(tau - d) exp(j psi(tau - d)); lo = exp(j psi(tau))
    ph = car.phase(tau - dd) - car.phase(tau)
    return env * np.exp(1j * ph)


def synthesize_frame(scn: Scenario, frame: int = 0, domain: str = "beat", with_noise: bool = True,
                     n_samples: int | None = None) -> np.ndarray:
    """All pulses of a frame, shape (N, L, n_samples)."""
    blocks = [synthesize_rx(scn, i, domain, frame, with_noise) for i in range(scn.num_pulses)]
    out = np.stack(blocks)
    if n_samples is not None:
        out = out[..., :n_samples]
    return out
