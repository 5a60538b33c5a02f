"""End-to-end JRC receiver: beamform, range/Doppler/angle FFTs, detection, decoding.

Receiver chain for one frame of dechirped (beat-domain) samples:

1. beamforming with the receive beam bank (unit-norm beams);
2. range FFT of every chirp (dechirp + FFT is the chirp matched filter);
3. incoherent sum over chirps and order-statistics range detection;
4. windowed Doppler FFT at each range peak, order-statistics Doppler detection;
5. 3x3 centroid in range-Doppler, then an angle FFT across the antennas at
   the Doppler-filtered range cell (elevation from antenna height and range);
6. re-beamforming with a tapered steering vector at the refined angle and
   Doppler correction, giving one complex symbol per chirp;
7. GLRT/ML decoding of each 32-chirp block with an unknown complex gain.

Time-division protocol: odd frames carry forward data, even frames reverse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.ndimage import maximum_filter
from scipy.signal import get_window
from scipy.signal.windows import taylor
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import SPEED_OF_LIGHT, InvalidArgument
from .array import BeamformerBank, DirectionOfArrival, design_beamformer, steering_vector
from .codebook import Codebook
from .scenario import Scenario, synthesize_rx
from .waveform import envelope_spectrum_magnitude

__all__ = [
    "ReceiverConfig",
    "Detection",
    "DetectionReport",
    "OrderStatisticDetector",
    "Receiver",
    "tdm_mode",
    "agc_quantize",
    "modulate_scenario",
    "run_frame",
    "monte_carlo",
    "beat_crb",
    "RunningStats",
    "MODES",
]

log = logging.getLogger(__name__)
C = SPEED_OF_LIGHT
MODES = ("radar_only", "jrc_forward", "jrc_reverse")
_WINDOWS = {"rect": "boxcar", "hamming": "hamming", "blackmanharris": "blackmanharris"}


def _pow2(n):
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ReceiverConfig:
    range_fft_size: int = 4096
    doppler_fft_size: int = 512
    angle_fft_size: int = 512
    range_quantile: float = 0.999
    doppler_quantile: float = 0.999
    order: float = 0.5
    centroid_window: int | None = None
    centroid_iters: int = 3
    blank_db: float | None = 15.0
    joint_refine: bool = True
    doppler_window: str = "hamming"
    beams: BeamformerBank | None = None
    max_range: float = 100.0
    agc: bool = True
    adc_bits: int | None = 12
    modulation_depth: float = 0.25
    block_length: int = 32
    calibration_frames: int = 4
    codebook: Codebook | None = None

    def __post_init__(self):
        for n in (self.range_fft_size, self.doppler_fft_size, self.angle_fft_size):
            if not _pow2(n):
                raise InvalidArgument("FFT sizes must be powers of two")
        for q in (self.range_quantile, self.doppler_quantile, self.order):
            if not 0 < q < 1:
                raise InvalidArgument("quantiles must lie in (0, 1)")
        if self.doppler_window.lower() not in _WINDOWS:
            raise InvalidArgument(f"unknown Doppler window {self.doppler_window!r}")
        if self.centroid_window is not None and (self.centroid_window < 1 or self.centroid_window % 2 == 0):
            raise InvalidArgument("centroid window must be odd")
        if self.adc_bits is not None and self.adc_bits < 2:
            raise InvalidArgument("ADC needs at least 2 bits")

    def replace(self, **kw) -> "ReceiverConfig":
        return replace(self, **kw)


@dataclass
class Detection:
    est_range: float
    est_velocity: float
    est_azimuth: float
    snr_db: float
    beam: int
    range_bin: float
    doppler_bin: float
    truth: int | None = None
    errors: tuple | None = None
    decoded: np.ndarray | None = None
    decoded_bits: np.ndarray | None = None
    bit_errors: int | None = None


@dataclass
class DetectionReport:
    frame: int
    mode: str
    detections: list = field(default_factory=list)
    truth: list = field(default_factory=list)
    false_alarms: int = 0
    rd_map: np.ndarray | None = None

    def by_truth(self) -> dict:
        return {d.truth: d for d in self.detections if d.truth is not None}

    def bit_errors(self) -> int:
        return int(sum(d.bit_errors or 0 for d in self.detections))


def tdm_mode(frame: int) -> str:
    """Odd frames: radar sends data; even frames: targets respond."""
    return "jrc_forward" if frame % 2 == 1 else "jrc_reverse"


class OrderStatisticDetector(BaseEstimator):
    """Threshold on cell / (order-quantile of the map's cells).

    ``fit`` takes noise-only maps (n_maps, n_cells) and sets ``threshold_``
    to their ``quantile`` level, so each cell false-alarms with
    probability 1 - quantile.
    """

    def __init__(self, quantile=0.999, order=0.5):
        self.quantile = quantile
        self.order = order

    def statistic(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ref = np.quantile(X, self.order, axis=-1, keepdims=True)
        return X / np.where(ref > 0, ref, np.finfo(float).tiny)

    def fit(self, X, y=None):
        s = self.statistic(X)
        self.threshold_ = float(np.quantile(s, self.quantile))
        self.n_cells_ = s.size
        return self

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        return self.statistic(X) > self.threshold_


def agc_quantize(x: np.ndarray, bits: int | None = 12, agc: bool = True) -> np.ndarray:
    """Per-frame scale to full scale [-1, 1) and a uniform mid-rise quantizer."""
    if agc:
        peak = max(np.abs(x.real).max(), np.abs(x.imag).max())
        if peak > 0:
            x = x / peak
    if bits is None:
        return x
    d = 2.0 / 2**bits
    top = 2 ** (bits - 1) - 1

    def q(u):
        return (np.clip(np.floor(u / d), -top - 1, top) + 0.5) * d

    return q(x.real) + 1j * q(x.imag)


def _message_indices(scn: Scenario, frame: int, k: int, n_blocks: int, size: int):
    rng = np.random.default_rng(np.random.SeedSequence(scn.rng_seed, spawn_key=(frame, 1_000_000 + k)))
    return rng.integers(0, size, n_blocks)


def _chips(cb: Codebook, idx, N: int, depth: float, block: int) -> np.ndarray:
    """Per-chirp reflection/amplitude pattern 1 + depth sqrt(n) c, ones after the last block."""
    b = np.ones(N)
    for j, m in enumerate(idx):
        b[j * block:(j + 1) * block] = 1 + depth * np.sqrt(block) * cb.codewords[m]
    return b


def modulate_scenario(scn: Scenario, cfg: ReceiverConfig, frame: int, mode: str):
    """Attach the per-chirp code for ``mode``; returns (scenario, messages per target)."""
    if mode not in MODES:
        raise InvalidArgument(f"unknown mode {mode!r}")
    if mode == "radar_only":
        return scn, {}
    cb = cfg.codebook
    if cb is None:
        raise InvalidArgument("JRC modes need a codebook")
    if cb.N != cfg.block_length:
        raise InvalidArgument("codebook length must equal the block length")
    n_blocks = scn.num_pulses // cfg.block_length
    msgs = {k: _message_indices(scn, frame, k, n_blocks, cb.size) for k in range(scn.K)}
    if mode == "jrc_reverse":
        tg = [replace(t, backscatter=_chips(cb, msgs[k], scn.num_pulses, cfg.modulation_depth,
                                            cfg.block_length))
              for k, t in enumerate(scn.targets)]
        return scn.with_targets(tg), msgs
    # forward: one broadcast message stream per target would need separate
    # slots; the radar sends target 0's message and every target decodes it
    a = np.sqrt(scn.tx_power) * _chips(cb, msgs[0], scn.num_pulses, cfg.modulation_depth, cfg.block_length)
    return scn.replace(amplitudes=a), {k: msgs[0] for k in range(scn.K)}


def _bits(idx, r):
    idx = np.asarray(idx, dtype=np.int64)
    return ((idx[:, None] >> np.arange(r - 1, -1, -1)) & 1).astype(np.uint8).ravel()


def glrt_decode(cb: Codebook, z: np.ndarray, depth: float) -> int:
    """ML codeword for z = g (1 + depth sqrt(n) c_m) + noise with unknown complex g."""
    S = 1 + depth * np.sqrt(cb.N) * cb.codewords
    proj = np.abs(S @ z) ** 2 / np.einsum("ij,ij->i", S, S)
    return int(np.argmax(proj))


class Receiver:
    """Calibrated receiver for one scenario's array, carrier and noise level."""

    def __init__(self, scn: Scenario, cfg: ReceiverConfig | None = None):
        self.cfg = cfg or ReceiverConfig()
        self.scn = scn
        g = scn.geometry
        if self.cfg.beams is None:
            self.bank = design_beamformer(g, f=scn.f_c)
        else:
            self.bank = self.cfg.beams
        if self.bank.weights.shape[1] != g.L:
            raise InvalidArgument("beam bank does not match the array size")
        W = self.bank.weights
        self.W = W / np.linalg.norm(W, axis=1, keepdims=True)
        fs = scn.sample_rate
        self.bin_hz = fs / self.cfg.range_fft_size
        self.m_per_bin = self.bin_hz * C / (2 * scn.carrier.slope)
        self.kmax = min(int(np.floor(self.cfg.max_range / self.m_per_bin)) + 1, self.cfg.range_fft_size // 2)
        self.dwin = get_window(_WINDOWS[self.cfg.doppler_window.lower()], scn.num_pulses, fftbins=False)
        self.range_guard = self._mainlobe_bins()
        self.range_det = OrderStatisticDetector(self.cfg.range_quantile, self.cfg.order)
        self.doppler_det = OrderStatisticDetector(self.cfg.doppler_quantile, self.cfg.order)
        self._calibrate()

    # -- stages ------------------------------------------------------------
    def front_end(self, X):
        return agc_quantize(X, self.cfg.adc_bits, self.cfg.agc)

    def beamform(self, X):
        """(N, L, n) -> (N, M, n) with unit-norm beams."""
        return np.einsum("ml,nls->nms", self.W.conj(), X)

    def range_fft(self, Y):
        return np.fft.ifft(Y, self.cfg.range_fft_size, axis=-1)

    def doppler_fft(self, R):
        """Windowed Doppler transform along the chirp axis (axis 0)."""
        w = self.dwin.reshape((-1,) + (1,) * (R.ndim - 1))
        return np.fft.ifft(R * w, self.cfg.doppler_fft_size, axis=0)

    def _noise_frames(self):
        seed = int(np.random.SeedSequence(self.scn.rng_seed, spawn_key=(2**31,)).generate_state(1)[0])
        quiet = self.scn.replace(rng_seed=seed).with_targets(())
        for f in range(self.cfg.calibration_frames):
            yield np.stack([synthesize_rx(quiet, i, "beat", f) for i in range(quiet.num_pulses)])

    def _calibrate(self):
        rmaps, dmaps = [], []
        rng = np.random.default_rng(0)
        for X in self._noise_frames():
            R = self.range_fft(self.beamform(self.front_end(X)))
            rmaps.append((np.abs(R) ** 2).sum(axis=0))
            cols = rng.choice(self.cfg.range_fft_size, 64, replace=False)
            D = np.abs(self.doppler_fft(R[:, :, cols])) ** 2
            dmaps.append(D.reshape(D.shape[0], -1).T)
        self.range_det.fit(np.concatenate(rmaps))
        self.doppler_det.fit(np.concatenate(dmaps))

    # -- helpers -----------------------------------------------------------
    def _mainlobe_bins(self):
        """Half-power half-width of the envelope spectrum in range bins (>= 1)."""
        env = self.scn.envelope
        f = np.linspace(0, env.sample_rate / 2, 4097)
        if env.family != "gaussian":
            f = f[:: 8]
        mag = envelope_spectrum_magnitude(env, f)
        below = np.flatnonzero(mag**2 < 0.5)
        half = f[below[0]] if below.size else f[-1]
        return max(int(round(half / self.bin_hz)), 1)

    def _to_velocity(self, dbin):
        nd = self.cfg.doppler_fft_size
        nu = ((dbin + nd / 2) % nd - nd / 2) / nd
        return nu / self.scn.pulse_period * self.scn.wavelength / 2, nu

    def _angle(self, Zc, rng_est):
        """Azimuth from the angle FFT of the Doppler-filtered per-antenna samples."""
        g = self.scn.geometry
        L = g.L
        el = -np.arcsin(np.clip(self.scn.antenna_height / max(rng_est, 1e-9), -1, 1))
        win = taylor(L, 4, 35, norm=False) if L > 2 else np.ones(L)
        if g.kind != "ula":
            # generic array: matched-filter scan in azimuth
            az = np.linspace(g.boresight - np.pi / 2, g.boresight + np.pi / 2, self.cfg.angle_fft_size)
            P = [abs(np.vdot(steering_vector(g, DirectionOfArrival(a, el), self.scn.f_c), Zc)) for a in az]
            return float(az[int(np.argmax(P))]), el
        order = np.argsort(g.positions[:, 0])
        A = np.abs(np.fft.ifft(Zc[order] * win, self.cfg.angle_fft_size))
        na = self.cfg.angle_fft_size
        k = int(np.argmax(A))
        # log-parabolic interpolation between FFT bins
        lm, l0, lp = np.log(np.maximum(A[[(k - 1) % na, k, (k + 1) % na]], 1e-300))
        den = lm - 2 * l0 + lp
        frac = 0.5 * (lm - lp) / den if den < 0 else 0.0
        kf = k + float(np.clip(frac, -0.5, 0.5))
        u = ((kf + na / 2) % na - na / 2) / na
        cosaz = u * self.scn.wavelength / (g.spacing * np.cos(el))
        # front half-plane of the array
        az = float(np.arccos(np.clip(cosaz, -1, 1)))
        if g.boresight < 0:
            az = -az
        return az, el

    def _centroid(self, P, k, d, hk, hd):
        """Power centroid over a (2hk+1) x (2hd+1) window, re-centred ``centroid_iters`` times."""
        nd = P.shape[1]
        kc, dc = float(k), float(d)
        for _ in range(max(self.cfg.centroid_iters, 1)):
            k0, d0 = int(round(kc)), int(round(dc))
            ks = np.arange(k0 - hk, k0 + hk + 1)
            ks = ks[(ks >= 0) & (ks < P.shape[0])]
            ds = np.arange(d0 - hd, d0 + hd + 1)
            patch = P[np.ix_(ks, ds % nd)]
            wsum = patch.sum()
            if not wsum > 0:
                break
            kn, dn = float((patch.sum(axis=1) @ ks) / wsum), float((patch.sum(axis=0) @ ds) / wsum)
            if abs(kn - kc) < 1e-6 and abs(dn - dc) < 1e-6:
                break
            kc, dc = kn, dn
        return kc, dc

    # -- pipeline ----------------------------------------------------------
    def process(self, X, frame: int = 0, mode: str = "radar_only", keep_map: bool = False):
        """Run the detection and estimation chain on a (N, L, n) beat frame."""
        cfg = self.cfg
        N = X.shape[0]
        nd = cfg.doppler_fft_size
        X = self.front_end(X)
        R = self.range_fft(self.beamform(X))                   # (N, M, nR)
        P = (np.abs(R) ** 2).sum(axis=0)                       # (M, nR)
        K = self.kmax
        rhit = self.range_det.predict(P)[:, :K]                # stage 1: range
        RD = np.abs(self.doppler_fft(R[:, :, :K])) ** 2        # (nD, M, K)
        M = RD.shape[1]
        dstat = self.doppler_det.predict(RD.transpose(1, 2, 0).reshape(M * K, nd))
        dhit = dstat.reshape(M, K, nd).transpose(2, 0, 1)      # stage 2: Doppler
        mask = (rhit[None] & dhit).any(axis=1)                 # (nD, K)
        beam = RD.argmax(axis=1)
        top = RD.max(axis=1)
        # stage 3: non-maximum suppression over one mainlobe, then centroid
        gd = 2 * max(nd // N, 1)
        nms = maximum_filter(top, size=(2 * gd + 1, 2 * self.range_guard + 1), mode=("wrap", "nearest"))
        peaks = np.argwhere(mask & (top >= nms) & (top > 0))
        noise_ref = np.quantile(P, cfg.order, axis=1)
        if cfg.centroid_window is None:
            hk, hd = self.range_guard, max(nd // N, 1)
        else:
            hk = hd = cfg.centroid_window // 2
        found = []
        for d, k in peaks:
            m = int(beam[d, k])
            kc, dc = self._centroid(RD[:, m, :].T, int(k), int(d), hk, hd)
            found.append(dict(m=m, k=int(k), d=int(d), kf=kc, df=dc, power=float(top[d, k]),
                              snr=float(10 * np.log10(P[m, k] / noise_ref[m]))))
        found.sort(key=lambda e: -e["power"])
        if cfg.blank_db is not None:
            # sidelobe blanking: weak peaks inside a stronger peak's range mainlobe
            kept = []
            for e in found:
                if not any(abs(e["k"] - q["k"]) <= self.range_guard and
                           10 * np.log10(q["power"] / e["power"]) > cfg.blank_db for q in kept):
                    kept.append(e)
            found = kept
        Rl = np.fft.ifft(X, cfg.range_fft_size, axis=-1)[:, :, :K]   # per antenna (N, L, K)
        out, ctx = [], []
        for e in found:
            v, nu = self._to_velocity(e["df"])
            fd = 2 * v / self.scn.wavelength
            r = (e["kf"] * self.bin_hz - fd) * C / (2 * self.scn.carrier.slope)
            ph = np.exp(2j * np.pi * nu * np.arange(N))
            Zc = (Rl[:, :, e["k"]] * (self.dwin * ph)[:, None]).sum(axis=0)
            az, el = self._angle(Zc, r)
            out.append(Detection(r, v, az, e["snr"], e["m"], e["kf"], e["df"]))
            ctx.append((e["k"], ph, az, el))
        chips = [np.ones(N) for _ in out]
        if mode != "radar_only" and cfg.codebook is not None and out:
            W = self._symbol_beams([(c[2], c[3]) for c in ctx])
            for i, (det, (k, ph, _, _), w) in enumerate(zip(out, ctx, W)):
                det.decoded = self._demodulate(Rl[:, :, k], ph, w)
                if mode == "jrc_reverse":
                    chips[i] = self._chip_pattern(det.decoded, N)
        if cfg.joint_refine and len(out) > 1:
            # angle refinement on the per-target responses separated by joint
            # least squares across all detections at each range cell
            U = np.stack([c * np.conj(p) for c, (_, p, _, _) in zip(chips, ctx)], axis=1)   # (N, J)
            for i, (det, (k, _, _, _)) in enumerate(zip(out, ctx)):
                H = np.linalg.lstsq(U, Rl[:, :, k], rcond=None)[0]                          # (J, L)
                det.est_azimuth, _ = self._angle(H[i], det.est_range)
        rep = DetectionReport(frame, mode, out)
        if keep_map:
            rep.rd_map = P
        return rep

    def _symbol_beams(self, angles):
        """Step 6 beams: tapered steering vectors, or zero-forcing across detections.

        With several detections the rows of pinv(A) pass each target with unit
        gain and null the others; a near-singular A falls back to the tapered
        steering vector.
        """
        g = self.scn.geometry
        win = taylor(g.L, 4, 35, norm=False) if g.L > 2 else np.ones(g.L)
        A = np.stack([steering_vector(g, DirectionOfArrival(az, el), self.scn.f_c) for az, el in angles], axis=1)
        tap = (A * win[:, None]).T.conj()
        tap = tap / np.abs(np.einsum("kl,lk->k", tap, A))[:, None]
        # distinct directions only: a repeated angle would make A singular
        basis = []
        for i in range(A.shape[1]):
            if all(np.abs(np.vdot(A[:, j], A[:, i])) / g.L < 0.9 for j in basis):
                basis.append(i)
        if len(basis) < 2 or len(basis) > g.L:
            return tap
        Ab = A[:, basis]
        if np.linalg.cond(Ab) > 1e3:
            return tap
        Wb = np.linalg.pinv(Ab)
        out = tap.copy()
        for row, i in enumerate(basis):
            out[i] = Wb[row]
        return out

    def _chip_pattern(self, idx, N):
        cfg = self.cfg
        b = np.ones(N)
        for j, m in enumerate(idx):
            b[j * cfg.block_length:(j + 1) * cfg.block_length] = (
                1 + cfg.modulation_depth * np.sqrt(cfg.block_length) * cfg.codebook.codewords[m])
        return b

    def _demodulate(self, Rk, ph, w):
        """Per-chirp symbols after spatial filtering and Doppler correction, decoded per block."""
        cfg = self.cfg
        z = (Rk @ w) * ph
        nb = z.size // cfg.block_length
        return np.array([glrt_decode(cfg.codebook, z[j * cfg.block_length:(j + 1) * cfg.block_length],
                                     cfg.modulation_depth) for j in range(nb)], dtype=int)


def _truth_state(scn: Scenario, frame: int):
    """Truth (range, velocity, azimuth) at the middle of the frame."""
    T, N = scn.pulse_period, scn.num_pulses
    half = (scn.envelope.n // 2) / scn.sample_rate
    tm = frame * N * T + (N - 1) / 2 * T + half
    return [(t.range + t.velocity * tm, t.velocity, t.azimuth) for t in scn.targets]


def _associate(rep: DetectionReport, truth, cell):
    """Hungarian assignment on resolution-normalized distance."""
    rep.truth = truth
    if not rep.detections or not truth:
        rep.false_alarms = len(rep.detections)
        return
    est = np.array([[d.est_range, d.est_velocity, d.est_azimuth] for d in rep.detections])
    tru = np.array(truth)
    cost = (((est[:, None, :] - tru[None, :, :]) / np.asarray(cell)) ** 2).sum(axis=-1)
    rows, cols = linear_sum_assignment(cost)
    for i, j in zip(rows, cols):
        d = rep.detections[i]
        d.truth = int(j)
        d.errors = tuple(float(x) for x in est[i] - tru[j])
    rep.false_alarms = len(rep.detections) - len(rows)


def _resolution(scn: Scenario, cfg: ReceiverConfig):
    dr = C / (2 * scn.carrier.sweep_bandwidth)
    dv = scn.wavelength / (2 * scn.num_pulses * scn.pulse_period)
    g = scn.geometry
    dth = scn.wavelength / (g.L * (g.spacing or scn.wavelength / 2))
    return dr, dv, dth


def _bin_cells(scn: Scenario, cfg: ReceiverConfig):
    """One FFT bin in range, velocity and angle (angle bin at broadside)."""
    dr = scn.sample_rate / cfg.range_fft_size * C / (2 * scn.carrier.slope)
    dv = scn.wavelength / (2 * cfg.doppler_fft_size * scn.pulse_period)
    g = scn.geometry
    dth = scn.wavelength / (cfg.angle_fft_size * (g.spacing or scn.wavelength / 2))
    return dr, dv, dth


def run_frame(scn: Scenario, cfg: ReceiverConfig | None = None, frame: int = 0, mode: str = "radar_only",
              receiver: Receiver | None = None, keep_map: bool = False) -> DetectionReport:
    """Synthesize one frame, run the receiver and score it against the truth."""
    rx = receiver or Receiver(scn, cfg)
    cfg = rx.cfg
    mscn, msgs = modulate_scenario(scn, cfg, frame, mode)
    X = np.stack([synthesize_rx(mscn, i, "beat", frame) for i in range(scn.num_pulses)])
    rep = rx.process(X, frame, mode, keep_map)
    _associate(rep, _truth_state(scn, frame), _resolution(scn, cfg))
    if mode != "radar_only" and cfg.codebook is not None:
        r = cfg.codebook.rate_bits
        for d in rep.detections:
            if d.truth is None or d.decoded is None:
                continue
            if mode == "jrc_forward":
                d.decoded = _forward_decode(mscn, cfg, frame, d.truth)
            tx = _bits(msgs[d.truth][: d.decoded.size], r)
            d.decoded_bits = _bits(d.decoded, r)
            d.bit_errors = int(np.sum(tx != d.decoded_bits))
    return rep


def _forward_decode(scn: Scenario, cfg: ReceiverConfig, frame: int, k: int):
    """Target-side decoding of the radar's amplitude code at the forward SINR."""
    from .linkbudget import forward_sinr

    rho = forward_sinr(scn, k)
    a = scn.tx_amplitudes() / np.sqrt(scn.tx_power)
    rng = np.random.default_rng(np.random.SeedSequence(scn.rng_seed, spawn_key=(frame, 2_000_000 + k)))
    n = (rng.standard_normal(a.size) + 1j * rng.standard_normal(a.size)) / np.sqrt(2)
    y = np.sqrt(rho) * a + n if np.isfinite(rho) else a.astype(complex)
    nb = a.size // cfg.block_length
    return np.array([glrt_decode(cfg.codebook, y[j * cfg.block_length:(j + 1) * cfg.block_length],
                                 cfg.modulation_depth) for j in range(nb)], dtype=int)


class RunningStats:
    """Welford mean/variance accumulator."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def push(self, x: float):
        self.n += 1
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    @property
    def var(self):
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0


def beat_crb(scn: Scenario, k: int = 0, frame: int = 0) -> np.ndarray:
    """CRB diagonal (range, velocity, azimuth) for target k in the beat model.

    Numerical Gauss-Newton FIM on the noiseless frame with the complex
    amplitude (real and imaginary gain) as nuisance parameters.
    """
    from .bounds import numeric_fim

    t0 = scn.targets[k]
    only = scn.with_targets([t0])

    def mean(theta):
        r, v, az, gr, gi = theta
        s = only.with_targets([replace(t0, range=r, velocity=v, azimuth=az)])
        X = np.stack([synthesize_rx(s, i, "beat", frame, with_noise=False) for i in range(s.num_pulses)])
        return (gr + 1j * gi) * X

    theta = np.array([t0.range, t0.velocity, t0.azimuth, 1.0, 0.0])
    steps = np.array([1e-3, 1e-3, 1e-5, 1e-4, 1e-4])
    F = numeric_fim(mean, theta, scn.noise_variance, steps, complex_valued=True)
    return np.diag(np.linalg.inv(F))[:3]


def monte_carlo(scn: Scenario, cfg: ReceiverConfig | None = None, frames: int = 10, seed: int | None = None,
                mode: str = "radar_only", with_crb: bool = False, receiver: Receiver | None = None):
    """Independent-noise frames; returns (aggregate rows, per-frame reports).

    Aggregate rows per target: detection rate, RMS errors, bit error rate,
    false alarms per frame and optionally the CRB standard deviations.
    """
    if frames < 1:
        raise InvalidArgument("frames must be >= 1")
    if seed is not None:
        scn = scn.replace(rng_seed=int(seed))
    rx = receiver or Receiver(scn, cfg)
    stats = {k: [RunningStats() for _ in range(3)] for k in range(scn.K)}
    hits = np.zeros(scn.K, dtype=int)
    bit_err = np.zeros(scn.K, dtype=int)
    bit_tot = np.zeros(scn.K, dtype=int)
    fa = 0
    reports = []
    for f in range(frames):
        rep = run_frame(scn, rx.cfg, f, mode, rx)
        reports.append(rep)
        fa += rep.false_alarms
        for d in rep.detections:
            if d.truth is None:
                continue
            hits[d.truth] += 1
            for s, e in zip(stats[d.truth], d.errors):
                s.push(e * e)
            if d.bit_errors is not None:
                bit_err[d.truth] += d.bit_errors
                bit_tot[d.truth] += d.decoded_bits.size
    rows = []
    for k in range(scn.K):
        row = {"target": k, "frames": frames, "detection_rate": hits[k] / frames,
               "rmse_range_m": float(np.sqrt(stats[k][0].mean)) if hits[k] else float("nan"),
               "rmse_vel_mps": float(np.sqrt(stats[k][1].mean)) if hits[k] else float("nan"),
               "rmse_az_rad": float(np.sqrt(stats[k][2].mean)) if hits[k] else float("nan"),
               "ber": bit_err[k] / bit_tot[k] if bit_tot[k] else float("nan"),
               "false_alarms_per_frame": fa / frames}
        if with_crb:
            crb = beat_crb(scn, k)
            row.update(crb_range_m=float(np.sqrt(crb[0])), crb_vel_mps=float(np.sqrt(crb[1])),
                       crb_az_rad=float(np.sqrt(crb[2])))
        rows.append(row)
    return rows, reports
