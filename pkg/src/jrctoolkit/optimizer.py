"""Variational descent on the derivative-autocorrelation cost of a pulse envelope.

Each iteration perturbs the current envelope by +/- lambda * y0((t - s)/alpha),
a compressed and shifted copy of the starting envelope, over a grid of
(lambda, alpha, s).  All candidates are screened at once with FFT
cross-correlations (the cost is a ratio of quadratic forms in lambda), the
best screened candidates are re-evaluated exactly, and the best exact one is
accepted when it lowers the cost and keeps out-of-band energy under the cap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from sklearn.base import BaseEstimator

from ._validation import InvalidArgument
from .waveform import PulseEnvelope, evaluate

__all__ = [
    "CovConfig",
    "CovTrace",
    "cov_cost",
    "out_of_band_fraction",
    "occupied_bandwidth",
    "convergence_discriminant",
    "cov_step",
    "optimize",
    "CovWaveformOptimizer",
    "write_trace_csv",
]


@dataclass(frozen=True)
class CovConfig:
    lag_set: tuple = tuple(range(2, 21))
    max_iters: int = 200
    lambdas: tuple = (0.5, 0.2, 0.1, 0.05)
    n_alpha: int = 8
    bandwidth_cap: float = 1e6
    leakage: float = 0.01
    stop_tol: float = 0.0
    decay: float = 0.5
    n_exact: int = 16

    def __post_init__(self):
        if len(self.lag_set) == 0 or min(self.lag_set) < 0:
            raise InvalidArgument("lag_set must be non-empty with non-negative lags")
        if any(l <= 0 for l in self.lambdas):
            raise InvalidArgument("perturbation scales must be positive")
        if self.bandwidth_cap <= 0 or not 0 < self.leakage < 1:
            raise InvalidArgument("bandwidth cap must be positive and leakage in (0, 1)")

    def alphas(self, duration: float) -> np.ndarray:
        lo = 1.0 / (2 * self.bandwidth_cap * duration)
        if lo >= 1:
            raise InvalidArgument("bandwidth cap too small for the pulse duration")
        return np.geomspace(lo, 1.0, self.n_alpha, endpoint=False)

    def shift_step(self, sample_rate: float) -> int:
        return max(1, int(round(sample_rate / (2 * self.bandwidth_cap))))


@dataclass
class CovTrace:
    cost: list = field(default_factory=list)
    bandwidth_hz: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    condition: list = field(default_factory=list)

    def append(self, cost, bw, acc, cond):
        self.cost.append(float(cost))
        self.bandwidth_hz.append(float(bw))
        self.accepted.append(bool(acc))
        self.condition.append(float(cond))

    def accepted_costs(self) -> np.ndarray:
        c = np.asarray(self.cost)
        return c[np.asarray(self.accepted, dtype=bool)] if c.size else c


def _deriv(y, dt=1.0):
    return np.gradient(y, dt)


def _autocorr(d, lags):
    n = d.size
    r0 = float(d @ d)
    return np.array([d[: n - k] @ d[k:] for k in lags]) / r0 if r0 > 0 else np.zeros(len(lags))


def cov_cost(env, lag_set=tuple(range(2, 21))) -> float:
    """Sum of |normalized derivative autocorrelation| over ``lag_set``."""
    y = env.samples if isinstance(env, PulseEnvelope) else np.asarray(env, dtype=float)
    lags = np.abs(np.asarray(lag_set, dtype=int))
    if lags.max() >= y.size:
        raise InvalidArgument("largest lag must be below the sample count")
    return float(np.abs(_autocorr(_deriv(y), lags)).sum())


def _nfft(n):
    return 1 << int(np.ceil(np.log2(8 * n)))


def out_of_band_fraction(samples, sample_rate: float, cap: float) -> float:
    """Share of spectral energy above ``cap`` (zero-padded DFT, both sides)."""
    y = np.asarray(samples, dtype=float)
    nfft = _nfft(y.size)
    P = np.abs(np.fft.rfft(y, nfft)) ** 2
    w = np.full(P.size, 2.0)
    w[0] = 1.0
    if nfft % 2 == 0:
        w[-1] = 1.0
    f = np.fft.rfftfreq(nfft, 1 / sample_rate)
    tot = float(np.sum(w * P))
    return float(np.sum((w * P)[f > cap]) / tot) if tot > 0 else 0.0


def occupied_bandwidth(samples, sample_rate: float, fraction: float = 0.99) -> float:
    """One-sided frequency below which ``fraction`` of the energy lies."""
    y = np.asarray(samples, dtype=float)
    nfft = _nfft(y.size)
    P = np.abs(np.fft.rfft(y, nfft)) ** 2
    P[1:] *= 2
    c = np.cumsum(P) / P.sum()
    f = np.fft.rfftfreq(nfft, 1 / sample_rate)
    return float(f[min(np.searchsorted(c, fraction), f.size - 1)])


def convergence_discriminant(y, alpha: float, delta: int = 1) -> float:
    """Convergence-condition discriminant near mid-support (per-sample derivatives).

    (y'/y + y''/y')^2 + 4 (y''/y) [1 - (1 - a^2/y'_{t+d}) / (1 - a^2/y'_t)],
    evaluated at the sample nearest the center where |y'| > 1e-6 max|y'|.
    """
    y = np.asarray(y, dtype=float)
    d1 = np.gradient(y)
    d2 = np.gradient(d1)
    ok = (np.abs(d1) > 1e-6 * np.abs(d1).max()) & (np.abs(y) > 0)
    ok[-delta:] = False
    if not ok.any():
        return np.nan
    idx = np.flatnonzero(ok)
    j = idx[np.argmin(np.abs(idx - y.size // 2))]
    if np.abs(d1[j + delta]) == 0:
        return np.nan
    a2 = alpha**2
    ratio = (1 - a2 / d1[j + delta]) / (1 - a2 / d1[j])
    return float((d1[j] / y[j] + d2[j] / d1[j]) ** 2 + 4 * (d2[j] / y[j]) * (1 - ratio))


class _Screen:
    """Precomputed prototype data for one alpha."""

    def __init__(self, env0: PulseEnvelope, alpha: float, step: int, cfg: CovConfig):
        n = env0.n
        self.n = n
        self.alpha = alpha
        self.shifts = np.arange(-(n // 2), n - n // 2, step)
        # long grid: index m <-> time (m - M0)/fs, wide enough for every shift
        self.M0 = 2 * n
        m = np.arange(4 * n + 1)
        u = (m - self.M0) / env0.sample_rate
        P = evaluate(env0, u / alpha)
        self.P = P
        self.q = np.gradient(P)
        # window for shift S covers long-grid indices [M0 - n//2 - S, ... + n)
        self.start = self.M0 - n // 2 - self.shifts
        lags = np.asarray(cfg.lag_set)
        cs = {}
        for k in np.unique(np.concatenate([[0], lags])):
            w = self.q[: self.q.size - k] * self.q[k:]
            cs[k] = np.concatenate([[0.0], np.cumsum(w)])
        self.rp = {}
        for k, c in cs.items():
            hi = np.minimum(self.start + n - k, c.size - 1)
            self.rp[k] = c[hi] - c[self.start]
        cE = np.concatenate([[0.0], np.cumsum(P**2)])
        self.ep = cE[self.start + n] - cE[self.start]


def _corr_at(a, b, offsets):
    """sum_j a[j] b[j + o] for each offset o (b longer than a)."""
    full = fftconvolve(b, a[::-1], mode="full")
    # full[i] = sum_j a[j] b[i - (len(a)-1) + j]
    return full[np.asarray(offsets) + a.size - 1]


def cov_step(env: PulseEnvelope, cfg: CovConfig, env0: PulseEnvelope | None = None, scale: float = 1.0,
             screens=None, current_cost: float | None = None):
    """One grid-search step.  Returns (env', accepted, condition_value, info)."""
    env0 = env if env0 is None else env0
    y = env.samples
    n = y.size
    if n < 3:
        raise InvalidArgument("need at least 3 samples")
    lags = np.asarray(cfg.lag_set, dtype=int)
    cost0 = cov_cost(y, lags) if current_cost is None else current_cost
    lam = scale * np.asarray(cfg.lambdas)
    if np.all(lam == 0):
        return env, False, np.nan, {"cost": cost0}
    eps = np.concatenate([lam, -lam])
    d = _deriv(y)
    r0 = float(d @ d)
    ry = {k: float(d[: n - k] @ d[k:]) for k in lags}
    ey = float(y @ y)
    fs = env.sample_rate
    step = cfg.shift_step(fs)
    if screens is None:
        screens = [_Screen(env0, a, step, cfg) for a in cfg.alphas(env.duration)]

    # spectral pieces for the leakage screen
    nfft = _nfft(n)
    f = np.fft.fftfreq(nfft, 1 / fs)
    out = np.abs(f) > cfg.bandwidth_cap
    Y = np.fft.fft(y, nfft)
    ey_out = float(np.sum(np.abs(Y[out]) ** 2)) / nfft

    cands = []
    for si, sc in enumerate(screens):
        base = sc.start  # long-grid index of window sample 0
        # cross terms X(S, k) = sum_j d[j] q[base + j + k] + sum_j q[base + j] d[j + k], j <= n-1-k
        X = {}
        for k in np.unique(np.concatenate([[0], lags])):
            dt_ = d.copy()
            if k:
                dt_[n - k:] = 0.0
            x1 = _corr_at(dt_, sc.q, base + k)
            dh = d.copy()
            if k:
                dh[:k] = 0.0
            x2 = _corr_at(dh, sc.q, base - k)
            X[k] = x1 + x2
        yp = _corr_at(y, sc.P, base)
        # leakage screen with the untruncated shifted prototype
        Pw = sc.P[sc.M0 - n // 2: sc.M0 - n // 2 + n]
        Pf = np.fft.fft(Pw, nfft)
        G = np.where(out, np.conj(Y) * Pf, 0.0)
        # sum_f conj(Y) P e^{-j 2 pi f S} over out-of-band bins, for every shift S
        cross_out = np.real(np.fft.fft(G)[np.mod(sc.shifts, nfft)]) / nfft
        ep_out = float(np.sum(np.abs(Pf[out]) ** 2)) / nfft
        E = eps[:, None]
        R0 = r0 + E * X[0][None, :] + E**2 * sc.rp[0][None, :]
        num = np.zeros_like(R0)
        for k in lags:
            num += np.abs(ry[k] + E * X[k][None, :] + E**2 * sc.rp[k][None, :])
        cost = np.where(R0 > 0, num / np.where(R0 > 0, R0, 1.0), np.inf)
        tot = ey + 2 * E * yp[None, :] + E**2 * sc.ep[None, :]
        leak = (ey_out + 2 * E * cross_out[None, :] + E**2 * ep_out) / np.where(tot > 0, tot, 1.0)
        cost = np.where(leak <= cfg.leakage * 1.5, cost, np.inf)
        ie, isft = np.unravel_index(np.argsort(cost, axis=None)[: cfg.n_exact], cost.shape)
        for a, b in zip(ie, isft):
            if np.isfinite(cost[a, b]):
                cands.append((cost[a, b], si, eps[a], sc.shifts[b]))
    cands.sort(key=lambda c: c[0])
    best = None
    for _, si, e, S in cands[: cfg.n_exact]:
        sc = screens[si]
        s0 = sc.start[np.searchsorted(sc.shifts, S)]
        trial = y + e * sc.P[s0: s0 + n]
        c = cov_cost(trial, lags)
        if c < cost0 and (best is None or c < best[0]):
            lk = out_of_band_fraction(trial, fs, cfg.bandwidth_cap)
            if lk <= cfg.leakage:
                best = (c, trial, sc.alpha, lk)
    if best is None:
        return env, False, np.nan, {"cost": cost0}
    c, trial, alpha, lk = best
    trial = trial / np.sqrt(np.trapezoid(trial**2, dx=env.dt))
    new = PulseEnvelope(trial, env.sample_rate, env.duration, "custom")
    cond = convergence_discriminant(trial, alpha, int(lags.min()) if lags.min() > 0 else 1)
    return new, True, cond, {"cost": c, "leakage": lk, "alpha": alpha}


def optimize(env0: PulseEnvelope, cfg: CovConfig = CovConfig()):
    """Iterate :func:`cov_step` for ``max_iters`` iterations or until the step norm drops below ``stop_tol``."""
    env = env0
    trace = CovTrace()
    if cfg.max_iters <= 0:
        return env0, trace
    step = cfg.shift_step(env0.sample_rate)
    screens = [_Screen(env0, a, step, cfg) for a in cfg.alphas(env0.duration)]
    cost = cov_cost(env0.samples, cfg.lag_set)
    scale = 1.0
    for _ in range(cfg.max_iters):
        new, acc, cond, info = cov_step(env, cfg, env0, scale, screens, cost)
        if acc:
            dist = float(np.sqrt(np.trapezoid((new.samples - env.samples) ** 2, dx=env.dt)))
            env, cost = new, info["cost"]
        else:
            scale *= cfg.decay
        trace.append(cost, occupied_bandwidth(env.samples, env.sample_rate), acc, cond)
        if acc and dist < cfg.stop_tol:
            break
    return env, trace


class CovWaveformOptimizer(BaseEstimator):
    """Estimator wrapper: ``fit(envelope)`` runs the descent; results in ``envelope_`` and ``trace_``."""

    def __init__(self, lag_set=tuple(range(2, 21)), max_iters=200, lambdas=(0.5, 0.2, 0.1, 0.05),
                 n_alpha=8, bandwidth_cap=1e6, leakage=0.01, stop_tol=0.0):
        self.lag_set = lag_set
        self.max_iters = max_iters
        self.lambdas = lambdas
        self.n_alpha = n_alpha
        self.bandwidth_cap = bandwidth_cap
        self.leakage = leakage
        self.stop_tol = stop_tol

    def config(self) -> CovConfig:
        return CovConfig(tuple(self.lag_set), self.max_iters, tuple(self.lambdas), self.n_alpha,
                         self.bandwidth_cap, self.leakage, self.stop_tol)

    def fit(self, X, y=None):
        if not isinstance(X, PulseEnvelope):
            raise InvalidArgument("fit expects a PulseEnvelope")
        self.initial_cost_ = cov_cost(X, self.lag_set)
        self.envelope_, self.trace_ = optimize(X, self.config())
        self.cost_ = cov_cost(self.envelope_, self.lag_set)
        return self


def write_trace_csv(trace: CovTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "cost", "bandwidth_hz", "accepted"])
        for i, (c, b, a) in enumerate(zip(trace.cost, trace.bandwidth_hz, trace.accepted)):
            w.writerow([i, format(c, ".17g"), format(b, ".17g"), int(a)])
