"""Shared oracles for the unit and acceptance tests."""

import numpy as np

from jrctoolkit import SPEED_OF_LIGHT as C
from jrctoolkit.array import ArrayGeometry, DirectionOfArrival, element_delays
from jrctoolkit.scenario import Scenario, Target, doppler_compression
from jrctoolkit.waveform import FmcwCarrier, evaluate, make_envelope


def fim_scenario(seed: int) -> Scenario:
    """Small randomized scenario: L=4, K=1, N=8, Gaussian envelope, coded amplitudes."""
    rng = np.random.default_rng(seed)
    beta = 1e-9 * rng.uniform(0.8, 1.2)
    ts = 4 * beta
    env = make_envelope("gaussian", ts, 20e9, beta=beta)
    # wide spacing so the angle information is well above round-off
    geom = ArrayGeometry.ula(4, 0.3 * rng.uniform(0.5, 1.5))
    tgt = Target(range=rng.uniform(80, 200), velocity=rng.uniform(-30, 30),
                 azimuth=np.pi / 2 + rng.uniform(-0.8, 0.8), elevation=rng.uniform(-0.2, 0.2),
                 rcs=rng.uniform(0.5, 2))
    return Scenario(FmcwCarrier(24e9 - 50e6, 100e6, ts), env, geom, [tgt], num_pulses=8,
                    tx_power=rng.uniform(1, 4), noise_variance=rng.uniform(0.5, 2),
                    amplitudes=rng.uniform(0.5, 2, 8))


def log_likelihood(scn: Scenario, timing_offset: float = 0.0):
    """Exact Gaussian log-likelihood of (r, v, azimuth) for noise-free data at the truth."""
    t0 = scn.targets[0]
    env = scn.envelope
    a = scn.tx_amplitudes()
    tgrid = env.t + timing_offset + 2 * t0.range / C

    def mean(th):
        r, v, az = th
        phi = element_delays(scn.geometry, DirectionOfArrival(az, t0.elevation))
        s = tgrid[None, :] - 2 * r / C - phi[:, None]
        g = t0.rcs * float(scn.pathloss(r)) ** 2
        return a[:, None, None] * g * evaluate(env, s, doppler_compression(v))[None]

    x0 = np.array([t0.range, t0.velocity, t0.azimuth])
    z = mean(x0)
    return (lambda th: -np.sum((z - mean(th)) ** 2) / (2 * scn.noise_variance)), x0


def hessian(f, x, h):
    n = len(x)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i], ej[j] = h[i], h[j]
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
    return H


def richardson_fim(scn: Scenario, timing_offset: float = 0.0, h=(1e-3, 2e2, 1e-4)):
    """Negative Hessian of the log-likelihood with one Richardson extrapolation step."""
    f, x = log_likelihood(scn, timing_offset)
    h = np.asarray(h, dtype=float)
    return -(4 * hessian(f, x, h / 2) - hessian(f, x, h)) / 3


def fim_relative_error(F, H):
    """Entry-wise |F - H| scaled by sqrt(F_ii F_jj), the natural scale of each entry."""
    return np.abs(F - H) / np.sqrt(np.outer(np.diag(F), np.diag(F)))
