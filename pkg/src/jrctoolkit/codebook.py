"""Spherical codes from K-means on the unit sphere, ML decoding and AWGN error rates.

SNR convention: codewords have unit energy Es = 1 = r Eb, so at a given
Eb/N0 the noise per real dimension has variance N0/2 = 1 / (2 r Eb/N0).
The uncoded reference sends the same r bits as r antipodal symbols with
the same energy per bit; its symbol (block) error rate is
1 - (1 - Q(sqrt(2 Eb/N0)))^r.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import InvalidArgument

__all__ = [
    "Codebook",
    "SphericalCodebook",
    "spherical_kmeans",
    "design",
    "encode",
    "ml_decode",
    "awgn_ber_curve",
    "antipodal_block_curve",
    "antipodal_block_ser",
    "snr_at_error_rate",
    "coding_gain_db",
    "write_codebook_csv",
    "read_codebook_csv",
    "write_ber_csv",
]


@dataclass(frozen=True)
class Codebook:
    codewords: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.codewords, dtype=float))
        C.setflags(write=False)
        object.__setattr__(self, "codewords", C)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def N(self) -> int:
        return self.codewords.shape[1]

    @property
    def rate_bits(self) -> int:
        return int(round(np.log2(self.size)))


def _unit_rows(X):
    nrm = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(nrm > 0, nrm, 1.0)


def spherical_kmeans(X, k: int, max_iters: int = 200, tol: float = 1e-5, rng=None):
    """K-means on unit vectors with renormalized centroids.

    Assignment uses the Euclidean distance, i.e. the largest inner product.
    An empty cluster is re-seeded with the sample farthest from its centroid.
    Returns (centroids, labels, history) where history lists
    (objective, update_error) per iteration; update_error is the largest
    centroid move.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    X = _unit_rows(np.asarray(X, dtype=float))
    C = X[rng.choice(X.shape[0], k, replace=False)].copy()
    hist = []
    for _ in range(max_iters):
        G = X @ C.T
        lab = np.argmax(G, axis=1)
        best = G[np.arange(X.shape[0]), lab]
        hist.append([float(np.mean(2 - 2 * best)), np.nan])
        S = np.zeros_like(C)
        np.add.at(S, lab, X)
        cnt = np.bincount(lab, minlength=k)
        newC = _unit_rows(S)
        empty = np.flatnonzero(cnt == 0)
        if empty.size:
            far = np.argsort(best)[: empty.size]
            newC[empty] = X[far]
        err = float(np.max(np.linalg.norm(newC - C, axis=1)))
        hist[-1][1] = err
        C = newC
        if err < tol:
            break
    lab = np.argmax(X @ C.T, axis=1)
    return C, lab, hist


def design(N: int = 32, r: int = 8, num_samples: int = 100_000, max_iters: int = 200,
           tol: float = 1e-5, seed: int = 0) -> Codebook:
    """Design a 2^r-word spherical code in N dimensions from Gaussian draws."""
    if N < 2:
        raise InvalidArgument("block length must be >= 2")
    k = 2**r
    if k > num_samples:
        raise InvalidArgument("need at least 2^r design samples")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((num_samples, N))
    C, _, hist = spherical_kmeans(X, k, max_iters, tol, rng)
    meta = {"num_samples": num_samples, "iterations": len(hist),
            "update_error": hist[-1][1] if hist else 0.0, "objective": [h[0] for h in hist],
            "seed": seed}
    return Codebook(C, meta)


def encode(cb: Codebook, index: int, sigma_x: float = 1.0) -> np.ndarray:
    """Codeword ``index`` scaled to norm ``sigma_x``."""
    if not 0 <= int(index) < cb.size:
        raise InvalidArgument(f"message index {index} outside [0, {cb.size})")
    return sigma_x * cb.codewords[int(index)]


def ml_decode(cb: Codebook, received) -> int | np.ndarray:
    """Nearest codeword; ties go to the lowest index.  Accepts (N,) or (n, N)."""
    Y = np.asarray(received, dtype=float)
    if Y.shape[-1] != cb.N:
        raise InvalidArgument(f"received vectors must have length {cb.N}")
    C = cb.codewords
    Y2 = np.atleast_2d(Y)
    nrm = (C**2).sum(axis=1)
    if np.ptp(nrm) <= 1e-9:
        # equal-norm codewords: nearest means largest correlation (scale invariant)
        out = np.argmax(Y2 @ C.T, axis=1)
    else:
        out = np.argmin((Y2**2).sum(axis=1)[:, None] - 2 * Y2 @ C.T + nrm, axis=1)
    return int(out[0]) if Y.ndim == 1 else out


def _popcount(x):
    x = np.asarray(x, dtype=np.uint64)
    return np.unpackbits(x.view(np.uint8).reshape(-1, 8), axis=1).sum(axis=1)


def awgn_ber_curve(cb: Codebook, snr_grid_db, trials: int = 100_000, seed: int = 0,
                   batch: int = 20_000) -> list:
    """Monte Carlo (snr_db, ber, ser, trials) rows; snr is Eb/N0 in dB.

    ``snr_db = inf`` is noiseless; bits follow the natural binary index map.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    r = max(cb.rate_bits, 1)
    rows = []
    for p, snr in enumerate(np.atleast_1d(snr_grid_db)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(p,)))
        sd = 0.0 if np.isposinf(snr) else np.sqrt(1.0 / (2 * r * 10 ** (snr / 10)))
        bit_err = sym_err = 0
        done = 0
        while done < trials:
            m = min(batch, trials - done)
            idx = rng.integers(0, cb.size, m)
            y = cb.codewords[idx] + sd * rng.standard_normal((m, cb.N))
            dec = ml_decode(cb, y)
            sym_err += int(np.sum(dec != idx))
            bit_err += int(_popcount(np.bitwise_xor(dec, idx)).sum())
            done += m
        rows.append((float(snr), bit_err / (trials * r), sym_err / trials, trials))
    return rows


def antipodal_block_ser(snr_db, r: int = 8):
    """Block error rate of r uncoded antipodal bits at Eb/N0 ``snr_db``."""
    p = 0.5 * erfc(np.sqrt(10 ** (np.asarray(snr_db, dtype=float) / 10)))
    return 1 - (1 - p) ** r


def antipodal_block_curve(snr_grid_db, r: int = 8, trials: int = 100_000, seed: int = 0) -> list:
    """Monte Carlo twin of :func:`antipodal_block_ser`: rows (snr_db, ber, ser, trials)."""
    rows = []
    for p, snr in enumerate(np.atleast_1d(snr_grid_db)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1000 + p,)))
        bits = rng.integers(0, 2, (trials, r))
        sd = np.sqrt(1.0 / (2 * 10 ** (snr / 10)))
        y = (2 * bits - 1) + sd * rng.standard_normal((trials, r))
        err = (y > 0).astype(int) != bits
        rows.append((float(snr), float(err.mean()), float(err.any(axis=1).mean()), trials))
    return rows


def snr_at_error_rate(snr_db, rate, target: float) -> float:
    """Interpolate log10(error rate) against SNR to find where it crosses ``target``."""
    snr = np.asarray(snr_db, dtype=float)
    lg = np.log10(np.maximum(np.asarray(rate, dtype=float), 1e-300))
    t = np.log10(target)
    for i in range(snr.size - 1):
        if (lg[i] - t) * (lg[i + 1] - t) <= 0 and lg[i] != lg[i + 1]:
            return float(snr[i] + (t - lg[i]) * (snr[i + 1] - snr[i]) / (lg[i + 1] - lg[i]))
    return float("nan")


def coding_gain_db(snr_coded, ser_coded, snr_ref, ser_ref, target: float = 1e-3) -> float:
    return snr_at_error_rate(snr_ref, ser_ref, target) - snr_at_error_rate(snr_coded, ser_coded, target)


class SphericalCodebook(BaseEstimator):
    """Estimator wrapper around :func:`spherical_kmeans`.

    ``fit(X)`` clusters the rows of X after projecting them on the sphere;
    ``predict(Y)`` is the ML decoder and ``transform(idx)`` the encoder.
    """

    def __init__(self, n_codewords=256, max_iter=200, tol=1e-5, sigma_x=1.0, random_state=0):
        self.n_codewords = n_codewords
        self.max_iter = max_iter
        self.tol = tol
        self.sigma_x = sigma_x
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[0] < self.n_codewords:
            raise InvalidArgument("need at least n_codewords samples")
        C, lab, hist = spherical_kmeans(X, self.n_codewords, self.max_iter, self.tol, self.random_state)
        self.codewords_ = C
        self.labels_ = lab
        self.history_ = hist
        self.n_iter_ = len(hist)
        self.n_features_in_ = X.shape[1]
        self.codebook_ = Codebook(C, {"iterations": len(hist), "update_error": hist[-1][1]})
        return self

    def predict(self, Y):
        check_is_fitted(self, "codewords_")
        return ml_decode(self.codebook_, check_array(Y))

    def transform(self, idx):
        check_is_fitted(self, "codewords_")
        idx = np.asarray(idx, dtype=int).ravel()
        if np.any((idx < 0) | (idx >= self.n_codewords)):
            raise InvalidArgument("message index out of range")
        return self.sigma_x * self.codewords_[idx]


def write_codebook_csv(cb: Codebook, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"c{j}" for j in range(cb.N)])
        for row in cb.codewords:
            w.writerow([format(v, ".17g") for v in row])


def read_codebook_csv(path) -> Codebook:
    return Codebook(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))


def write_ber_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "ber", "ser", "trials"])
        for snr, ber, ser, n in rows:
            w.writerow([format(snr, ".17g"), format(ber, ".17g"), format(ser, ".17g"), n])
