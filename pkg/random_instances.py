"""Seeded random operands for campaigns.

Trial k of check c draws from its own Philox stream keyed by
(seed, crc32(c), k), so a trial's inputs never depend on which worker ran it
or in what order.
"""
from __future__ import annotations

import math
import zlib

import numpy as np

from commuting_means import CommutingPositivePair, make_pair
from linalg_core import HermitianMatrix


def trial_rng(seed: int, check: str, trial: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(check.encode("utf-8")), int(trial)])
    return np.random.Generator(np.random.Philox(key))


def gen_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard complex Gaussian entries (real and imaginary parts of variance 1/2)."""
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)


def gen_random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar unitary: QR of a complex Gaussian matrix, columns rotated so diag(R) > 0."""
    q, r = np.linalg.qr(gen_complex(rng, n))
    d = np.diagonal(r)
    q *= d / np.abs(d)
    return q


def log_uniform(rng: np.random.Generator, size, spectra_range: tuple[float, float]) -> np.ndarray:
    lo, hi = (float(x) for x in spectra_range)
    if lo == hi:
        return np.full(size, lo)
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def gen_commuting_pair(rng: np.random.Generator, n: int,
                       spectra_range: tuple[float, float]) -> CommutingPositivePair:
    u = gen_random_unitary(rng, n)
    return make_pair(u, log_uniform(rng, n, spectra_range), log_uniform(rng, n, spectra_range))


def gen_psd(rng: np.random.Generator, n: int, spectra_range: tuple[float, float]) -> HermitianMatrix:
    """U diag(log-uniform) U*; positive definite whenever the range is."""
    u = gen_random_unitary(rng, n)
    return HermitianMatrix.from_array((u * log_uniform(rng, n, spectra_range)) @ u.conj().T)


def gen_pd(rng: np.random.Generator, n: int, spectra_range: tuple[float, float]) -> HermitianMatrix:
    if spectra_range[0] <= 0:
        raise ValueError("a positive definite draw needs a positive spectral range")
    return gen_psd(rng, n, spectra_range)


def gen_hermitian(rng: np.random.Generator, n: int) -> HermitianMatrix:
    """GUE-like draw (M + M*)/2 for a complex Gaussian M."""
    return HermitianMatrix.from_array(gen_complex(rng, n))


def gen_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """U diag(z) U* with complex Gaussian z."""
    u = gen_random_unitary(rng, n)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    return (u * z) @ u.conj().T
