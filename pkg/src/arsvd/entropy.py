"""Spectral entropy of a singular-value spectrum and entropy-threshold rank selection."""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

# Relative slack on the threshold test. Exact ties (a uniform block with
# tau * block size integral) land a few ulps either side of the threshold,
# or ~1e-11 below it when a 1e-12-scale tail adds its sliver of entropy;
# both must count as met.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class NormalizedSpectrum:
    p: np.ndarray
    source_sum: float

    @property
    def degenerate(self):
        return self.source_sum == 0.0


@dataclass(frozen=True)
class EntropyProfile:
    """``partial[k-1]`` is the entropy of the top ``k`` spectrum entries."""

    partial: np.ndarray
    total: float


@dataclass(frozen=True)
class RankSelection:
    k: int
    tau: float
    achieved_fraction: float


def _check_spectrum(s):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ContractError(f"spectrum must be a nonempty 1-D array, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ContractError("spectrum contains non-finite values")
    if np.any(s < 0):
        raise ContractError("spectrum contains negative values")
    if np.any(np.diff(s) > 0):
        raise ContractError("spectrum must be non-increasing")
    return s


def check_tau(tau):
    tau = float(tau)
    if not (0.0 < tau <= 1.0):
        raise ContractError(f"tau must lie in (0, 1], got {tau}")
    return tau


def normalize_spectrum(s):
    """Divide the singular values by their sum.

    An all-zero spectrum has no distribution; it maps to a point mass on the
    first entry so that downstream entropies are zero.
    """
    s = _check_spectrum(s)
    total = float(s.sum())
    if total == 0.0:
        p = np.zeros_like(s)
        p[0] = 1.0
        return NormalizedSpectrum(p, 0.0)
    return NormalizedSpectrum(s / total, total)


def entropy_profile(spectrum, log=np.log):
    """Prefix entropies ``H(k) = -sum_{i<=k} p_i log p_i`` with ``0 log 0 = 0``.

    ``spectrum`` is a :class:`NormalizedSpectrum` or an array already summing
    to one. ``log`` may be swapped for another base; the selected rank is
    unaffected.
    """
    p = spectrum.p if isinstance(spectrum, NormalizedSpectrum) else np.asarray(spectrum, float)
    terms = np.zeros_like(p)
    pos = p > 0
    terms[pos] = -p[pos] * log(p[pos])
    partial = np.cumsum(terms)
    return EntropyProfile(partial, float(partial[-1]))


def select_rank(profile, tau):
    """Smallest ``k`` with ``H(k) >= tau * H_total``.

    A spectrum with zero total entropy (rank one, or all zeros) selects
    ``k = 1`` with an achieved fraction of 1.
    """
    tau = check_tau(tau)
    total = profile.total
    if total <= 0.0:
        return RankSelection(1, tau, 1.0)
    # At tau = 1 the prefix sum reaches the total exactly at the last positive term.
    threshold = total if tau == 1.0 else tau * total - TIE_RTOL * total
    hits = np.flatnonzero(profile.partial >= threshold)
    k = int(hits[0]) + 1 if hits.size else profile.partial.size
    return RankSelection(k, tau, float(profile.partial[k - 1] / total))


def rank_for_spectrum(s, tau, log=np.log):
    return select_rank(entropy_profile(normalize_spectrum(s), log=log), tau)

