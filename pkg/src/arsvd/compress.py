"""Per-matrix low-rank compression: adaptive (entropy-selected) and fixed rank."""

from dataclasses import dataclass

import numpy as np

from .entropy import check_tau, entropy_profile, normalize_spectrum, select_rank
from .errors import ContractError, ShapeError
from .linalg import as_matrix, frobenius_norm, svd


@dataclass(frozen=True, eq=False)
class LowRankFactors:
    """Leading-``k`` singular triplets ``u (m, k)``, ``s (k,)``, ``vt (k, n)``."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def __post_init__(self):
        k = self.s.shape[0]
        if self.u.ndim != 2 or self.vt.ndim != 2 or self.u.shape[1] != k or self.vt.shape[0] != k:
            raise ShapeError(
                f"inconsistent factor shapes u{self.u.shape} s{self.s.shape} vt{self.vt.shape}"
            )

    @property
    def k(self):
        return self.s.shape[0]

    @property
    def shape(self):
        return (self.u.shape[0], self.vt.shape[1])

    @property
    def stored_params(self):
        """Scalars actually stored, ``k(m + n) + k``."""
        m, n = self.shape
        return self.k * (m + n) + self.k

    def materialize(self):
        return (self.u * self.s) @ self.vt

    def equals(self, other):
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in ((self.u, other.u), (self.s, other.s), (self.vt, other.vt))
        )


@dataclass(frozen=True)
class CostModel:
    m: int
    n: int
    k: int
    dense_params: int
    factored_params: int
    dense_flops: int
    factored_flops: int

    @property
    def inflates(self):
        return self.factored_params >= self.dense_params


def cost_model(m, n, k):
    """Storage and multiply-add counts for a dense ``m x n`` layer and its rank-``k`` form.

    ``factored_params`` is ``k(m + n)``; the separately stored ``s`` adds ``k``
    more scalars that are not counted here. A factored forward pass costs
    ``k*n`` (project) + ``k`` (scale) + ``k*m`` (expand).
    """
    m, n, k = int(m), int(n), int(k)
    if m < 1 or n < 1 or k < 1 or k > min(m, n):
        raise ContractError(f"cost_model needs 1 <= k <= min(m, n); got m={m} n={n} k={k}")
    return CostModel(
        m=m,
        n=n,
        k=k,
        dense_params=m * n,
        factored_params=k * (m + n),
        dense_flops=m * n,
        factored_flops=k * n + k + k * m,
    )


def numerical_spectrum(s, shape):
    """Singular values with rounding-level entries (``<= max(m, n) * eps * s_max``) set to zero.

    Without this a rank-deficient matrix has a tail of ~1e-16 values whose
    entropy, relative to a near-zero total, swamps the rank selection.
    """
    s = np.asarray(s, dtype=np.float64)
    cutoff = max(shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    return np.where(s > cutoff, s, 0.0)


def truncate(factors, k):
    u, s, vt = factors
    return LowRankFactors(
        np.ascontiguousarray(u[:, :k]), s[:k].copy(), np.ascontiguousarray(vt[:k, :])
    )


def arsvd_compress(w, tau, factors=None):
    """Compress ``w`` to the smallest rank retaining a ``tau`` fraction of spectral entropy.

    Returns ``(LowRankFactors, RankSelection)``. A precomputed SVD of ``w`` can
    be passed as ``factors`` to skip the decomposition.
    """
    tau = check_tau(tau)
    w = as_matrix(w, "w")
    if factors is None:
        factors = svd(w)
    spectrum = numerical_spectrum(factors.s, w.shape)
    selection = select_rank(entropy_profile(normalize_spectrum(spectrum)), tau)
    return truncate(factors, selection.k), selection


def fixed_rank_truncate(w, k, factors=None):
    """Keep the ``k`` leading singular triplets of ``w`` (truncated SVD baseline)."""
    w = as_matrix(w, "w")
    r = min(w.shape)
    if isinstance(k, (bool, np.bool_)) or int(k) != k or not 1 <= k <= r:
        raise ContractError(f"fixed rank must satisfy 1 <= k <= {r}, got {k}")
    if factors is None:
        factors = svd(w)
    return truncate(factors, int(k))


def reconstruction_error(w, factors):
    w = as_matrix(w, "w")
    if factors.shape != w.shape:
        raise ShapeError(f"factors of shape {factors.shape} do not match matrix {w.shape}")
    return frobenius_norm(factors.materialize() - w)
