"""Dense real linear algebra on float64 numpy arrays.

Matrices are 2-D C-contiguous ``float64`` arrays and vectors are 1-D arrays.
Products and norms delegate to numpy; the singular value decomposition is a
one-sided (Hestenes) Jacobi iteration implemented here so that its
convergence rule, sign convention and failure mode are under our control.
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ContractError, ShapeError, SvdConvergenceError

ROTATION_TOL = 1e-12
MAX_SWEEPS = 60


class SvdFactors(NamedTuple):
    """Thin SVD ``w = u @ diag(s) @ vt`` with ``r = min(m, n)``."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def rank_bound(self):
        return self.s.shape[0]

    def reconstruct(self):
        return (self.u * self.s) @ self.vt


def as_matrix(a, name="matrix"):
    """Validate ``a`` as a finite, nonempty 2-D float64 array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


def as_vector(x, name="vector"):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ShapeError(f"{name} must be a nonempty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


def matvec(a, x):
    """Return ``a @ x``; costs ``rows * cols`` multiply-adds."""
    a = as_matrix(a)
    x = as_vector(x)
    if a.shape[1] != x.shape[0]:
        raise ShapeError(f"matvec: matrix {a.shape} incompatible with vector ({x.shape[0]},)")
    return a @ x


def matmul(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} incompatible with {b.shape}")
    return a @ b


def frobenius_norm(a):
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


@lru_cache(maxsize=64)
def _round_robin(n):
    """Pair schedule covering every column pair once per sweep.

    Each round is a set of disjoint pairs, so all rotations in a round
    commute and can be applied together.
    """
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for i in range(size // 2):
            p, q = players[i], players[size - 1 - i]
            if p < 0 or q < 0:
                continue
            ps.append(min(p, q))
            qs.append(max(p, q))
        if ps:
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _complete_columns(u, missing):
    """Replace the columns flagged in ``missing`` with an orthonormal completion."""
    m = u.shape[0]
    filled = ~missing
    for j in np.flatnonzero(missing):
        basis = u[:, filled]
        # Project every standard basis vector off the current span; keep the largest.
        resid = np.eye(m) - basis @ basis.T
        resid -= basis @ (basis.T @ resid)
        e = int(np.argmax(np.einsum("ij,ij->j", resid, resid)))
        v = resid[:, e]
        v -= basis @ (basis.T @ v)
        u[:, j] = v / np.linalg.norm(v)
        filled[j] = True
    return u


def _jacobi_tall(a):
    """One-sided Jacobi on a tall matrix (m >= n). Returns unsorted (u, s, v)."""
    m, n = a.shape
    work = a.copy()
    v = np.eye(n)
    schedule = _round_robin(n)
    # Columns at or below this norm are rounding residue; rotating them never converges.
    floor_sq = (np.finfo(np.float64).eps * np.sqrt(np.sum(a * a))) ** 2
    off = 0.0
    for sweep in range(1, MAX_SWEEPS + 1):
        off = 0.0
        for p, q in schedule:
            ap, aq = work[:, p], work[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            scale = np.sqrt(alpha) * np.sqrt(beta)
            live = (alpha > floor_sq) & (beta > floor_sq)
            corr = np.where(live, np.abs(gamma) / np.where(live, scale, 1.0), 0.0)
            if corr.size:
                off = max(off, float(corr.max()))
            active = corr > ROTATION_TOL
            if not active.any():
                continue
            zeta = np.where(active, (beta - alpha) / np.where(active, 2.0 * gamma, 1.0), 0.0)
            t = np.where(
                active, np.copysign(1.0, zeta) / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0
            )
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            work[:, p], work[:, q] = c * ap - s * aq, s * ap + c * aq
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
        if off <= ROTATION_TOL:
            break
    else:
        raise SvdConvergenceError(
            f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps "
            f"(largest column correlation {off:.3e})",
            residual=off,
            sweeps=MAX_SWEEPS,
        )

    sing = np.sqrt(np.einsum("ij,ij->j", work, work))
    missing = sing * sing <= floor_sq
    u = np.zeros_like(work)
    keep = ~missing
    u[:, keep] = work[:, keep] / sing[keep]
    if missing.any():
        u = _complete_columns(u, missing)
    return u, sing, v


def svd(w):
    """Thin singular value decomposition of a finite real matrix.

    Singular values come back sorted in non-increasing order. Each column of
    ``u`` is signed so that its largest-magnitude entry is nonnegative, with
    the matching row of ``vt`` flipped alongside. The result is a
    deterministic function of the input.

    Raises :class:`SvdConvergenceError` if the sweep cap is reached.
    """
    w = as_matrix(w, "w")
    m, n = w.shape
    # Exact power-of-two rescaling keeps squared column norms clear of under/overflow.
    peak = np.max(np.abs(w))
    exponent = int(np.frexp(peak)[1]) if peak > 0 else 0
    scaled = np.ldexp(w, -exponent)
    if m >= n:
        u, s, v = _jacobi_tall(scaled)
    else:
        left_t, s, right_t = _jacobi_tall(scaled.T)
        u, v = right_t, left_t
    s = np.ldexp(s, exponent)

    order = np.argsort(-s, kind="stable")
    s = s[order]
    u = u[:, order]
    vt = v[:, order].T.copy()

    pivot = np.argmax(np.abs(u), axis=0)
    flip = u[pivot, np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    vt[flip, :] *= -1.0
    return SvdFactors(np.ascontiguousarray(u), s, vt)
