"""t-product algebra: t-product, transpose, identity, t-SVD, ranks and norms.

Everything is computed slice-wise in the Fourier domain. For a real input the
Fourier slices come in conjugate pairs ``k <-> n3 - k``, so only the first
``n3 // 2 + 1`` slices are factorized and the rest are filled by conjugation.
That keeps every returned tensor exactly real.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidRankTarget, SvdFailure
from .tensor_core import as_tensor3, fft_mode3, ifft_mode3


class TSvdFactors(NamedTuple):
    """``a = u * s * v^T`` with orthogonal ``u``, ``v`` and f-diagonal ``s``."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def n_half(n3: int) -> int:
    """Number of Fourier slices not determined by conjugate symmetry."""
    return n3 // 2 + 1


def self_conjugate(k: int, n3: int) -> bool:
    """True for the Fourier slices that are real for a real input (DC and Nyquist)."""
    return k == 0 or 2 * k == n3


def mirror_half(half: np.ndarray, n3: int) -> np.ndarray:
    """Expand slices ``0..n3//2`` (last axis) to all ``n3`` slices by conjugation."""
    full = np.empty(half.shape[:-1] + (n3,), dtype=np.complex128)
    h = half.shape[-1]
    full[..., :h] = half
    for k in range(h, n3):
        full[..., k] = np.conj(half[..., n3 - k])
    return full


def _svd(m, full_matrices=False, compute_uv=True):
    try:
        return np.linalg.svd(m, full_matrices=full_matrices, compute_uv=compute_uv)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc


def fourier_half(a):
    """Fourier slices ``0..n3//2`` stacked along the first axis, self-conjugate ones made real."""
    af = fft_mode3(a)
    n3 = af.shape[2]
    half = np.moveaxis(af[:, :, : n_half(n3)], 2, 0).copy()
    for k in range(half.shape[0]):
        if self_conjugate(k, n3):
            half[k] = half[k].real
    return half


def t_product(a, b) -> np.ndarray:
    """t-product of ``a`` (n1 x n2 x n3) and ``b`` (n2 x n4 x n3)."""
    a, b = as_tensor3(a, "a"), as_tensor3(b, "b")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionMismatch(f"cannot t-multiply {a.shape} by {b.shape}")
    n3 = a.shape[2]
    cf = fourier_half(a) @ fourier_half(b)
    return ifft_mode3(mirror_half(np.moveaxis(cf, 0, 2), n3))


def conj_transpose(a) -> np.ndarray:
    """Transpose every frontal slice and reverse the order of slices 2..n3."""
    a = as_tensor3(a)
    out = np.transpose(a, (1, 0, 2)).copy()
    out[:, :, 1:] = out[:, :, :0:-1]
    return out


def identity_tensor(n: int, n3: int) -> np.ndarray:
    if n < 1 or n3 < 1:
        raise DimensionMismatch("identity tensor needs n >= 1 and n3 >= 1")
    eye = np.zeros((n, n, n3))
    eye[:, :, 0] = np.eye(n)
    return eye


def block_diag(a) -> np.ndarray:
    """Block-diagonal matrix of the Fourier slices, shape (n1*n3, n2*n3)."""
    af = fft_mode3(a)
    return scipy.linalg.block_diag(*[af[:, :, k] for k in range(af.shape[2])])


def t_svd(a) -> TSvdFactors:
    """Full t-SVD via per-slice SVDs in the Fourier domain.

    Singular values of each Fourier slice are non-negative, real and sorted
    non-increasing, so ``fft_mode3(s)[i, i, k]`` is the i-th singular value of
    the k-th Fourier slice of ``a``.
    """
    a = as_tensor3(a, finite=True)
    n1, n2, n3 = a.shape
    half = fourier_half(a)
    u, sv, vh = _svd(half, full_matrices=True)
    h = half.shape[0]
    for k in range(h):
        if self_conjugate(k, n3):
            u[k], sv[k], vh[k] = _svd(half[k].real, full_matrices=True)
    sf = np.zeros((h, n1, n2), dtype=np.complex128)
    idx = np.arange(min(n1, n2))
    sf[:, idx, idx] = sv
    vf = np.conj(np.swapaxes(vh, 1, 2))
    factors = []
    for part in (u, sf, vf):
        factors.append(ifft_mode3(mirror_half(np.moveaxis(part, 0, 2), n3)))
    return TSvdFactors(*factors)


def fourier_singular_values(a) -> np.ndarray:
    """Singular values of every Fourier slice, shape (n3, min(n1, n2)), rows non-increasing."""
    a = as_tensor3(a, finite=True)
    n3 = a.shape[2]
    sv = _svd(fourier_half(a), compute_uv=False)
    return np.moveaxis(mirror_half(sv.T, n3).real, 1, 0)


def default_rank_tol(a, sv=None) -> float:
    """``max(n1, n2) * eps * sigma_max`` over all Fourier slices."""
    if sv is None:
        sv = fourier_singular_values(a)
    n1, n2 = np.shape(a)[:2]
    smax = float(sv.max()) if sv.size else 0.0
    return max(n1, n2) * np.finfo(np.float64).eps * smax


def multi_rank(a, tol=None) -> np.ndarray:
    """Rank of every Fourier slice (numerical, singular values ``> tol``)."""
    sv = fourier_singular_values(a)
    if tol is None:
        tol = default_rank_tol(a, sv)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return np.count_nonzero(sv > tol, axis=1)


def tubal_rank(a, tol=None) -> int:
    return int(multi_rank(a, tol).max())


def rank_targets(n_target, n3: int, limit: int) -> np.ndarray:
    """Broadcast a scalar or per-slice rank target to an int vector of length ``n3``.

    Targets of conjugate slice pairs must agree, otherwise the result of the
    slice-wise operators would not be real.
    """
    n = np.asarray(n_target)
    if n.ndim == 0:
        n = np.full(n3, n)
    if n.shape != (n3,):
        raise InvalidRankTarget(f"rank target must be a scalar or have length {n3}, got shape {n.shape}")
    if not np.all(np.equal(np.mod(n, 1), 0)):
        raise InvalidRankTarget("rank target must be integral")
    n = n.astype(int)
    if n.min() < 0 or n.max() > limit:
        raise InvalidRankTarget(f"rank target must lie in [0, {limit}], got {n.tolist()}")
    if np.any(n[1:] != n[1:][::-1]):
        raise InvalidRankTarget("rank targets of conjugate slices k and n3-k must be equal")
    return n


def tnn(a) -> float:
    """Tensor nuclear norm: sum of the nuclear norms of the Fourier slices."""
    return float(fourier_singular_values(a).sum())


def pstnn(a, n_target) -> float:
    """Partial sum of the TNN: per Fourier slice, the singular values past the ``N_k`` largest."""
    sv = fourier_singular_values(a)
    n1, n2, n3 = np.shape(a)
    keep = rank_targets(n_target, n3, min(n1, n2))
    tail = np.arange(sv.shape[1])[np.newaxis, :] >= keep[:, np.newaxis]
    return float(sv[tail].sum())
