"""Partial singular value thresholding and the PSTNN proximal map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidRankTarget, SvdFailure
from .t_algebra import rank_targets
from .tensor_core import as_tensor3


@dataclass(frozen=True)
class ProxParams:
    """Threshold ``tau`` (= lambda / beta) and the number of untouched singular values per slice."""

    tau: float
    n_target: Union[int, np.ndarray] = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def soft_threshold(x, tau):
    """``sign(x) * max(|x| - tau, 0)``, elementwise."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be non-negative")
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def psvt_singular_values(sigma, n_keep, tau):
    """Keep the first ``n_keep`` entries of ``sigma`` (last axis), soft-threshold the rest.

    ``sigma`` must be sorted non-increasing. ``n_keep`` may be a scalar or have
    the shape of ``sigma`` without its last axis.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    pos = np.arange(sigma.shape[-1])
    keep = pos < np.expand_dims(np.asarray(n_keep), -1)
    return np.where(keep, sigma, np.maximum(sigma - tau, 0.0))


def psvt_matrix(y, n_keep: int, tau: float) -> np.ndarray:
    """Minimizer of ``tau * ||X||_{p=N} + 0.5 * ||X - y||_F^2`` for a complex or real matrix.

    With ``y = U diag(s) V^H`` the result is ``U diag(s') V^H`` where the
    leading ``n_keep`` singular values are left alone and the tail is
    soft-thresholded by ``tau``. ``n_keep = 0`` is ordinary singular value
    thresholding. Ties at position ``n_keep`` are split by the order LAPACK
    returns.
    """
    y = np.asarray(y)
    if y.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {y.shape}")
    if not 0 <= n_keep <= min(y.shape):
        raise InvalidRankTarget(f"n_keep must lie in [0, {min(y.shape)}], got {n_keep}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    try:
        u, s, vh = np.linalg.svd(y, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    return (u * psvt_singular_values(s, n_keep, tau)) @ vh


def pstnn_prox_tensor(b, params: ProxParams) -> np.ndarray:
    """Apply :func:`psvt_matrix` to every Fourier slice of ``b`` and transform back.

    Slice ``k`` uses threshold ``params.tau`` and keeps ``N_k`` singular values.
    Only slices ``0..n3//2`` are factorized; the others are their conjugates,
    so the result is real.
    """
    b = as_tensor3(b, finite=True)
    n1, n2, n3 = b.shape
    keep = rank_targets(params.n_target, n3, min(n1, n2))
    # rfft/irfft carry only slices 0..n3//2; irfft rebuilds the conjugate half
    # and ignores the imaginary part of the self-conjugate slices.
    half = np.moveaxis(np.fft.rfft(b, axis=2), 2, 0)
    try:
        u, s, vh = np.linalg.svd(half, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    s = psvt_singular_values(s, keep[: half.shape[0]], params.tau)
    xf = (u * s[:, np.newaxis, :]) @ vh
    return np.fft.irfft(np.moveaxis(xf, 0, 2), n=n3, axis=2)
