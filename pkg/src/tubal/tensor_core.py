"""Dense third-order tensors: mode-3 DFT pair, unfoldings and norms.

Tensors are plain ``numpy.ndarray`` objects of shape ``(n1, n2, n3)`` and
dtype float64. A "Fourier tensor" is the complex array of the same shape
obtained by a DFT along the last axis; ``xf[:, :, k]`` is its k-th frontal
slice.

DFT convention: the forward transform is unscaled and the inverse carries
the ``1/n3`` factor (MATLAB ``fft``/``ifft`` semantics). Consequently
``n3 * ||x||_F**2 == sum_k ||xf[:, :, k]||_F**2``.

The linear layout used for files is slice-major with the first index
fastest, i.e. ``x.ravel(order="F")``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonRealResult

# Imaginary residue allowed when a real result is requested, relative to the
# Frobenius norm of the result.
IMAG_TOL = 1e-10


def as_tensor3(x, name="tensor", finite=False) -> np.ndarray:
    """Validate ``x`` as a real 3-mode tensor and return it as float64."""
    arr = np.asarray(x)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 3-mode array, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        raise TypeError(f"{name} must be real")
    arr = arr.astype(np.float64, copy=False)
    if finite and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_mask(mask, shape) -> np.ndarray:
    """Boolean observation mask; nonzero entries are observed."""
    m = np.asarray(mask)
    if m.ndim == 2 and len(shape) == 3 and shape[2] == 1:
        m = m[:, :, np.newaxis]
    if m.shape != tuple(shape):
        raise DimensionMismatch(f"mask shape {m.shape} does not match tensor shape {tuple(shape)}")
    return m.astype(bool, copy=False)


def _same_shape(x, y):
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")


def fft_mode3(x) -> np.ndarray:
    """Unnormalized DFT of every tube ``x[i, j, :]``."""
    x = as_tensor3(x)
    return np.fft.fft(x, axis=2)


def ifft_mode3(xf, real=True) -> np.ndarray:
    """Inverse of :func:`fft_mode3`.

    With ``real=True`` the imaginary residue is dropped if it is below
    ``IMAG_TOL`` relative to the Frobenius norm of the result, otherwise
    :class:`NonRealResult` is raised.
    """
    xf = np.asarray(xf)
    if xf.ndim != 3:
        raise DimensionMismatch(f"Fourier tensor must be 3-mode, got shape {xf.shape}")
    out = np.fft.ifft(xf, axis=2)
    if not real:
        return out
    scale = np.linalg.norm(out)
    resid = np.linalg.norm(out.imag)
    if resid > IMAG_TOL * scale:
        raise NonRealResult(
            f"imaginary residue {resid:.3e} exceeds {IMAG_TOL:g} x {scale:.3e}; "
            "input is not conjugate symmetric along mode 3"
        )
    return np.ascontiguousarray(out.real)


def unfold(x, mode) -> np.ndarray:
    """Mode-``mode`` unfolding (modes are 1-based).

    Element ``(i1, i2, i3)`` goes to row ``i_mode``; the remaining indices
    enumerate the columns with the lowest remaining mode varying fastest.
    """
    x = as_tensor3(x)
    if mode not in (1, 2, 3):
        raise DimensionMismatch(f"mode must be 1, 2 or 3, got {mode}")
    return np.moveaxis(x, mode - 1, 0).reshape(x.shape[mode - 1], -1, order="F")


def fold(m, mode, dims) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    m = np.asarray(m, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if mode not in (1, 2, 3):
        raise DimensionMismatch(f"mode must be 1, 2 or 3, got {mode}")
    rest = [d for i, d in enumerate(dims) if i != mode - 1]
    if m.shape != (dims[mode - 1], rest[0] * rest[1]):
        raise DimensionMismatch(f"matrix of shape {m.shape} cannot fold to {dims} along mode {mode}")
    t = m.reshape([dims[mode - 1]] + rest, order="F")
    return np.moveaxis(t, 0, mode - 1)


def mode_product(x, a, mode) -> np.ndarray:
    """Mode-n product ``x ×_mode a`` for a matrix ``a`` of shape (J, I_mode)."""
    x = as_tensor3(x)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != x.shape[mode - 1]:
        raise DimensionMismatch(f"matrix {a.shape} incompatible with mode {mode} of {x.shape}")
    dims = list(x.shape)
    dims[mode - 1] = a.shape[0]
    return fold(a @ unfold(x, mode), mode, dims)


def inner(x, y) -> float:
    x, y = as_tensor3(x), as_tensor3(y)
    _same_shape(x, y)
    return float(np.vdot(x.ravel(), y.ravel()))


def fro_norm(x) -> float:
    return float(np.sqrt(inner(x, x)))


def inf_norm(x) -> float:
    """Largest absolute entry; 0 for an all-zero tensor."""
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0
