"""Reconstruction quality: PSNR, SSIM and relative squared error."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from .errors import DimensionMismatch, ZeroReference
from .tensor_core import as_tensor3

# PSNR of an exact reconstruction.
INFINITE_PSNR = math.inf

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(y, y_true):
    y, y_true = as_tensor3(y, "estimate"), as_tensor3(y_true, "reference")
    if y.shape != y_true.shape:
        raise DimensionMismatch(f"shapes differ: {y.shape} vs {y_true.shape}")
    return y, y_true


def rse(y, y_true) -> float:
    """``||y - y_true||_F^2 / ||y_true||_F^2``."""
    y, y_true = _pair(y, y_true)
    ref = float(np.sum(y_true * y_true))
    if ref == 0.0:
        raise ZeroReference("reference tensor is zero")
    return float(np.sum((y - y_true) ** 2)) / ref


def psnr(y, y_true) -> float:
    """PSNR in dB with the peak taken as the largest entry of ``y_true``.

    The mean squared error is averaged over all ``n1*n2*n3`` entries.
    Returns :data:`INFINITE_PSNR` when the tensors are identical.
    """
    y, y_true = _pair(y, y_true)
    if not np.any(y_true):
        raise ZeroReference("reference tensor is zero")
    mse = float(np.mean((y - y_true) ** 2))
    if mse == 0.0:
        return INFINITE_PSNR
    peak = float(np.max(y_true))
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA) -> np.ndarray:
    """Normalized 2-D Gaussian window of odd ``size``."""
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def _window_size(shape) -> int:
    size = min(SSIM_WINDOW, *shape)
    return size if size % 2 else size - 1


def _valid(img, w):
    """Weighted local means over every window fully inside ``img``."""
    h = w.shape[0] // 2
    full = correlate(img, w, mode="constant")
    return full[h : img.shape[0] - h, h : img.shape[1] - h]


def ssim_slice(x, y, data_range) -> float:
    """Mean SSIM of two matrices over all fully contained Gaussian windows.

    Slices smaller than 11 pixels use the largest odd window that fits.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = gaussian_window(_window_size(x.shape))
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mx, my = _valid(x, w), _valid(y, w)
    sxx = _valid(x * x, w) - mx * mx
    syy = _valid(y * y, w) - my * my
    sxy = _valid(x * y, w) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def ssim(y, y_true) -> float:
    """Single-scale SSIM averaged over frontal slices.

    Gaussian window 11 / sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range equal
    to the peak of ``y_true`` (its largest absolute entry if that is not
    positive).
    """
    y, y_true = _pair(y, y_true)
    if np.array_equal(y, y_true):
        return 1.0
    peak = float(np.max(y_true))
    if peak <= 0:
        peak = float(np.max(np.abs(y_true))) or 1.0
    return float(np.mean([ssim_slice(y[:, :, k], y_true[:, :, k], peak) for k in range(y.shape[2])]))


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    rse: float

    def to_dict(self) -> dict:
        """JSON-safe dict; an infinite PSNR is written as the string ``"inf"``."""
        return {
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
            "rse": self.rse,
        }


def report(y, y_true) -> MetricReport:
    return MetricReport(psnr=psnr(y, y_true), ssim=ssim(y, y_true), rse=rse(y, y_true))
