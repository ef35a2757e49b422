"""Image quality metrics and the display-scale conventions.

Reconstruction works on normalized reflectivity (squared amplitude in
[0, 1] for an 8-bit source); metrics operate on display-scale amplitude
images with peak 255. ``to_image``/``to_reflectivity`` convert between the
two domains.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import DimensionMismatchError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def to_reflectivity(image, peak=255.0) -> np.ndarray:
    """Squared normalized amplitude of a display-scale image."""
    img = np.asarray(image, dtype=np.float64)
    return (np.maximum(img, 0.0) / peak) ** 2


def to_image(x, peak=255.0) -> np.ndarray:
    """Display-scale amplitude of a reflectivity array."""
    return peak * np.sqrt(np.maximum(np.asarray(x, dtype=np.float64), 0.0))


def _pair(ref, test):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise DimensionMismatchError(
            f"image shapes differ: {ref.shape} vs {test.shape}")
    return ref, test


def psnr(ref, test, peak=255.0) -> float:
    """10 log10(peak^2 / MSE); +inf for identical images."""
    ref, test = _pair(ref, test)
    mse = np.mean((ref - test) ** 2)
    if mse == 0.0:
        return np.inf
    return float(10.0 * np.log10(peak**2 / mse))


def _gaussian_window(size, sigma):
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(ref, test, peak=255.0) -> float:
    """Mean structural similarity with the standard 11x11 Gaussian window
    (sigma 1.5) and stabilizers C1=(0.01*peak)^2, C2=(0.03*peak)^2.

    Local statistics use fully-overlapping windows only, so images must be
    at least the window size.
    """
    ref, test = _pair(ref, test)
    if min(ref.shape) < SSIM_WINDOW:
        raise DimensionMismatchError(
            f"images must be at least {SSIM_WINDOW} pixels per side for SSIM")
    k = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    mu1 = convolve2d(ref, k, mode="valid")
    mu2 = convolve2d(test, k, mode="valid")
    s11 = convolve2d(ref * ref, k, mode="valid") - mu1**2
    s22 = convolve2d(test * test, k, mode="valid") - mu2**2
    s12 = convolve2d(ref * test, k, mode="valid") - mu1 * mu2

    num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)
    den = (mu1**2 + mu2**2 + c1) * (s11 + s22 + c2)
    return float(np.mean(num / den))
