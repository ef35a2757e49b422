"""Seeded synthesis of multi-look speckled holographic measurements.

Every random draw comes from a counter-style stream derived from
``(master seed, role, index...)`` so that results are independent of
generation order and identical across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .fields import ApertureMask

ROLE_SPECKLE = 1
ROLE_NOISE = 2
ROLE_PROBE = 3


def stream_rng(seed, *key) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, key...)``."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: a master seed plus a role/index key."""

    seed: int
    key: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        return stream_rng(self.seed, *self.key)


@dataclass
class MeasurementSet:
    """L complex measurement fields with their noise level and aperture."""

    measurements: np.ndarray  # (L, H, W) complex128
    sigma_z: float
    aperture: ApertureMask
    seed: int

    def __post_init__(self):
        self.measurements = np.asarray(self.measurements, dtype=np.complex128)
        if self.measurements.ndim != 3:
            raise DimensionMismatchError("measurements must be (L, H, W)")
        if self.measurements.shape[1:] != (self.aperture.H, self.aperture.W):
            raise DimensionMismatchError("measurements do not match the aperture grid")

    @property
    def L(self) -> int:
        return self.measurements.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.measurements.shape[1:]


def _complex_normal(rng, shape, var_half):
    a = rng.standard_normal(shape)
    b = rng.standard_normal(shape)
    return np.sqrt(var_half) * (a + 1j * b)


def sample_speckle_field(x, stream: RngStream) -> np.ndarray:
    """Draw g with independent CN(0, x_i) entries, so E|g_i|^2 = x_i."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("reflectivity must be nonnegative")
    rng = stream.generator()
    return _complex_normal(rng, x.shape, x / 2.0)


def sample_sensor_noise(shape, sigma_z, stream: RngStream) -> np.ndarray:
    """Additive CN(0, sigma_z^2) sensor noise."""
    if sigma_z < 0:
        raise ValueError("sigma_z must be nonnegative")
    rng = stream.generator()
    return _complex_normal(rng, shape, sigma_z**2 / 2.0)


def simulate_measurements(x, aperture: ApertureMask, sigma_z, L, seed) -> MeasurementSet:
    """Simulate L looks of y = A g + z with fresh speckle per look."""
    from .operators import HolographicOperator

    if L < 1:
        raise ValueError("need at least one look")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (aperture.H, aperture.W):
        raise DimensionMismatchError("image does not match the aperture grid")
    op = HolographicOperator(aperture)
    ys = np.empty((L,) + x.shape, dtype=np.complex128)
    for ell in range(L):
        g = sample_speckle_field(x, RngStream(seed, (ROLE_SPECKLE, ell)))
        z = sample_sensor_noise(x.shape, sigma_z, RngStream(seed, (ROLE_NOISE, ell)))
        ys[ell] = op.forward(g) + z
    return MeasurementSet(ys, float(sigma_z), aperture, int(seed))


def simulate_amplitude_measurement(x, aperture: ApertureMask, sigma_z, seed) -> MeasurementSet:
    """Speckle-free reference measurement y = A sqrt(x) + z (single look)."""
    from .operators import HolographicOperator

    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("reflectivity must be nonnegative")
    if x.shape != (aperture.H, aperture.W):
        raise DimensionMismatchError("image does not match the aperture grid")
    op = HolographicOperator(aperture)
    z = sample_sensor_noise(x.shape, sigma_z, RngStream(seed, (ROLE_NOISE, 0)))
    y = op.forward(np.sqrt(x).astype(np.complex128)) + z
    return MeasurementSet(y[None], float(sigma_z), aperture, int(seed))
