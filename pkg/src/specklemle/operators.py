"""Matrix-free forward and covariance operators, plus a dense test oracle.

The forward map is A = F^H M F with F the unitary 2-D DFT and M the binary
aperture diagonal, applied as ifft(mask * fft(.)) in O(n log n). A is
Hermitian (M real, F unitary) and idempotent (M binary); the adjoint is
asserted in the test suite rather than assumed.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, SizeLimitError
from .fields import ApertureMask, dft2, idft2

DENSE_ORACLE_MAX_N = 4096


class HolographicOperator:
    """Aperture-masked Fourier-domain projector acting on 2-D fields."""

    def __init__(self, aperture: ApertureMask):
        self.aperture = aperture
        self.H = aperture.H
        self.W = aperture.W
        # pre-shift once; dft2 leaves the origin at (0, 0)
        self._mask = aperture.shifted()

    @property
    def shape(self):
        return (self.H, self.W)

    def _check(self, u):
        u = np.asarray(u)
        if u.shape != (self.H, self.W):
            raise DimensionMismatchError(
                f"field shape {u.shape} does not match operator {self.shape}")
        return u

    def forward(self, u) -> np.ndarray:
        """A u = idft2(mask * dft2(u))."""
        return idft2(self._mask * dft2(self._check(u)))

    def adjoint(self, u) -> np.ndarray:
        """A^H u; equal to the forward map for this operator family."""
        return self.forward(u)

    def apply(self, u) -> np.ndarray:
        return self.forward(u)


class CovarianceOperator:
    """Sigma(x) h = A (x * A h) + sigma_z^2 h, Hermitian positive definite."""

    def __init__(self, forward: HolographicOperator, x, sigma_z2):
        if sigma_z2 <= 0:
            raise ValueError("sigma_z^2 must be positive (pass a positive "
                             "surrogate when the data were noise-free)")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != forward.shape:
            raise DimensionMismatchError("reflectivity does not match operator grid")
        if np.any(x < 0):
            raise ValueError("reflectivity must be nonnegative")
        self.forward = forward
        self.x = x
        self.sigma_z2 = float(sigma_z2)

    @property
    def shape(self):
        return self.forward.shape

    def apply(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=np.complex128)
        if h.shape != self.shape:
            raise DimensionMismatchError("field does not match operator grid")
        return self.forward.forward(self.x * self.forward.forward(h)) + self.sigma_z2 * h


class DenseOracle:
    """Explicit matrices built column-by-column from the matrix-free maps.

    Small-n test instrument: exposes a Cholesky-backed solve, inverse and
    log-determinant of Sigma. Capped at n = 4096 to bound memory.
    """

    def __init__(self, A: np.ndarray, sigma: np.ndarray | None):
        self.A = A
        self.sigma = sigma
        self._cho = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def _factor(self):
        if self.sigma is None:
            raise ValueError("oracle was built without a covariance")
        if self._cho is None:
            self._cho = scipy.linalg.cho_factor(self.sigma, lower=False)
        return self._cho

    def solve(self, b: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._factor(), b)

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.n, dtype=np.complex128))

    def logdet(self) -> float:
        c, _ = self._factor()
        return float(2.0 * np.sum(np.log(np.real(np.diag(c)))))


def build_dense_oracle(op: HolographicOperator, x=None, sigma_z2=None) -> DenseOracle:
    """Materialize A (and Sigma when x, sigma_z2 are given) on basis vectors."""
    n = op.H * op.W
    if n > DENSE_ORACLE_MAX_N:
        raise SizeLimitError(f"dense oracle capped at n={DENSE_ORACLE_MAX_N}, got {n}")
    basis = np.zeros(op.shape, dtype=np.complex128)
    A = np.empty((n, n), dtype=np.complex128)
    for j in range(n):
        basis.flat[j] = 1.0
        A[:, j] = op.forward(basis).ravel()
        basis.flat[j] = 0.0
    sigma = None
    if x is not None:
        if sigma_z2 is None:
            raise ValueError("sigma_z2 required together with x")
        cov = CovarianceOperator(op, x, sigma_z2)
        sigma = np.empty((n, n), dtype=np.complex128)
        for j in range(n):
            basis.flat[j] = 1.0
            sigma[:, j] = cov.apply(basis).ravel()
            basis.flat[j] = 0.0
    return DenseOracle(A, sigma)
