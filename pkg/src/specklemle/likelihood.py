"""Gaussian log-likelihood of multi-look coherent measurements and its
gradient.

Two routes are provided. The dense route (``nll_exact``/``grad_exact``)
factorizes the explicit covariance and is exact but limited to small grids;
it exists to validate the scalable route. The matrix-free route
(``estimate_diag``/``grad_mc``) assembles the same gradient from conjugate
gradient solves and a Monte-Carlo estimate of diag(A^H Sigma^-1 A), and is
the one the reconstruction loop uses:

    grad = diag(A^H Sigma(x)^-1 A) - (1/L) sum_l |A^H Sigma(x)^-1 y_l|^2
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EstimatorError, SizeLimitError
from .krylov import CGConfig, cg_solve
from .operators import CovarianceOperator, HolographicOperator, build_dense_oracle
from .simulate import ROLE_PROBE, MeasurementSet, stream_rng


@dataclass
class ProbeBatch:
    """K Monte-Carlo probe vectors with addressable random streams.

    ``prefix`` namespaces the probe streams (e.g. by outer iteration) so
    that probes are fresh and reproducible regardless of evaluation order.
    """

    k: int
    kind: str = "gaussian"          # or "rademacher"
    seed: int = 0
    prefix: tuple[int, ...] = ()

    def __post_init__(self):
        if self.k < 1:
            raise EstimatorError("need at least one probe")
        if self.kind not in ("gaussian", "rademacher"):
            raise ValueError(f"unknown probe kind {self.kind!r}")

    def draw(self, index: int, shape) -> np.ndarray:
        rng = stream_rng(self.seed, ROLE_PROBE, *self.prefix, index)
        if self.kind == "gaussian":
            return rng.standard_normal(shape)
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


@dataclass
class DiagDiagnostics:
    probes_used: int
    std_error: np.ndarray          # per-coordinate standard error of the mean
    imag_residue: float            # max |Im| of the probe average
    cg_reports: list = field(default_factory=list)


@dataclass
class GradientEstimate:
    """Assembled stochastic gradient: ``value = diag_term - data_term``."""

    value: np.ndarray
    diag_term: np.ndarray
    data_term: np.ndarray
    cg_reports: list
    probes_used: int


def estimate_diag(cov: CovarianceOperator, probes: ProbeBatch,
                  cg_cfg: CGConfig | None = None, imag_tol: float = 1e-3):
    """Monte-Carlo estimate of diag(A^H Sigma^-1 A).

    Each probe v with zero-mean independent entries gives an unbiased
    sample A^H u * v where Sigma u = A v is solved by CG. The average is
    real in expectation; its imaginary residue is checked against
    ``imag_tol * max|diag|`` (pass ``imag_tol=None`` to skip for strongly
    asymmetric custom masks).
    """
    cg_cfg = cg_cfg or CGConfig()
    A = cov.forward
    mean = np.zeros(cov.shape, dtype=np.complex128)
    m2 = np.zeros(cov.shape)
    reports = []
    for k in range(probes.k):
        v = probes.draw(k, cov.shape)
        u, rep = cg_solve(cov, A.forward(v.astype(np.complex128)), cg_cfg)
        reports.append(rep)
        w = A.adjoint(u) * v
        delta_r = w.real - mean.real
        mean += (w - mean) / (k + 1)
        m2 += delta_r * (w.real - mean.real)
    d = mean.real
    imag_residue = float(np.max(np.abs(mean.imag)))
    if imag_tol is not None and probes.k > 1:
        bound = imag_tol * max(np.max(np.abs(d)), 1e-300)
        if imag_residue > bound:
            raise EstimatorError(
                f"imaginary residue {imag_residue:.3e} exceeds {bound:.3e}; "
                "mask may be far from conjugate-symmetric")
    if probes.k > 1:
        se = np.sqrt(m2 / (probes.k - 1) / probes.k)
    else:
        se = np.full(cov.shape, np.nan)
    return d, DiagDiagnostics(probes.k, se, imag_residue, reports)


def grad_mc(x, measurements: MeasurementSet, sigma_z2, probes: ProbeBatch,
            cg_cfg: CGConfig | None = None, forward: HolographicOperator | None = None,
            look_starts=None, imag_tol: float = 1e-3) -> GradientEstimate:
    """Matrix-free stochastic gradient of the negative log-likelihood.

    Costs K + L conjugate-gradient solves. ``look_starts`` optionally warm
    starts the per-look solves with the previous outer iteration's
    solutions; entries are updated in place when given.
    """
    cg_cfg = cg_cfg or CGConfig()
    A = forward or HolographicOperator(measurements.aperture)
    cov = CovarianceOperator(A, x, sigma_z2)

    d, diag_info = estimate_diag(cov, probes, cg_cfg, imag_tol=imag_tol)
    reports = list(diag_info.cg_reports)

    L = measurements.L
    data = np.zeros(cov.shape)
    for ell in range(L):
        cfg_ell = cg_cfg
        if look_starts is not None and look_starts[ell] is not None:
            cfg_ell = CGConfig(tol=cg_cfg.tol, max_iter=cg_cfg.max_iter,
                               x0=look_starts[ell])
        h, rep = cg_solve(cov, measurements.measurements[ell], cfg_ell)
        reports.append(rep)
        if look_starts is not None:
            look_starts[ell] = h
        m = A.adjoint(h)
        data += np.abs(m) ** 2
    data /= L
    return GradientEstimate(d - data, d, data, reports, probes.k)


def _dense_pieces(x, measurements: MeasurementSet, sigma_z2):
    n = measurements.shape[0] * measurements.shape[1]
    if n > 4096:
        raise SizeLimitError("exact likelihood limited to n <= 4096")
    A = HolographicOperator(measurements.aperture)
    oracle = build_dense_oracle(A, np.asarray(x, dtype=np.float64), sigma_z2)
    return oracle


def nll_exact(x, measurements: MeasurementSet, sigma_z2) -> float:
    """log det Sigma(x) + (1/L) sum_l y_l^H Sigma(x)^-1 y_l, densely."""
    oracle = _dense_pieces(x, measurements, sigma_z2)
    quad = 0.0
    for ell in range(measurements.L):
        y = measurements.measurements[ell].ravel()
        quad += np.vdot(y, oracle.solve(y)).real
    return oracle.logdet() + quad / measurements.L


def grad_exact(x, measurements: MeasurementSet, sigma_z2) -> np.ndarray:
    """Exact gradient diag(A^H S^-1 A) - (1/L) sum_l |A^H S^-1 y_l|^2."""
    oracle = _dense_pieces(x, measurements, sigma_z2)
    Ah = oracle.A.conj().T
    Sinv = oracle.inverse()
    diag = np.einsum("ij,jk,ki->i", Ah, Sinv, oracle.A).real
    data = np.zeros_like(diag)
    for ell in range(measurements.L):
        y = measurements.measurements[ell].ravel()
        data += np.abs(Ah @ oracle.solve(y)) ** 2
    data /= measurements.L
    return (diag - data).reshape(measurements.shape)
