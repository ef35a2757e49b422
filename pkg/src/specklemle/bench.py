"""Timing harness for the matrix-free pipeline and the compiled kernels."""

from __future__ import annotations

import time

import numpy as np

from . import _kernels
from .fields import aperture_from_ratio
from .krylov import CGConfig, cg_solve
from .likelihood import ProbeBatch, grad_mc
from .operators import CovarianceOperator, HolographicOperator
from .phantoms import shapes_phantom
from .metrics import to_reflectivity
from .simulate import simulate_measurements


def _scene(size, sigma=25.0, looks=4, seed=0):
    x = to_reflectivity(shapes_phantom(size))
    aperture = aperture_from_ratio(size, size, 1.0)
    ms = simulate_measurements(x, aperture, sigma / 255.0, looks, seed)
    return x, ms


def _best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_operator(size, repeats=5) -> dict:
    """Seconds per forward and per covariance application."""
    x, ms = _scene(size)
    A = HolographicOperator(ms.aperture)
    cov = CovarianceOperator(A, x, (25.0 / 255.0) ** 2)
    u = ms.measurements[0]
    A.forward(u)
    cov.apply(u)
    return {
        "size": size,
        "forward_s": _best_of(lambda: A.forward(u), repeats),
        "covariance_s": _best_of(lambda: cov.apply(u), repeats),
    }


def bench_cg(size, iters=30, repeats=3) -> dict:
    """Seconds per CG iteration on a representative covariance solve."""
    x, ms = _scene(size)
    A = HolographicOperator(ms.aperture)
    cov = CovarianceOperator(A, x, (25.0 / 255.0) ** 2)
    b = ms.measurements[0]
    cfg = CGConfig(tol=1e-30, max_iter=iters)

    def run():
        cg_solve(cov, b, cfg)

    run()
    total = _best_of(run, repeats)
    return {"size": size, "cg_iterations": iters,
            "per_iteration_s": total / iters, "solve_s": total}


def bench_gradient(size, probes=5, looks=4, repeats=1) -> dict:
    """Seconds for one full stochastic gradient evaluation (K+L solves)."""
    x, ms = _scene(size, looks=looks)
    cfg = CGConfig()
    pb = ProbeBatch(probes, seed=1)

    def run():
        grad_mc(x, ms, (25.0 / 255.0) ** 2, pb, cfg)

    total = _best_of(run, repeats)
    return {"size": size, "probes": probes, "looks": looks,
            "gradient_s": total}


def bench_kernels(size=256, repeats=3) -> dict:
    """Compiled-vs-numpy timings for the loop-heavy kernels."""
    rng = np.random.default_rng(0)
    img = rng.random((size, size))
    x1 = rng.random(size * size) * 2.0
    cmu = rng.random(size * size) + 1e-3

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    out = {"size": size, "backends": {}}
    for b in backends:
        _kernels.tv_prox(img, 0.02, n_iter=5, backend=b)       # warm up / compile
        _kernels.median2d(img, 3, backend=b)
        _kernels.prox_cubic_root(x1[:16], cmu[:16], 0.01, backend=b)
        out["backends"][b] = {
            "tv_prox_s": _best_of(
                lambda: _kernels.tv_prox(img, 0.02, n_iter=50, backend=b), repeats),
            "median2d_s": _best_of(
                lambda: _kernels.median2d(img, 3, backend=b), repeats),
            "cubic_root_s": _best_of(
                lambda: _kernels.prox_cubic_root(x1, cmu, 0.01, backend=b), repeats),
        }
    return out


def run_bench(size, probes=5, looks=4, kernels=True) -> dict:
    report = {
        "active_kernel_backend": _kernels.default_backend(),
        "operator": bench_operator(size),
        "cg": bench_cg(size),
        "gradient": bench_gradient(size, probes, looks),
    }
    if kernels:
        report["kernels"] = bench_kernels(min(size, 256))
    return report
