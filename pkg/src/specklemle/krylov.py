"""Conjugate gradient for Hermitian positive-definite operator systems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CGBreakdownError


@dataclass
class CGConfig:
    tol: float = 1e-6          # residual 2-norm threshold
    max_iter: int = 500
    x0: np.ndarray | None = None   # warm start; zero field when None
    record_iterates: bool = False  # keep per-iteration solution copies
    preconditioner: str | None = None  # reserved; only None is implemented

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.preconditioner is not None:
            raise NotImplementedError("preconditioned CG is not implemented")


@dataclass
class CGReport:
    iterations: int
    residual_norm: float
    converged: bool
    iterates: list = field(default_factory=list)


def cg_solve(op, b, cfg: CGConfig | None = None):
    """Solve Sigma h = b for a Hermitian PD operator exposed via ``apply``.

    Returns ``(h, CGReport)``; the report flags non-convergence after
    ``max_iter`` steps instead of raising. Raises :class:`CGBreakdownError`
    when the search-direction energy is nonpositive, which signals a
    non-PD operator or corrupted input.
    """
    cfg = cfg or CGConfig()
    apply_op = op.apply if hasattr(op, "apply") else op
    b = np.asarray(b, dtype=np.complex128)

    if cfg.x0 is not None:
        h = np.array(cfg.x0, dtype=np.complex128, copy=True)
        if h.shape != b.shape:
            raise ValueError("warm start must match the right-hand side")
        r = b - apply_op(h)
    else:
        h = np.zeros_like(b)
        r = b.copy()

    iterates = [h.copy()] if cfg.record_iterates else []
    rz = np.vdot(r, r).real
    res = np.sqrt(rz)
    if res <= cfg.tol:
        return h, CGReport(0, float(res), True, iterates)

    p = r.copy()
    iterations = 0
    converged = False
    for t in range(cfg.max_iter):
        sp = apply_op(p)
        denom = np.vdot(p, sp)
        # Hermitian PD => p^H Sigma p is real positive in exact arithmetic
        if denom.real <= 0.0:
            raise CGBreakdownError(
                f"nonpositive curvature p^H Sigma p = {denom.real:.3e} at iteration {t}")
        alpha = rz / denom.real
        h += alpha * p
        r -= alpha * sp
        if cfg.record_iterates:
            iterates.append(h.copy())
        rz_new = np.vdot(r, r).real
        res = np.sqrt(rz_new)
        iterations = t + 1
        if res <= cfg.tol:
            converged = True
            break
        p = r + (rz_new / rz) * p
        rz = rz_new

    return h, CGReport(iterations, float(res), converged, iterates)
