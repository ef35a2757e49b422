"""Projection and denoising operators used by the reconstruction loops.

Gradient steps can undershoot below zero, so every prior clamps; the
filtering priors clamp before and after denoising. The ``external`` kind
shells out to a user-supplied command with {in}/{out} placeholders using
the float-raw interchange format, so pretrained denoisers can be plugged
in without any in-tree inference code.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import median2d, tv_prox
from .errors import DimensionMismatchError, ExternalDenoiserError, PriorError


@dataclass(frozen=True)
class PriorOp:
    kind: str                      # clamp | median | tv | external
    upper: float | None = None     # clamp ceiling, optional
    window: int = 3                # median window (odd)
    strength: float = 0.02         # tv regularization weight
    iterations: int = 50           # tv dual-projection budget
    command: str = ""              # external command template
    timeout: float = 300.0         # external denoiser timeout, seconds

    def __post_init__(self):
        if self.kind not in ("clamp", "median", "tv", "external"):
            raise PriorError(f"unknown prior kind {self.kind!r}")
        if self.kind == "median" and (self.window < 1 or self.window % 2 == 0):
            raise PriorError("median window must be odd and >= 1")
        if self.kind == "tv" and self.strength <= 0:
            raise PriorError("tv strength must be positive")
        if self.kind == "external" and not self.command:
            raise PriorError("external prior needs a command template")


def clamp_prior(upper=None) -> PriorOp:
    return PriorOp("clamp", upper=upper)


def median_prior(window=3) -> PriorOp:
    return PriorOp("median", window=window)


def tv_prior(strength=0.02, iterations=50) -> PriorOp:
    return PriorOp("tv", strength=strength, iterations=iterations)


def external_prior(command, timeout=300.0) -> PriorOp:
    return PriorOp("external", command=command, timeout=timeout)


def parse_prior(spec: str) -> PriorOp:
    """Parse a prior spec string: ``clamp``, ``median:<k>``, ``tv:<lam>``,
    or ``external:<command with {in} {out}>``."""
    kind, _, rest = spec.partition(":")
    if kind == "clamp":
        return clamp_prior(float(rest)) if rest else clamp_prior()
    if kind == "median":
        return median_prior(int(rest)) if rest else median_prior()
    if kind == "tv":
        return tv_prior(float(rest)) if rest else tv_prior()
    if kind == "external":
        if not rest:
            raise PriorError("external prior needs a command")
        return external_prior(rest)
    raise PriorError(f"unknown prior spec {spec!r}")


def _clamp(s, upper):
    out = np.maximum(s, 0.0)
    if upper is not None:
        out = np.minimum(out, upper)
    return out


def _run_external(p: PriorOp, s: np.ndarray) -> np.ndarray:
    from .io import read_field_raw, write_field_raw

    with tempfile.TemporaryDirectory(prefix="specklemle-denoise-") as tmp:
        fin = Path(tmp) / "in.f32"
        fout = Path(tmp) / "out.f32"
        write_field_raw(fin, s)
        cmd = p.command.replace("{in}", str(fin)).replace("{out}", str(fout))
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True,
                                  timeout=p.timeout)
        except subprocess.TimeoutExpired as e:
            raise ExternalDenoiserError(f"denoiser timed out after {p.timeout}s") from e
        if proc.returncode != 0:
            raise ExternalDenoiserError(
                f"denoiser exited with {proc.returncode}: "
                f"{proc.stderr.decode(errors='replace')[:500]}")
        if not fout.exists():
            raise ExternalDenoiserError("denoiser produced no output file")
        try:
            out = read_field_raw(fout)
        except Exception as e:
            raise ExternalDenoiserError(f"unreadable denoiser output: {e}") from e
    if out.shape != s.shape:
        raise ExternalDenoiserError(
            f"denoiser returned shape {out.shape}, expected {s.shape}")
    if not np.isfinite(out).all():
        raise ExternalDenoiserError("denoiser returned non-finite values")
    return out.astype(np.float64)


def apply_prior(p: PriorOp, s) -> np.ndarray:
    """Apply the prior to a real image; the result is nonnegative."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2:
        raise DimensionMismatchError("priors act on 2-D images")
    if p.kind == "clamp":
        return _clamp(s, p.upper)
    if p.kind == "median":
        return _clamp(median2d(_clamp(s, p.upper), p.window), p.upper)
    if p.kind == "tv":
        return _clamp(tv_prox(_clamp(s, p.upper), p.strength, p.iterations), p.upper)
    return _clamp(_run_external(p, s), p.upper)
