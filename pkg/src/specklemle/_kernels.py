"""Loop-heavy numeric kernels with numba and pure-numpy implementations.

The backend is chosen by the ``SPECKLEMLE_BACKEND`` environment variable
(``auto``/``numba``/``numpy``, default ``auto``) or per call via the
``backend=`` keyword. The FFT-bound operators live in ``operators`` and
always use scipy's FFT; only the pointwise/stencil kernels below have a
compiled path.

Both paths use identical arithmetic (e.g. ``sqrt(gx*gx+gy*gy)`` rather than
``hypot``) so that results agree to round-off across backends.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import SpeckleError

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_ENV_BACKEND = os.environ.get("SPECKLEMLE_BACKEND", "auto").lower()


def default_backend() -> str:
    """Backend selected by the environment: ``numba`` or ``numpy``."""
    if _ENV_BACKEND == "numpy":
        return "numpy"
    if _ENV_BACKEND == "numba":
        if not HAVE_NUMBA:
            raise ImportError("SPECKLEMLE_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


def _resolve(backend):
    b = backend or default_backend()
    if b not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {b!r}")
    if b == "numba" and not HAVE_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    return b


# ---------------------------------------------------------------------------
# Total-variation proximal denoising (dual projection, Chambolle 2004).
# Solves argmin_u 0.5*||u - f||^2 + lam*TV(u) with isotropic TV and
# Neumann boundaries; u = f - lam*div(p) with the dual field p iterated
# p <- (p + tau*grad(div(p) - f/lam)) / (1 + tau*|grad(...)|).
# ---------------------------------------------------------------------------


def _tv_prox_numpy(f, lam, n_iter, tau):
    p1 = np.zeros_like(f)
    p2 = np.zeros_like(f)
    for _ in range(n_iter):
        div = np.zeros_like(f)
        div[0, :] += p1[0, :]
        div[1:-1, :] += p1[1:-1, :] - p1[:-2, :]
        div[-1, :] += -p1[-2, :]
        div[:, 0] += p2[:, 0]
        div[:, 1:-1] += p2[:, 1:-1] - p2[:, :-2]
        div[:, -1] += -p2[:, -2]
        u = div - f / lam
        gx = np.zeros_like(f)
        gy = np.zeros_like(f)
        gx[:-1, :] = u[1:, :] - u[:-1, :]
        gy[:, :-1] = u[:, 1:] - u[:, :-1]
        denom = 1.0 + tau * np.sqrt(gx * gx + gy * gy)
        p1 = (p1 + tau * gx) / denom
        p2 = (p2 + tau * gy) / denom
    div = np.zeros_like(f)
    div[0, :] += p1[0, :]
    div[1:-1, :] += p1[1:-1, :] - p1[:-2, :]
    div[-1, :] += -p1[-2, :]
    div[:, 0] += p2[:, 0]
    div[:, 1:-1] += p2[:, 1:-1] - p2[:, :-2]
    div[:, -1] += -p2[:, -2]
    return f - lam * div


if HAVE_NUMBA:

    @njit(cache=True)
    def _tv_div(p1, p2, out):
        H, W = out.shape
        for i in range(H):
            for j in range(W):
                d = 0.0
                if i == 0:
                    d += p1[0, j]
                elif i == H - 1:
                    d += -p1[H - 2, j]
                else:
                    d += p1[i, j] - p1[i - 1, j]
                if j == 0:
                    d += p2[i, 0]
                elif j == W - 1:
                    d += -p2[i, W - 2]
                else:
                    d += p2[i, j] - p2[i, j - 1]
                out[i, j] = d

    @njit(cache=True)
    def _tv_prox_numba(f, lam, n_iter, tau):
        H, W = f.shape
        p1 = np.zeros((H, W))
        p2 = np.zeros((H, W))
        div = np.zeros((H, W))
        u = np.zeros((H, W))
        for _ in range(n_iter):
            _tv_div(p1, p2, div)
            for i in range(H):
                for j in range(W):
                    u[i, j] = div[i, j] - f[i, j] / lam
            for i in range(H):
                for j in range(W):
                    gx = u[i + 1, j] - u[i, j] if i < H - 1 else 0.0
                    gy = u[i, j + 1] - u[i, j] if j < W - 1 else 0.0
                    denom = 1.0 + tau * np.sqrt(gx * gx + gy * gy)
                    p1[i, j] = (p1[i, j] + tau * gx) / denom
                    p2[i, j] = (p2[i, j] + tau * gy) / denom
        _tv_div(p1, p2, div)
        out = np.empty((H, W))
        for i in range(H):
            for j in range(W):
                out[i, j] = f[i, j] - lam * div[i, j]
        return out


def tv_prox(image, lam, n_iter=50, tau=0.25, backend=None):
    """Proximal TV denoising of a real 2-D image."""
    if lam <= 0:
        raise ValueError("TV strength must be positive")
    f = np.ascontiguousarray(image, dtype=np.float64)
    if _resolve(backend) == "numba":
        return _tv_prox_numba(f, float(lam), int(n_iter), float(tau))
    return _tv_prox_numpy(f, float(lam), int(n_iter), float(tau))


# ---------------------------------------------------------------------------
# k x k median filter with mirror ('reflect') boundaries.
# ---------------------------------------------------------------------------


def _median2d_numpy(img, k):
    pad = k // 2
    padded = np.pad(img, pad, mode="reflect")
    win = np.lib.stride_tricks.sliding_window_view(padded, (k, k))
    return np.median(win, axis=(2, 3))


if HAVE_NUMBA:

    @njit(cache=True)
    def _median2d_numba(img, k):
        H, W = img.shape
        pad = k // 2
        out = np.empty((H, W))
        buf = np.empty(k * k)
        for i in range(H):
            for j in range(W):
                m = 0
                for di in range(-pad, pad + 1):
                    ii = i + di
                    if ii < 0:
                        ii = -ii
                    elif ii >= H:
                        ii = 2 * H - 2 - ii
                    for dj in range(-pad, pad + 1):
                        jj = j + dj
                        if jj < 0:
                            jj = -jj
                        elif jj >= W:
                            jj = 2 * W - 2 - jj
                        buf[m] = img[ii, jj]
                        m += 1
                buf.sort()
                out[i, j] = buf[k * k // 2]
        return out


def median2d(image, k, backend=None):
    """Median filter with odd window size ``k`` and mirror boundaries."""
    k = int(k)
    if k < 1 or k % 2 == 0:
        raise ValueError("median window must be odd and >= 1")
    img = np.ascontiguousarray(image, dtype=np.float64)
    if min(img.shape) < 2 and k > 1:
        raise ValueError("image smaller than the filter window")
    if k == 1:
        return img.copy()
    if _resolve(backend) == "numba":
        return _median2d_numba(img, k)
    return _median2d_numpy(img, k)


# ---------------------------------------------------------------------------
# Proximal M-step cubic: per coordinate, the positive real root of
#   x^3 - x1*x^2 + s2*x - s2*cmu = 0
# that minimizes  cmu/x + log(x) + (x - x1)^2 / (2*s2),
# found in closed form (Cardano / trigonometric) plus a Newton polish.
# ---------------------------------------------------------------------------


def _prox_objective(x, x1, cmu, s2):
    return cmu / x + np.log(x) + (x - x1) ** 2 / (2.0 * s2)


def _cubic_roots_numpy(x1, cmu, s2):
    a = -x1
    b = np.full_like(x1, s2)
    c = -s2 * cmu
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    roots = np.full(x1.shape + (3,), np.nan)
    one = disc > 0
    if np.any(one):
        sq = np.sqrt(disc[one])
        t = np.cbrt(-q[one] / 2.0 + sq) + np.cbrt(-q[one] / 2.0 - sq)
        roots[one, 0] = t - a[one] / 3.0
    three = ~one
    if np.any(three):
        pm = p[three]
        qm = q[three]
        m = 2.0 * np.sqrt(np.maximum(-pm / 3.0, 0.0))
        arg = np.where(m > 0, 3.0 * qm / np.where(pm != 0, pm * m, 1.0), 0.0)
        phi = np.arccos(np.clip(arg, -1.0, 1.0))
        for k in range(3):
            t = m * np.cos(phi / 3.0 - 2.0 * np.pi * k / 3.0)
            roots[three, k] = t - a[three] / 3.0

    # pick the positive root with the smallest proximal objective
    pos = roots > 0
    safe = np.where(pos, roots, 1.0)
    obj = np.where(pos, _prox_objective(safe, x1[..., None], cmu[..., None], s2), np.inf)
    best = np.argmin(obj, axis=-1)
    x = np.take_along_axis(roots, best[..., None], axis=-1)[..., 0]
    x = np.where(np.isfinite(x) & (x > 0), x, np.nan)

    # Newton polish on the cubic itself
    for _ in range(2):
        fx = ((x + a) * x + b) * x + c
        dfx = (3.0 * x + 2.0 * a) * x + b
        step = np.where(dfx != 0, fx / np.where(dfx != 0, dfx, 1.0), 0.0)
        xn = x - step
        x = np.where(np.isfinite(xn) & (xn > 0), xn, x)
    return x


if HAVE_NUMBA:

    @njit(cache=True)
    def _cubic_roots_scalar(x1, cmu, s2):
        a = -x1
        b = s2
        c = -s2 * cmu
        p = b - a * a / 3.0
        q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

        best = -1.0
        best_obj = np.inf
        if disc > 0:
            sq = np.sqrt(disc)
            t = np.cbrt(-q / 2.0 + sq) + np.cbrt(-q / 2.0 - sq)
            r = t - a / 3.0
            if r > 0:
                best = r
                best_obj = cmu / r + np.log(r) + (r - x1) ** 2 / (2.0 * s2)
        else:
            m = 2.0 * np.sqrt(max(-p / 3.0, 0.0))
            if m > 0 and p != 0:
                arg = 3.0 * q / (p * m)
            else:
                arg = 0.0
            if arg > 1.0:
                arg = 1.0
            elif arg < -1.0:
                arg = -1.0
            phi = np.arccos(arg)
            for k in range(3):
                t = m * np.cos(phi / 3.0 - 2.0 * np.pi * k / 3.0)
                r = t - a / 3.0
                if r > 0:
                    o = cmu / r + np.log(r) + (r - x1) ** 2 / (2.0 * s2)
                    if o < best_obj:
                        best = r
                        best_obj = o
        if best < 0:
            return np.nan
        x = best
        for _ in range(2):
            fx = ((x + a) * x + b) * x + c
            dfx = (3.0 * x + 2.0 * a) * x + b
            if dfx != 0.0:
                xn = x - fx / dfx
                if np.isfinite(xn) and xn > 0:
                    x = xn
        return x

    @njit(cache=True)
    def _cubic_roots_numba(x1, cmu, s2):
        out = np.empty(x1.size)
        for i in range(x1.size):
            out[i] = _cubic_roots_scalar(x1[i], cmu[i], s2)
        return out


def prox_cubic_root(x1, cmu, sigma2, backend=None):
    """Positive minimizer of the per-coordinate M-step objective.

    Coordinates with ``cmu == 0`` return 0 (the degenerate limit of the
    objective). Raises when no positive root exists for ``cmu > 0``, which
    cannot happen for finite inputs and signals corruption.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    cmu = np.asarray(cmu, dtype=np.float64)
    if x1.shape != cmu.shape:
        raise ValueError("x1 and cmu must share a shape")
    if sigma2 <= 0:
        raise ValueError("proximal strength must be positive")
    if not (np.isfinite(x1).all() and np.isfinite(cmu).all()):
        raise ValueError("non-finite M-step inputs")
    if np.any(cmu < 0):
        raise ValueError("posterior power must be nonnegative")

    shape = x1.shape
    flat1 = np.ascontiguousarray(x1).ravel()
    flatc = np.ascontiguousarray(cmu).ravel()
    live = flatc > 0.0
    out = np.zeros_like(flat1)
    if np.any(live):
        if _resolve(backend) == "numba":
            r = _cubic_roots_numba(flat1[live], flatc[live], float(sigma2))
        else:
            r = _cubic_roots_numpy(flat1[live], flatc[live], float(sigma2))
        if not np.isfinite(r).all():
            raise SpeckleError("M-step cubic produced no positive root")
        out[live] = r
    return out.reshape(shape)
