"""Command-line interface: simulate, reconstruct, eval, bench.

Images enter on the 0..255 amplitude scale (PGM or raw+sidecar) and are
squared into normalized reflectivity internally; sigma values on the
command line use the same 0..255 convention. Reconstructions are written
as display-scale float32 raw with a JSON sidecar and an 8-bit PGM preview.
Failures exit nonzero with a machine-parsable category on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as smio
from .bench import run_bench
from .config import RunConfig
from .cpnp import CpnpConfig, cpnp_em
from .errors import FormatError, SpeckleError
from .fields import aperture_from_ratio, make_aperture
from .krylov import CGConfig
from .metrics import psnr, ssim, to_image, to_reflectivity
from .priors import parse_prior
from .reconstruct import (CropConfig, PgdConfig, crop_reconstruct, pgd_mc,
                          specklefree_reconstruct)
from .simulate import simulate_amplitude_measurement, simulate_measurements

DISPLAY_PEAK = 255.0


def _parse_aperture(spec: str, H: int, W: int):
    kind, _, rest = spec.partition(":")
    if kind == "full":
        return make_aperture(H, W, "full")
    if kind == "circ":
        return aperture_from_ratio(H, W, float(rest))
    if kind == "annulus":
        ro, _, ri = rest.partition(":")
        if not ri:
            raise FormatError("annulus spec needs outer and inner ratios")
        return aperture_from_ratio(H, W, float(ro), float(ri))
    raise FormatError(f"unknown aperture spec {spec!r}")


def _cmd_simulate(args) -> int:
    image = smio.read_image_any(args.image)
    H, W = image.shape
    aperture = _parse_aperture(args.aperture, H, W)
    x = to_reflectivity(image, DISPLAY_PEAK)
    sigma = args.sigma / DISPLAY_PEAK
    if args.model == "speckle":
        ms = simulate_measurements(x, aperture, sigma, args.looks, args.seed)
    else:
        ms = simulate_amplitude_measurement(x, aperture, sigma, args.seed)
    smio.write_bundle(args.out, ms)
    print(json.dumps({"out": str(args.out), "looks": ms.L,
                      "shape": [H, W], "sigma": args.sigma,
                      "transparency": aperture.transparency}))
    return 0


def _pgd_config(cfg: RunConfig, prior_spec: str | None) -> PgdConfig:
    prior = parse_prior(prior_spec or cfg.prior.spec)
    sigma = cfg.pgd.sigma_z
    return PgdConfig(
        step_size=cfg.pgd.step_size,
        iterations=cfg.pgd.iterations,
        probes=cfg.pgd.probes,
        probe_kind=cfg.pgd.probe_kind,
        seed=cfg.pgd.seed,
        cg=CGConfig(tol=cfg.solver.cg_tol, max_iter=cfg.solver.cg_max_iter),
        prior=prior,
        sigma_z=None if sigma is None else sigma / DISPLAY_PEAK,
        warm_start_looks=cfg.solver.warm_start_looks,
    )


def _cmd_reconstruct(args) -> int:
    ms = smio.read_bundle(args.bundle)
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    truth = None
    if args.truth:
        truth = to_reflectivity(smio.read_image_any(args.truth), DISPLAY_PEAK)

    if args.algo == "pgd-mc":
        result = pgd_mc(ms, _pgd_config(cfg, args.prior), truth=truth)
    elif args.algo == "crop":
        result = crop_reconstruct(ms, CropConfig(cfg.crop.size),
                                  _pgd_config(cfg, args.prior), truth=truth)
    elif args.algo == "specklefree":
        pcfg = _pgd_config(cfg, args.prior)
        result = specklefree_reconstruct(ms.measurements[0], ms.aperture,
                                         ms.sigma_z, pcfg, truth=truth)
    elif args.algo == "cpnp-em":
        sigma = cfg.cpnp.sigma_z
        ccfg = CpnpConfig(
            iterations=cfg.cpnp.iterations,
            prox_strength=cfg.cpnp.prox_strength,
            mann_rate=cfg.cpnp.mann_rate,
            denoiser=parse_prior(args.prior or cfg.prior.spec),
            sigma_z=None if sigma is None else sigma / DISPLAY_PEAK,
        )
        result = cpnp_em(ms, ccfg, truth=truth)
    else:
        raise FormatError(f"unknown algorithm {args.algo!r}")

    display = to_image(result.estimate, DISPLAY_PEAK)
    smio.write_field_raw(args.out, display, scale=DISPLAY_PEAK, domain="amplitude")
    smio.write_pgm(Path(args.out).with_suffix(".pgm"), np.clip(display, 0, 255))
    smio.write_ndjson(str(args.out) + ".diag.ndjson", result.history)

    summary = {"out": str(args.out), "algo": args.algo,
               "iterations": len(result.history)}
    if truth is not None:
        summary["psnr"] = result.final_psnr
        if result.best_psnr is not None:
            summary["best_psnr"] = result.best_psnr
    print(json.dumps(summary))
    return 0


def _cmd_eval(args) -> int:
    ref = smio.read_image_any(args.ref)
    test = smio.read_image_any(args.test)
    p = psnr(ref, test, DISPLAY_PEAK)
    s = ssim(ref, test, DISPLAY_PEAK)
    print(json.dumps({"psnr": "inf" if np.isinf(p) else p, "ssim": s}))
    return 0


def _cmd_bench(args) -> int:
    report = run_bench(args.size, probes=args.probes, looks=args.looks,
                       kernels=not args.no_kernels)
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="specklemle",
        description="Maximum-likelihood despeckling for multi-look digital holography")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize a measurement bundle")
    sim.add_argument("--image", required=True, help="truth image (PGM or raw+sidecar)")
    sim.add_argument("--aperture", default="circ:1.0",
                     help="circ:<2r/H> | annulus:<ro>:<ri> | full")
    sim.add_argument("--sigma", type=float, default=25.0,
                     help="additive noise level on the 0..255 scale")
    sim.add_argument("--looks", type=int, default=4)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--model", choices=("speckle", "amplitude"), default="speckle",
                     help="speckled looks, or the speckle-free reference model")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    rec = sub.add_parser("reconstruct", help="reconstruct from a bundle")
    rec.add_argument("--bundle", required=True)
    rec.add_argument("--algo", required=True,
                     choices=("pgd-mc", "cpnp-em", "crop", "specklefree"))
    rec.add_argument("--prior", default=None,
                     help="clamp | median:<k> | tv:<lam> | external:<cmd>")
    rec.add_argument("--config", default=None, help="JSON run configuration")
    rec.add_argument("--out", required=True, help="output image (f32 raw + sidecar)")
    rec.add_argument("--truth", default=None, help="track quality against this image")
    rec.set_defaults(func=_cmd_reconstruct)

    ev = sub.add_parser("eval", help="PSNR/SSIM between two images")
    ev.add_argument("--ref", required=True)
    ev.add_argument("--test", required=True)
    ev.set_defaults(func=_cmd_eval)

    be = sub.add_parser("bench", help="time operators, CG and gradient evaluation")
    be.add_argument("--size", type=int, default=256, choices=(128, 256, 512))
    be.add_argument("--probes", type=int, default=5)
    be.add_argument("--looks", type=int, default=4)
    be.add_argument("--no-kernels", action="store_true",
                    help="skip the kernel backend comparison")
    be.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpeckleError as e:
        print(json.dumps({"error": e.category, "message": str(e)}),
              file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(json.dumps({"error": "invalid-input", "message": str(e)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
