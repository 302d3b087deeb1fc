"""Command-line front end for reproducible experiment runs.

Subcommands: ``phantom`` (rasterize a test object), ``forward`` (simulate a
scan), ``recon`` (reconstruct one sinogram), ``compare`` (run FBP, ART and
the refraction-aware ART on the same data and summarize errors) and
``trace-debug`` (dump one ray path).

Exit codes: 0 success, 2 bad configuration, 3 bad data, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fbp, forward, geometry, model, phantom, raytrace, recon

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

INTERIOR_BAND_PIXELS = 3  # masked band around interfaces for "interior" errors


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# small output helpers
# ---------------------------------------------------------------------------


def write_pgm(path, values: np.ndarray, vmin: float, vmax: float) -> None:
    """16-bit binary PGM (big-endian sample order, per the format spec)."""
    arr = np.asarray(values, dtype=float)
    span = vmax - vmin if vmax > vmin else 1.0
    scaled = np.clip((arr - vmin) / span, 0.0, 1.0)
    pixels = (scaled * 65535.0).round().astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pixels[::-1].tobytes())  # row 0 at the bottom


def try_write_png(path, values: np.ndarray, vmin: float, vmax: float) -> bool:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    plt.imsave(path, values[::-1], vmin=vmin, vmax=vmax, cmap="viridis")
    return True


def _write_channel_outputs(prefix: Path, grid: model.GridSpec, values: np.ndarray,
                           channel: str, units: str, vrange: tuple[float, float],
                           png: bool) -> dict:
    model.write_grid_channel(prefix, grid, values, channel, units)
    write_pgm(prefix.with_suffix(".pgm"), values, *vrange)
    if png:
        try_write_png(prefix.with_suffix(".png"), values, *vrange)
    return {"channel": channel, "units": units,
            "vmin": vrange[0], "vmax": vrange[1], "colormap": "viridis"}


def _parse_grid(text: str, R: float) -> model.GridSpec:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return model.GridSpec.square(R, int(parts[0]))
        if len(parts) == 3:
            return model.GridSpec(R=R, rows=int(parts[0]), cols=int(parts[1]),
                                  h=float(parts[2]))
    except ValueError as exc:
        raise CliError(f"bad grid spec {text!r}: {exc}", EXIT_CONFIG) from exc
    raise CliError(f"bad grid spec {text!r} (want N or rows,cols,h)", EXIT_CONFIG)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _load_phantom(path) -> tuple[float, list]:
    try:
        return phantom.load_phantom(path)
    except FileNotFoundError as exc:
        raise CliError(f"phantom file not found: {path}", EXIT_DATA) from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CliError(f"bad phantom file {path}: {exc}", EXIT_DATA) from exc


def _load_sinogram(path) -> forward.Sinogram:
    try:
        return forward.read_sinogram_csv(path)
    except FileNotFoundError as exc:
        raise CliError(f"sinogram not found: {path}", EXIT_DATA) from exc
    except ValueError as exc:
        raise CliError(f"bad sinogram {path}: {exc}", EXIT_DATA) from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_phantom(args) -> int:
    if args.builtin == "circle-rect":
        R, regions = 70.5, phantom.circle_with_rectangle()
        iset = phantom.interfaces_of(regions, R=R)
    elif args.builtin == "blocks":
        R = 70.5
        regions, curves = phantom.glued_blocks()
        iset = geometry.InterfaceSet(curves, R=R)
    else:
        R, regions = _load_phantom(args.phantom)
        iset = phantom.interfaces_of(regions, R=R)
    grid = _parse_grid(args.grid, R)
    fld = phantom.rasterize(regions, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phantom.save_phantom(out / "phantom.json", R, regions)
    geometry.save_interfaces(out / "interfaces.json", iset)
    _write_channel_outputs(out / "truth_n", grid, 1.0 + fld.n_minus_1,
                           "n", "dimensionless",
                           (1.0, float((1.0 + fld.n_minus_1).max())), args.png)
    _write_channel_outputs(out / "truth_alpha", grid, fld.alpha,
                           "alpha", "1/cm", (0.0, float(fld.alpha.max() or 1.0)),
                           args.png)
    print(f"wrote phantom ({len(regions)} regions, {len(iset)} curves) to {out}")
    return EXIT_OK


def cmd_forward(args) -> int:
    R, regions = _load_phantom(args.phantom)
    if args.R is not None:
        R = args.R
    geom = model.ScanGeometry(p=args.p, q=args.q, R=R)
    n_fine = int(round(args.fine_factor * 2 * R / args.h))
    fld = phantom.rasterize(regions, model.GridSpec.square(R, n_fine))
    iset = phantom.interfaces_of(regions, R=R)
    sino = forward.simulate(fld, iset, geom, cap=args.cap,
                            miss_offset_mm=args.miss_offset)
    if args.noise > 0:
        sino = forward.add_noise(sino, args.noise, args.seed)
    forward.write_sinogram_csv(args.out, sino)
    print(f"wrote {geom.n_rays} rays to {args.out}")
    return EXIT_OK


def _recon_config(args) -> recon.ReconConfig:
    psi = tuple(int(v) for v in args.psi.split(","))
    lam_ref = _parse_floats(args.lambda_ref)
    lam_abs = _parse_floats(args.lambda_abs)
    try:
        return recon.ReconConfig(psi=psi, lam_ref=lam_ref, lam_abs=lam_abs,
                                 eps_miss=args.eps_miss,
                                 exterior_reset=args.exterior_reset,
                                 fresnel_correction=not args.no_fresnel,
                                 sweep_order=args.sweep_order, seed=args.seed)
    except ValueError as exc:
        raise CliError(f"bad reconstruction config: {exc}", EXIT_CONFIG) from exc


def _run_method(method: str, sino: forward.Sinogram, grid: model.GridSpec,
                cfg: recon.ReconConfig, iset, footprint,
                residual_log: list | None = None) -> model.MaterialField:
    try:
        if method == "fbp":
            return fbp.fbp_reconstruct(sino, grid)
        if method == "art":
            return recon.conventional_art(sino, grid, cfg)
        return recon.modified_art(sino, iset, grid, cfg, footprint=footprint,
                                  residual_log=residual_log)
    except recon.ReconError as exc:
        raise CliError(str(exc), EXIT_NUMERIC) from exc


def cmd_recon(args) -> int:
    sino = _load_sinogram(args.sinogram)
    grid = _parse_grid(args.grid, sino.geom.R)
    iset = None
    footprint = None
    if args.method == "mart":
        if not args.interfaces:
            raise CliError("--method mart needs --interfaces", EXIT_CONFIG)
        try:
            iset = geometry.load_interfaces(args.interfaces, R=sino.geom.R)
        except (FileNotFoundError, ValueError) as exc:
            raise CliError(f"bad interfaces file: {exc}", EXIT_DATA) from exc
    if args.exterior_reset:
        if not args.phantom:
            raise CliError("--exterior-reset needs --phantom for the footprint",
                           EXIT_CONFIG)
        _R, regions = _load_phantom(args.phantom)
        footprint = phantom.footprint_mask(regions, grid)
    cfg = _recon_config(args)
    log: list = []
    fld = _run_method(args.method, sino, grid, cfg, iset, footprint, log)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_channel_outputs(Path(str(out) + "_n"), grid, 1.0 + fld.n_minus_1,
                           "n", "dimensionless",
                           (1.0, max(1.5, float((1.0 + fld.n_minus_1).max()))),
                           args.png)
    _write_channel_outputs(Path(str(out) + "_alpha"), grid, fld.alpha,
                           "alpha", "1/cm",
                           (0.0, max(0.1, float(fld.alpha.max()))), args.png)
    with open(str(out) + "_residuals.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "residual_ref", "residual_abs", "valid_rays"])
        for entry in log:
            w.writerow([entry["sweep"], repr(entry["residual_ref"]),
                        repr(entry["residual_abs"]), entry["valid_rays"]])
    print(f"wrote reconstruction ({args.method}) to {out}_*")
    return EXIT_OK


def _rel_l2(err: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    denom = float(np.linalg.norm(truth[mask]))
    if denom == 0.0:
        return float(np.linalg.norm(err[mask]))
    return float(np.linalg.norm(err[mask]) / denom)


def run_compare(manifest_path, force: bool = False, png: bool = False) -> dict:
    """Run FBP, conventional ART and refraction-aware ART on one synthetic
    data set and write grids, error maps, images and an error summary."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        man = json.load(fh)
    out = Path(man["out"])
    if not out.is_absolute():
        out = manifest_path.parent / out
    if out.exists() and any(out.iterdir()) and not force:
        raise CliError(f"output directory {out} is not empty (use --force)",
                       EXIT_CONFIG)
    out.mkdir(parents=True, exist_ok=True)

    phantom_path = Path(man["phantom"])
    if not phantom_path.is_absolute():
        phantom_path = manifest_path.parent / phantom_path
    R, regions = _load_phantom(phantom_path)
    gsec = man["grid"]
    grid = model.GridSpec(R=R, rows=gsec["rows"], cols=gsec["cols"], h=gsec["h"])
    geom = model.ScanGeometry(p=man["geometry"]["p"], q=man["geometry"]["q"], R=R)
    iset = phantom.interfaces_of(regions, R=R)
    truth = phantom.rasterize(regions, grid)
    footprint = phantom.footprint_mask(regions, grid)

    fine = man.get("forward", {}).get("fine_factor", 2)
    cap = man.get("forward", {}).get("cap", raytrace.DEFAULT_CAP)
    fld_fine = phantom.rasterize(regions, model.GridSpec.square(R, fine * grid.rows))
    sino = forward.simulate(fld_fine, iset, geom, cap=cap)
    noise = man.get("noise", {"level": 0.0, "seed": 0})
    if noise["level"] > 0:
        sino = forward.add_noise(sino, noise["level"], noise["seed"])
    forward.write_sinogram_csv(out / "sinogram.csv", sino)

    X, Y = grid.centers()
    dist = geometry.distance_to_set(iset, X, Y)
    interior = footprint & (dist > INTERIOR_BAND_PIXELS * grid.h)
    disk = X * X + Y * Y <= R * R

    results = {}
    for method in ("fbp", "art", "mart"):
        msec = dict(man[method])
        if method == "fbp":
            spec = fbp.FilterSpec(kind=msec.get("kind", "shepp-logan"),
                                  cutoff=msec.get("cutoff", 1.0))
            fld = fbp.fbp_reconstruct(sino, grid, spec)
        else:
            cfg = recon.ReconConfig(
                psi=tuple(msec["psi"]), lam_ref=tuple(msec["lam_ref"]),
                lam_abs=tuple(msec["lam_abs"]),
                eps_miss=msec.get("eps_miss", 0.0),
                exterior_reset=msec.get("exterior_reset", False),
                fresnel_correction=msec.get("fresnel_correction", True),
                sweep_order=msec.get("sweep_order", "natural"),
                seed=msec.get("seed", 0), cap=cap)
            if method == "art":
                try:
                    fld = recon.conventional_art(sino, grid, cfg)
                except recon.ReconError as exc:
                    raise CliError(str(exc), EXIT_NUMERIC) from exc
            else:
                try:
                    fld = recon.modified_art(sino, iset, grid, cfg,
                                             footprint=footprint)
                except recon.ReconError as exc:
                    raise CliError(str(exc), EXIT_NUMERIC) from exc
        entry = {}
        for channel, rec_vals, truth_vals, units, vrange in (
                ("n", 1.0 + fld.n_minus_1, 1.0 + truth.n_minus_1,
                 "dimensionless", (1.0, float((1.0 + truth.n_minus_1).max()))),
                ("alpha", fld.alpha, truth.alpha, "1/cm",
                 (0.0, float(truth.alpha.max() or 1.0)))):
            err = np.abs(rec_vals - truth_vals)
            prefix = out / f"{method}_{channel}"
            _write_channel_outputs(prefix, grid, rec_vals, channel, units,
                                   vrange, png)
            _write_channel_outputs(out / f"{method}_{channel}_abserr", grid,
                                   err, f"{channel}_abs_error", units,
                                   (0.0, float(err[disk].max() or 1.0)), png)
            entry[channel] = {
                "global_rel_l2": _rel_l2(err, truth_vals, disk),
                "interior_rel_l2": _rel_l2(err, truth_vals, interior),
            }
        results[method] = entry

    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "channel", "global_rel_l2", "interior_rel_l2"])
        for method, entry in results.items():
            for channel, errs in entry.items():
                w.writerow([method, channel, repr(errs["global_rel_l2"]),
                            repr(errs["interior_rel_l2"])])
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(man, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return results


def cmd_compare(args) -> int:
    results = run_compare(args.manifest, force=args.force, png=args.png)
    print(f"{'method':8s} {'channel':8s} {'global':>10s} {'interior':>10s}")
    for method, entry in results.items():
        for channel, errs in entry.items():
            print(f"{method:8s} {channel:8s} {errs['global_rel_l2']:10.4f}"
                  f" {errs['interior_rel_l2']:10.4f}")
    return EXIT_OK


def cmd_trace_debug(args) -> int:
    R, regions = _load_phantom(args.phantom)
    grid = _parse_grid(args.grid, R)
    fld = phantom.rasterize(regions, grid)
    iset = phantom.interfaces_of(regions, R=R)
    path = raytrace.trace(iset, fld, math.radians(args.phi_deg), args.s)
    if args.out:
        raytrace.dump_path_csv(path, args.out)
        print(f"wrote {path.n_crossings}-crossing path to {args.out}")
    else:
        raytrace.dump_path_csv(path, sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thztomo",
        description="2D terahertz tomography: simulation and reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="rasterize a test object")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--phantom", help="phantom description file (JSON)")
    src.add_argument("--builtin", choices=["circle-rect", "blocks"])
    p.add_argument("--grid", default="141", help="N or rows,cols,h")
    p.add_argument("--png", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("forward", help="simulate a scan")
    p.add_argument("--phantom", required=True)
    p.add_argument("--p", type=int, default=360, help="number of angles")
    p.add_argument("--q", type=int, default=70, help="offsets are -q..q")
    p.add_argument("--R", type=float, default=None,
                   help="scan radius in mm (default: the phantom file's R)")
    p.add_argument("--h", type=float, default=1.0,
                   help="reconstruction pixel size the fine factor refers to")
    p.add_argument("--fine-factor", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=raytrace.DEFAULT_CAP)
    p.add_argument("--miss-offset", type=float, default=None,
                   help="detector half-width in mm; displaced rays record tau=0")
    p.add_argument("--out", required=True, help="sinogram CSV path")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("recon", help="reconstruct one sinogram")
    p.add_argument("--method", choices=["fbp", "art", "mart"], required=True)
    p.add_argument("--sinogram", required=True)
    p.add_argument("--interfaces", help="interface file (needed for mart)")
    p.add_argument("--phantom", help="phantom file (footprint for the reset)")
    p.add_argument("--grid", default="141", help="N or rows,cols,h")
    p.add_argument("--psi", default="15")
    p.add_argument("--lambda-ref", default="0.005")
    p.add_argument("--lambda-abs", default="0.005")
    p.add_argument("--eps-miss", type=float, default=0.0)
    p.add_argument("--exterior-reset", action="store_true")
    p.add_argument("--no-fresnel", action="store_true",
                   help="skip the reflection-loss correction of the intensity data")
    p.add_argument("--sweep-order", choices=["natural", "random"],
                   default="natural")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--png", action="store_true")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("compare", help="three-way method comparison")
    p.add_argument("--manifest", required=True)
    p.add_argument("--force", action="store_true",
                   help="overwrite a non-empty output directory")
    p.add_argument("--png", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trace-debug", help="dump one refracted ray path")
    p.add_argument("--phantom", required=True)
    p.add_argument("--grid", default="141")
    p.add_argument("--phi-deg", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace_debug)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
