"""Command-line interface.

::

    destripe [run] --method gsr --mu1 0.3333 --mu2 0.003333 in.tif
    destripe metrics --reference clean.tif striped.tif
    destripe synth --seed 3 --out-clean clean.tif --out-striped striped.tif

Option values are resolved flags first, then the ``--config`` file, then
built-in defaults. Usage and parameter errors exit with status 2.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io as _io
import itertools
import json
import math
import operator
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .core import VERTICAL, StripeDecomposition, parse_direction
from .fourier import FourierFilterParams, filter_volume
from .gsr import GsrParams, SolverSettings, solve_gsr, solve_gsr_oblique
from .io import read_config, read_image, write_image
from .metrics import evaluate
from .parallel import map_ordered
from .synth import PhantomSpec, StripeSpec, make_pair
from .vsnr import VsnrParams, make_gabor_patterns, solve_vsnr

METHODS = ("gsr", "gsr-oblique", "vsnr", "fourier")
NORMALIZATION = ("auto", "bitdepth", "minmax", "identity")


class UsageError(ValueError):
    pass


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_angle(text):
    """Evaluate ``1.2``, ``pi/2 + 0.1`` and similar; ``x``/``y`` name the axes."""
    text = text.strip()
    if text.lower() in ("x", "y"):
        return parse_direction(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError

    try:
        return parse_direction(ev(ast.parse(text, mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise UsageError(f"invalid angle {text!r}") from None


def angle_list(text):
    return tuple(_eval_angle(t) for t in str(text).split(",") if t.strip())


def float_pair(text):
    parts = [float(t) for t in str(text).split(",")]
    if len(parts) != 2:
        raise UsageError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(parts)


def int_tuple(text):
    return tuple(int(t) for t in str(text).split(","))


def length_spec(text):
    text = str(text).strip().lower()
    if text in ("full", "none"):
        return None
    lo, hi = float_pair(text)
    return int(lo), int(hi)


# name -> (type, default); defaults of None mean "method default"
RUN_OPTIONS = {
    "method": (str, "gsr"),
    "mu1": (float, 1 / 3),
    "mu2": (float, 1 / 300),
    "rho_z": (float, 1.0),
    "theta": (angle_list, None),
    "sigma": (float, 12.0),
    "sigma_a": (float, 0.3),
    "r0": (float, 3.0),
    "n_dir": (int, 8),
    "alpha1": (float, 3.0),
    "alpha2": (float, 5.0),
    "alpha3": (float, 10.0),
    "eps": (float, 1e-2),
    "iters": (int, 25000),
    "tol": (float, 0.0),
    "seed": (int, 0),
    "normalize": (str, "auto"),
    "backend": (str, None),
}

SYNTH_OPTIONS = {
    "dims": (int_tuple, (256, 256)),
    "structure": (str, "cells"),
    "count": (int, 12),
    "radius": (float_pair, (8.0, 24.0)),
    "intensity": (float_pair, (0.4, 0.8)),
    "background": (float, 0.2),
    "blur": (float, 1.0),
    "theta": (_eval_angle, VERTICAL),
    "width": (float_pair, (1, 3)),
    "length": (length_spec, None),
    "amplitude": (float_pair, (0.02, 0.15)),
    "density": (float, 0.3),
    "sign": (str, "both"),
    "seed": (int, 0),
}


def _convert(name, conv, raw, source):
    if not isinstance(raw, str):
        return raw
    try:
        return conv(raw)
    except UsageError:
        raise
    except (TypeError, ValueError):
        raise UsageError(f"invalid value {raw!r} for {name} ({source})") from None


def resolve(args, table, config_values):
    """Merge parsed flags, config entries and defaults for every key in ``table``."""
    unknown = set(config_values) - set(table)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for name, (conv, default) in table.items():
        flag = getattr(args, name, None)
        if flag is not None:
            out[name] = _convert(name, conv, flag, "command line")
        elif name in config_values:
            out[name] = _convert(name, conv, config_values[name], "config")
        else:
            out[name] = default
    return out


def _config_sections(path, *names):
    if not path:
        return {}
    cfg = read_config(path)
    merged = {}
    for name in ("default",) + names:
        merged.update(cfg.get(name, {}))
    return merged


def _parse_sweep(text):
    """``mu1=a:b:n,mu2=c:d:m`` -> ``{"mu1": array, "mu2": array}``."""
    grid = {}
    for part in text.split(","):
        try:
            key, rng = part.split("=")
            lo, hi, n = rng.split(":")
            key = key.strip().replace("-", "_")
            grid[key] = np.linspace(float(lo), float(hi), int(n))
        except ValueError:
            raise UsageError(f"invalid sweep term {part!r}; use name=start:stop:count") from None
        if key not in RUN_OPTIONS or RUN_OPTIONS[key][0] is not float:
            raise UsageError(f"cannot sweep over {key!r}")
        if int(n) < 1:
            raise UsageError("sweep counts must be positive")
    return grid


def _solve(u0, opts):
    """Run the configured method; returns ``(decomposition, report_dict)``."""
    method = opts["method"]
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    thetas = opts["theta"]
    if method == "gsr-oblique" and not thetas:
        raise UsageError("gsr-oblique needs --theta")
    thetas = thetas or (VERTICAL,)
    if method in ("gsr", "gsr-oblique"):
        params = GsrParams(mu1=opts["mu1"], mu2=opts["mu2"], rho_z=opts["rho_z"], directions=thetas)
        settings = SolverSettings(max_iters=opts["iters"], tol=opts["tol"])
        fn = solve_gsr if method == "gsr" else solve_gsr_oblique
        dec, rep = fn(u0, params, settings, backend=opts["backend"])
        return dec, {"params": asdict(params), "solver": rep.to_dict()}
    if method == "vsnr":
        if len(thetas) != 1:
            raise UsageError("vsnr takes a single --theta")
        params = VsnrParams(alphas=(opts["alpha1"], opts["alpha2"], opts["alpha3"]),
                            epsilon=opts["eps"], max_iters=opts["iters"])
        patterns = make_gabor_patterns(thetas[0])
        slices = [u0] if u0.ndim == 2 else list(u0)
        results = [solve_vsnr(sl, patterns, params) for sl in slices]
        clean = np.stack([d.clean for d, _ in results])
        stripes = np.stack([d.stripes for d, _ in results])
        if u0.ndim == 2:
            clean, stripes = clean[0], stripes[0]
        dec = StripeDecomposition(clean, stripes, {"method": "vsnr"})
        solver = [r.to_dict() for _, r in results]
        p = asdict(params)
        p["theta"] = thetas[0]
        return dec, {"params": p, "solver": solver[0] if len(solver) == 1 else solver}
    if len(thetas) != 1:
        raise UsageError("fourier takes a single --theta")
    params = FourierFilterParams(sigma=opts["sigma"], sigma_a=opts["sigma_a"], n_dir=opts["n_dir"],
                                 theta0=thetas[0], r0=opts["r0"])
    dec = filter_volume(u0, params)
    return dec, {"params": asdict(params), "solver": {"backend": "fft"}}


def _stem(path):
    base = os.path.basename(path)
    for suf in (".tiff", ".tif", ".png", ".raw", ".f32", ".bin"):
        if base.lower().endswith(suf):
            return base[: -len(suf)]
    return base


def _metric_text(report):
    return "\n".join(report.lines()) + "\n"


def _emit_table(rows, path):
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                         for k, v in row.items()})
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _run_parser():
    p = argparse.ArgumentParser(prog="destripe", description="Remove stripe artifacts from 2D/3D images.")
    p.add_argument("input", help="input image (TIFF, PNG or raw float32 with sidecar)")
    p.add_argument("--config", help="INI file with [run] and per-method sections")
    p.add_argument("--method", help="gsr, gsr-oblique, vsnr or fourier (default gsr)")
    g = p.add_argument_group("stripe remover")
    g.add_argument("--mu1", help="TV weight (default 1/3)")
    g.add_argument("--mu2", help="stripe sparsity weight (default 1/300)")
    g.add_argument("--rho-z", dest="rho_z", help="z-difference weight in [0, 1] (default 1)")
    g.add_argument("--theta", help="stripe angle(s), comma separated; pi/2 is vertical")
    g.add_argument("--iters", help="iterations (default 25000)")
    g.add_argument("--tol", help="stop when the relative change drops below this")
    g.add_argument("--backend", choices=("compiled", "python"), help="kernel implementation")
    f = p.add_argument_group("fourier filter")
    f.add_argument("--sigma", help="notch width in frequency bins (default 12)")
    f.add_argument("--sigma-a", dest="sigma_a", help="angular decay (default 0.3)")
    f.add_argument("--r0", help="protected low-frequency radius in bins (default 3)")
    f.add_argument("--n-dir", dest="n_dir", help="number of angular wedges (default 8)")
    v = p.add_argument_group("vsnr")
    for i, d in enumerate((3, 5, 10), 1):
        v.add_argument(f"--alpha{i}", help=f"weight of pattern {i} (default {d})")
    v.add_argument("--eps", help="smoothing of the TV term (default 0.01)")
    o = p.add_argument_group("output")
    o.add_argument("--seed", help="recorded in the report (methods are deterministic)")
    o.add_argument("--normalize", help="input scaling: auto, bitdepth, minmax or identity")
    o.add_argument("--outdir", help="output directory (default: next to the input)")
    o.add_argument("--out-clean", dest="out_clean")
    o.add_argument("--out-stripes", dest="out_stripes")
    o.add_argument("--report", help="JSON report path")
    o.add_argument("--float-output", action="store_true", help="write unclipped float32 TIFFs")
    o.add_argument("--reference", help="clean reference for PSNR/MS-SSIM")
    o.add_argument("--metrics", action="store_true", help="print metrics of the clean output")
    o.add_argument("--metrics-csv", dest="metrics_csv", help="also write metrics as CSV")
    o.add_argument("--sweep", help="grid search, e.g. mu1=0.1:0.5:3,mu2=0.001:0.01:3")
    o.add_argument("--table", help="CSV path for the sweep table (default stdout)")
    return p


def _load(path, mode):
    if mode not in NORMALIZATION:
        raise UsageError(f"--normalize must be one of {', '.join(NORMALIZATION)}")
    return read_image(path, mode=mode)


def cli_destripe(argv):
    args = _run_parser().parse_args(argv)
    config = _config_sections(args.config, "run")
    method = args.method or config.get("method") or "gsr"
    if args.config:
        config.update(read_config(args.config).get(method, {}))
    opts = resolve(args, RUN_OPTIONS, config)
    opts["method"] = method

    vol = _load(args.input, opts["normalize"])
    u0 = np.array(vol.array)
    ref = _load(args.reference, opts["normalize"]).array if args.reference else None
    theta0 = (opts["theta"] or (VERTICAL,))[0]

    if args.sweep:
        grid = _parse_sweep(args.sweep)
        keys = list(grid)
        cells = list(itertools.product(*(grid[k] for k in keys)))

        def run_cell(values):
            cell = dict(opts)
            cell.update(zip(keys, (float(x) for x in values)))
            dec, _ = _solve(u0, cell)
            row = {k: float(x) for k, x in zip(keys, values)}
            row.update(evaluate(dec.clean, ref, theta0).as_row())
            return row

        _emit_table(map_ordered(run_cell, cells), args.table)
        return 0

    dec, info = _solve(u0, opts)
    outdir = args.outdir or os.path.dirname(os.path.abspath(args.input))
    stem = _stem(args.input)
    ext = ".tif"
    out_clean = args.out_clean or os.path.join(outdir, f"{stem}_clean{ext}")
    out_stripes = args.out_stripes or os.path.join(outdir, f"{stem}_stripes{ext}")
    out_report = args.report or os.path.join(outdir, f"{stem}_report.json")
    meta = {"method": method}
    write_image(dec.clean, out_clean, float_output=args.float_output, metadata=meta)
    write_image(dec.stripes, out_stripes, float_output=args.float_output, stripes=not args.float_output,
                metadata=meta)
    report = {
        "method": method,
        "input": os.path.abspath(args.input),
        "normalization": vol.record.to_dict() if vol.record else None,
        "seed": opts["seed"],
        "outputs": {"clean": out_clean, "stripes": out_stripes},
        **info,
    }
    if args.metrics or args.reference:
        m = evaluate(dec.clean, ref, theta0)
        report["metrics"] = m.as_row()
        sys.stdout.write(_metric_text(m))
        if args.metrics_csv:
            _emit_table([m.as_row()], args.metrics_csv)
    _write_json(report, out_report)
    return 0


def cli_metrics(argv):
    p = argparse.ArgumentParser(prog="destripe metrics", description="Score an image.")
    p.add_argument("image")
    p.add_argument("--reference", help="clean reference (enables PSNR and MS-SSIM)")
    p.add_argument("--theta", default="pi/2", help="stripe direction for the curtaining score")
    p.add_argument("--normalize", default="auto", help="auto, bitdepth, minmax or identity")
    p.add_argument("--csv", help="also write the report as CSV")
    args = p.parse_args(argv)
    img = _load(args.image, args.normalize).array
    ref = _load(args.reference, args.normalize).array if args.reference else None
    if ref is not None and ref.shape != img.shape:
        raise UsageError(f"image {img.shape} and reference {ref.shape} differ in shape")
    report = evaluate(img, ref, _eval_angle(args.theta))
    sys.stdout.write(_metric_text(report))
    if args.csv:
        _emit_table([report.as_row()], args.csv)
    return 0


def cli_synth(argv):
    p = argparse.ArgumentParser(prog="destripe synth", description="Generate a phantom with stripes.")
    p.add_argument("--config", help="INI file with [phantom] and [stripes] sections")
    p.add_argument("--dims", help="nx,ny or nx,ny,nz (default 256,256)")
    p.add_argument("--structure", help="spheres, blobs or cells")
    p.add_argument("--count")
    p.add_argument("--radius", help="min,max in pixels")
    p.add_argument("--intensity", help="min,max in [0, 1]")
    p.add_argument("--background")
    p.add_argument("--blur")
    p.add_argument("--theta", help="stripe angle; pi/2 is vertical")
    p.add_argument("--width", help="min,max stripe width in pixels")
    p.add_argument("--length", help="'full' or min,max segment length")
    p.add_argument("--amplitude", help="min,max stripe magnitude")
    p.add_argument("--density")
    p.add_argument("--sign", help="both, positive or negative")
    p.add_argument("--seed")
    p.add_argument("--out-clean", dest="out_clean", required=True)
    p.add_argument("--out-striped", dest="out_striped", required=True)
    p.add_argument("--out-stripes", dest="out_stripes", help="optional stripe field export")
    p.add_argument("--float-output", action="store_true")
    args = p.parse_args(argv)
    config = _config_sections(args.config, "run", "phantom", "stripes")
    o = resolve(args, SYNTH_OPTIONS, config)
    phantom = PhantomSpec(dims=o["dims"], structure=o["structure"], count=o["count"], radius=o["radius"],
                          intensity=o["intensity"], background=o["background"], blur=o["blur"])
    stripes = StripeSpec(theta=o["theta"], width=o["width"], length=o["length"],
                         amplitude=o["amplitude"], density=o["density"], sign=o["sign"])
    clean, striped, field_, rep = make_pair(phantom, stripes, o["seed"])
    meta = dict(rep.meta, clamped_fraction=rep.clamped_fraction, unsuitable=rep.unsuitable)
    write_image(clean, args.out_clean, float_output=args.float_output, metadata=meta)
    write_image(striped, args.out_striped, float_output=args.float_output, metadata=meta)
    if args.out_stripes:
        write_image(field_, args.out_stripes, float_output=args.float_output,
                    stripes=not args.float_output, metadata=meta)
    sys.stdout.write(json.dumps(meta, sort_keys=True, default=float) + "\n")
    return 0


COMMANDS = {"run": cli_destripe, "metrics": cli_metrics, "synth": cli_synth}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("--version", "-V"):
        print(__version__)
        return 0
    if argv and argv[0] in COMMANDS:
        cmd, argv = COMMANDS[argv[0]], argv[1:]
    else:
        cmd = cli_destripe
    try:
        return cmd(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (UsageError, ValueError, OSError) as exc:
        print(f"destripe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
