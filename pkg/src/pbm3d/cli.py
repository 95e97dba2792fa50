"""Command-line interface.

Exit codes: 0 success, 2 invalid arguments or data, 3 file errors,
4 optimizer stopped before converging.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from .datasets import average_frames, read_manifest
from .exceptions import ImageIOError, NonConvergenceWarning, PBM3DError, ValidationError
from .fileio import FORMATS, TripleEntry, load_triple, save_triple
from .metrics import METHODS, evaluate_method, report_record, run_method, write_records
from .noise import NoiseSpec, add_noise, dop_bias_probe, estimate_sigma
from .optimize import OptimizationRun, monte_carlo_search, pattern_search
from .presets import resolve_transform, write_matrix
from .render import render_maps

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NONCONVERGENCE = 0, 2, 3, 4

# CLI spelling -> metrics method name
_DENOISERS = {"pbm3d": "pbm3d", "bm3d": "bm3d-per-channel", "bm3d-stokes": "bm3d-stokes"}


def _is_manifest(path):
    if not os.path.isfile(path):
        return False
    with open(path, "rb") as f:
        head = f.read(256)
    return not head.startswith((b"\x93NUMPY", b"Pf", b"P5", b"P2")) and b"=" in head


def _inputs(arg):
    """``[(id, entry)]`` for a manifest or a single triple."""
    if _is_manifest(arg):
        return [(e.id, e) for e in read_manifest(arg)]
    ident = os.path.basename(arg.split(",")[0]) if "," in arg else os.path.basename(arg)
    return [(ident or "image", arg)]


def _entry_sigma(entry, given, img):
    if given is not None:
        return given
    if isinstance(entry, TripleEntry) and entry.sigma is not None:
        return entry.sigma
    return estimate_sigma(img)


def _out_stem(out_dir, ident):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, ident)


def cmd_denoise(a):
    method = _DENOISERS[a.method]
    for ident, entry in _inputs(a.inp):
        img = load_triple(entry)
        sigma = _entry_sigma(entry, a.sigma, img)
        out = run_method(img, method, sigma, resolve_transform(a.matrix) if method == "pbm3d" else None,
                         n_jobs=a.n_jobs)
        paths = save_triple(out, _out_stem(a.out, ident), a.format, a.clip)
        print(f"{ident}: sigma={sigma:.4g} -> {', '.join(paths)}")
    return EXIT_OK


def cmd_add_noise(a):
    items = _inputs(a.inp)
    for k, (ident, entry) in enumerate(items):
        img = load_triple(entry)
        seed = a.seed if len(items) == 1 else a.seed + k
        noisy = add_noise(img, NoiseSpec(a.sigma, seed))
        target = a.out if len(items) == 1 else _out_stem(a.out, ident)
        paths = save_triple(noisy, target, a.format, a.clip)
        print(f"{ident}: seed={seed} -> {', '.join(paths)}")
    return EXIT_OK


def cmd_evaluate(a):
    noisy = load_triple(a.noisy)
    truth = load_triple(a.truth)
    method = _DENOISERS.get(a.method, a.method)
    sigma = a.sigma if a.sigma is not None else estimate_sigma(noisy)
    transform = resolve_transform(a.matrix) if method == "pbm3d" else None
    rep = evaluate_method(noisy, truth, method, sigma, transform, seed=a.seed, n_jobs=a.n_jobs)
    rec = report_record(os.path.basename(a.noisy), rep)
    if a.report:
        write_records(a.report, [rec])
    psnr = "inf" if rep.infinite else f"{rep.psnr_db:.3f}"
    print(f"{rec['image_id']} {method}: PSNR {psnr} dB, MSE {rep.mse:.6g}")
    return EXIT_OK


def format_table(records, methods):
    """Aligned PSNR grid: one row per (image, sigma), one column per method."""
    rows = {}
    for r in records:
        rows.setdefault((r["image_id"], r["sigma"]), {})[r["method"]] = r["psnr_db"]
    head = ["image", "sigma", *methods]
    body = [[img, f"{s:g}", *("inf" if v.get(m) is None else f"{v[m]:.2f}" for m in methods)]
            for (img, s), v in rows.items()]
    widths = [max(len(str(x)) for x in col) for col in zip(head, *body)]
    fmt = lambda row: "  ".join(str(x).rjust(w) for x, w in zip(row, widths))  # noqa: E731
    return "\n".join([fmt(head)] + [fmt(r) for r in body])


def cmd_benchmark(a):
    manifest = read_manifest(a.manifest)
    sigmas = [float(s) for s in a.sigmas.split(",")]
    methods = [_DENOISERS.get(m, m) for m in a.methods.split(",")]
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}; expected one of {METHODS}")
    records = []
    for i, entry in enumerate(manifest):
        img, truth = manifest.load(entry)
        clean = truth if truth is not None else img
        for j, sigma in enumerate(sigmas):
            seed = int(np.random.SeedSequence(a.seed, spawn_key=(i, j)).generate_state(1)[0])
            noisy = add_noise(clean, NoiseSpec(sigma, seed))
            for m in methods:
                transform = resolve_transform(a.matrix) if m == "pbm3d" else None
                rep = evaluate_method(noisy, clean, m, sigma, transform, seed=seed, n_jobs=a.n_jobs)
                records.append(report_record(entry.id, rep))
    write_records(a.report, records)
    table = format_table(records, methods)
    with open(a.report + ".txt", "w") as f:
        f.write(table + "\n")
    print(table)
    return EXIT_OK


def cmd_optimize(a):
    manifest = read_manifest(a.manifest)
    images = []
    for e in manifest:
        img, truth = manifest.load(e)
        images.append(truth if truth is not None else img)
    run = OptimizationRun(tuple(images), a.sigma, seed=a.seed, budget=a.budget, delta=a.delta,
                          crop=None if a.crop <= 0 else a.crop, n_jobs=a.n_jobs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        if a.algo == "pattern":
            res = pattern_search(run, resolve_transform(a.t0))
        else:
            res = monte_carlo_search(run)
    write_matrix(a.out, res.transform)
    print(f"objective {res.value.mean_mse:.6g} after {res.n_evaluations} evaluations "
          f"({res.iterations} iterations)")
    for row in res.transform.m:
        print(" ".join(f"{v: .4f}" for v in row))
    if not res.converged:
        print(f"warning: pattern search did not converge within {a.budget} iterations",
              file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_bias_probe(a):
    v = dop_bias_probe(a.intensity, a.sigma, a.samples, a.seed)
    print(f"mean DoP of an unpolarized pixel: {v:.6g}")
    return EXIT_OK


def cmd_average(a):
    frames = [load_triple(p) for p in a.inp]
    paths = save_triple(average_frames(frames), a.out, a.format, a.clip)
    print(f"averaged {len(frames)} frames -> {', '.join(paths)}")
    return EXIT_OK


def cmd_render(a):
    if a.out_dop is None and a.out_aop is None:
        raise ValidationError("give --out-dop and/or --out-aop")
    render_maps(load_triple(a.inp), a.out_dop, a.out_aop)
    return EXIT_OK


def _sigma(text):
    v = float(text)
    if not np.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"sigma must be >= 0, got {text}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="pbm3d", description="Polarization image denoising.")
    sub = p.add_subparsers(dest="command", required=True)

    def out_opts(sp):
        sp.add_argument("--format", choices=list(FORMATS), default="npy")
        sp.add_argument("--clip", action="store_true", help="clip to [0, 1] for integer formats")

    def jobs(sp):
        sp.add_argument("--n-jobs", type=int, default=1)

    sp = sub.add_parser("denoise", help="denoise a triple or every entry of a manifest")
    sp.add_argument("--in", dest="inp", required=True, help="manifest or triple")
    sp.add_argument("--sigma", type=_sigma, help="noise std; estimated when omitted")
    sp.add_argument("--method", choices=list(_DENOISERS), default="pbm3d")
    sp.add_argument("--matrix", default="opt-global", help="preset name or matrix file")
    sp.add_argument("--out", required=True, help="output directory")
    out_opts(sp)
    jobs(sp)
    sp.set_defaults(func=cmd_denoise)

    sp = sub.add_parser("add-noise", help="add seeded Gaussian noise")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--sigma", type=_sigma, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output stem (directory for a manifest)")
    out_opts(sp)
    sp.set_defaults(func=cmd_add_noise)

    sp = sub.add_parser("evaluate", help="denoise and score against a reference")
    sp.add_argument("--noisy", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--method", choices=list(dict.fromkeys([*_DENOISERS, *METHODS])), default="pbm3d")
    sp.add_argument("--sigma", type=_sigma)
    sp.add_argument("--matrix", default="opt-global")
    sp.add_argument("--seed", type=int, default=-1, help="seed recorded in the report")
    sp.add_argument("--report")
    jobs(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("benchmark", help="methods x noise levels over a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--sigmas", required=True, help="comma-separated")
    sp.add_argument("--methods", default="bm3d,bm3d-stokes,pbm3d", help="comma-separated")
    sp.add_argument("--matrix", default="opt-global")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--report", required=True)
    jobs(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("optimize", help="search for the best channel transform")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--sigma", type=_sigma, required=True)
    sp.add_argument("--algo", choices=["monte-carlo", "pattern"], default="pattern")
    sp.add_argument("--budget", type=int, default=50)
    sp.add_argument("--delta", type=float, default=0.01)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--t0", default="opponent", help="start matrix for pattern search")
    sp.add_argument("--crop", type=int, default=128, help="centre crop size; 0 for full images")
    sp.add_argument("--out", required=True, help="matrix file to write")
    jobs(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("bias-probe", help="mean DoP that noise induces on unpolarized light")
    sp.add_argument("--intensity", type=float, default=1.0)
    sp.add_argument("--sigma", type=_sigma, required=True)
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_bias_probe)

    sp = sub.add_parser("average", help="average aligned frames")
    sp.add_argument("--in", dest="inp", nargs="+", required=True, help="frame triples")
    sp.add_argument("--out", required=True, help="output stem")
    out_opts(sp)
    sp.set_defaults(func=cmd_average)

    sp = sub.add_parser("render", help="write DoP and AoP images")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--out-dop")
    sp.add_argument("--out-aop")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ImageIOError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except PBM3DError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
