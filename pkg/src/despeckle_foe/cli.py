"""``despeckle-foe`` command line: synth, despeckle, eval, benchmark.

Exit status is 0 on success, 1 on a solver/numerical failure and 2 on
usage or I/O errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import time
import zlib

import numpy as np

from . import __version__
from .data_fidelity import DataTermSpec, ProxError, clamp_observation
from .filter_bank import BankFormatError, load_bank, substitute_bank
from .imageio import IMAGE_SUFFIXES, quantize, read_image, write_image
from .ipiano import SolverConfig, SolverError
from .metrics import quality
from .models import bank_weights, despeckle
from .speckle import NoiseSpec, add_speckle

log = logging.getLogger("despeckle_foe")

MODEL_NAMES = {"nakagami": "nakagami_log", "idiv": "idiv", "combined": "combined"}
# --model idiv without --lambda uses this multiple of the preset lam2
IDIV_FROM_LAMBDA2 = 2.5

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _num(x):
    """JSON-safe float (infinite PSNR becomes null)."""
    x = float(x)
    return x if math.isfinite(x) else None


def _metrics(img, ref, peak):
    q = quality(img, ref, peak)
    return {"psnr": _num(q.psnr_db), "ssim": _num(q.ssim)}


def _load(path):
    try:
        return read_image(path)
    except FileNotFoundError:
        raise UsageError(f"cannot read {path}: no such file") from None
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _save(path, img, peak):
    try:
        write_image(path, img, peak)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _bank(args):
    if args.bank is None:
        return substitute_bank(7, 48)
    try:
        return load_bank(args.bank)
    except FileNotFoundError:
        raise UsageError(f"cannot read bank {args.bank}: no such file") from None
    except (OSError, BankFormatError, ValueError) as exc:
        raise UsageError(f"bad bank file {args.bank}: {exc}") from None


def _data_spec(args, looks, bank):
    """Fidelity weights: explicit flags win, otherwise bank-adjusted presets."""
    model = MODEL_NAMES[args.model]
    try:
        if args.preset is not None:
            lam1, lam2 = bank_weights(bank, name=args.preset)
        else:
            lam1, lam2 = bank_weights(bank, looks)
    except KeyError:
        lam1 = lam2 = None
    if model == "combined":
        lam1 = args.lambda1 if args.lambda1 is not None else lam1
        lam2 = args.lambda2 if args.lambda2 is not None else lam2
        if lam1 is None or lam2 is None:
            raise UsageError(f"no preset weights for L={looks}; pass --lambda1/--lambda2")
        return DataTermSpec("combined", lam1=lam1, lam2=lam2, looks=looks)
    lam = args.lam
    if lam is None and lam1 is not None:
        lam = lam1 if model == "nakagami_log" else lam2 * IDIV_FROM_LAMBDA2
    if lam is None:
        raise UsageError(f"no preset weights for L={looks}; pass --lambda")
    return DataTermSpec(model, lam=lam, looks=looks)


def _solver(args):
    return SolverConfig(beta=args.beta, max_iters=args.iters, rel_change_tol=args.tol)


def _run_config(args, spec, solver):
    if isinstance(spec, list):
        model = [dataclasses.asdict(x) for x in spec]
    else:
        model = dataclasses.asdict(spec)
    return {
        "model": model,
        "solver": dataclasses.asdict(solver),
        "bank_path": args.bank,
        "seed": getattr(args, "seed", None),
        "version": __version__,
    }


def _write_json(path, doc):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _noise_seed(seed, looks, name):
    """Per-(image, L) noise key, independent of processing order."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32 & 0xFFFFFFFF, looks, zlib.crc32(name.encode())])
    return int(ss.generate_state(1, np.uint64)[0])


def cmd_synth(args):
    clean, peak = _load(args.input)
    noisy = add_speckle(clean, NoiseSpec(args.looks, args.seed))
    _save(args.output, noisy, peak)
    stored = quantize(noisy, peak).astype(np.float64)
    print(f"noisy vs clean: {quality(stored, clean, peak)}")
    return EXIT_OK


def cmd_despeckle(args):
    f, peak = _load(args.input)
    ref = _load(args.reference)[0] if args.reference else None
    if ref is not None and ref.shape != f.shape:
        raise UsageError(f"reference {args.reference} has shape {ref.shape}, input {f.shape}")
    bank = _bank(args)
    spec = _data_spec(args, args.looks, bank)
    solver = _solver(args)
    t0 = time.perf_counter()
    u, trace = despeckle(f, spec, bank, solver)
    seconds = time.perf_counter() - t0
    _save(args.output, u, peak)
    stored = quantize(u, peak).astype(np.float64)

    report = {
        "run_config": _run_config(args, spec, solver),
        "bank_source": bank.source,
        "input": args.input,
        "output": args.output,
        "iterations": trace.iterations_run,
        "converged": trace.converged,
        "energy_initial": trace.energies[0],
        "energy_final": trace.energies[-1],
        "max_newton_iterations": trace.prox_iterations,
        "seconds": seconds if args.timing else None,
    }
    line = f"{args.output}: {trace.iterations_run} iterations, H {trace.energies[0]:.6g} -> {trace.energies[-1]:.6g}"
    if ref is not None:
        report["noisy"] = _metrics(clamp_observation(f), ref, peak)
        report["restored"] = _metrics(stored, ref, peak)
        line += f", restored {quality(stored, ref, peak)}"
    print(line)
    if args.report:
        _write_json(args.report, report)
    return EXIT_OK


def cmd_eval(args):
    x, peak = _load(args.restored)
    ref, _ = _load(args.reference)
    if x.shape != ref.shape:
        raise UsageError(f"size mismatch: {args.restored} {x.shape} vs {args.reference} {ref.shape}")
    q = quality(x, ref, peak)
    if args.json:
        print(json.dumps({"psnr": _num(q.psnr_db), "ssim": _num(q.ssim)}))
    else:
        print(q)
    return EXIT_OK


def _dataset(path):
    if not os.path.isdir(path):
        raise UsageError(f"{path}: not a directory")
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(IMAGE_SUFFIXES))
    if not names:
        raise UsageError(f"{path}: no images found")
    return names


def _average(rows):
    keys = ("psnr", "ssim")
    return {
        part: {k: _num(np.mean([r[part][k] for r in rows])) for k in keys}
        for part in ("noisy", "restored")
    }


def cmd_benchmark(args):
    names = _dataset(args.dataset)
    bank = _bank(args)
    solver = _solver(args)
    looks_list = args.looks_list
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)

    specs = [_data_spec(args, looks, bank) for looks in looks_list]
    per_image = []
    failed = 0
    for looks, spec in zip(looks_list, specs):
        for name in names:
            row = {"name": name, "L": looks}
            try:
                clean, peak = _load(os.path.join(args.dataset, name))
                key = _noise_seed(args.seed, looks, name)
                noisy = quantize(add_speckle(clean, NoiseSpec(looks, key)), peak).astype(np.float64)
                t0 = time.perf_counter()
                u, trace = despeckle(noisy, spec, bank, solver)
                seconds = time.perf_counter() - t0
                restored = quantize(u, peak).astype(np.float64)
            except (SolverError, ProxError, OverflowError, FloatingPointError, UsageError) as exc:
                log.error("%s (L=%d): %s", name, looks, exc)
                row["error"] = str(exc)
                failed += 1
                per_image.append(row)
                continue
            if args.output_dir:
                stem = os.path.splitext(name)[0]
                _save(os.path.join(args.output_dir, f"{stem}_L{looks}_noisy.png"), noisy, peak)
                _save(os.path.join(args.output_dir, f"{stem}_L{looks}_restored.png"), restored, peak)
            row.update(
                noisy=_metrics(noisy, clean, peak),
                restored=_metrics(restored, clean, peak),
                iterations=trace.iterations_run,
                seconds=seconds if args.timing else None,
            )
            per_image.append(row)
            print(f"{name} L={looks}: noisy {row['noisy']['psnr']:.2f}/{row['noisy']['ssim']:.4f} "
                  f"restored {row['restored']['psnr']:.2f}/{row['restored']['ssim']:.4f}")

    averages = []
    for looks in looks_list:
        ok = [r for r in per_image if r["L"] == looks and "error" not in r]
        if ok:
            averages.append({"L": looks, "n_images": len(ok), **_average(ok)})
    report = {
        "run_config": _run_config(args, specs, solver),
        "bank_source": bank.source,
        "per_image": per_image,
        "averages": averages,
    }
    for avg in averages:
        print(f"average L={avg['L']}: noisy {avg['noisy']['psnr']:.2f}/{avg['noisy']['ssim']:.4f} "
              f"restored {avg['restored']['psnr']:.2f}/{avg['restored']['ssim']:.4f}")
    if args.report:
        _write_json(args.report, report)
    return EXIT_NUMERIC if failed else EXIT_OK


def _common(p, looks_default=True):
    if looks_default:
        p.add_argument("--looks", type=int, default=8, help="number of looks L (default 8)")
    p.add_argument("--model", choices=sorted(MODEL_NAMES), default="combined")
    p.add_argument("--lambda", dest="lam", type=float, help="weight of a single-term model")
    p.add_argument("--lambda1", type=float, help="combined model: Nakagami weight")
    p.add_argument("--lambda2", type=float, help="combined model: I-divergence weight")
    p.add_argument("--preset", choices=["real-sar-l5"], help="named weight preset")
    p.add_argument("--bank", help="FOEBANK filter file (default: 7x7 DCT substitute)")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--beta", type=float, default=0.8)
    p.add_argument("--tol", type=float, default=1e-5, help="relative-change stopping tolerance")
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock seconds in the report (makes it non-reproducible)")


def build_parser():
    parser = argparse.ArgumentParser(prog="despeckle-foe", description="Despeckle grayscale amplitude images with a Fields-of-Experts prior.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="add synthetic L-look speckle to an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--looks", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("despeckle", help="restore a speckled image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--reference", help="clean image for PSNR/SSIM in the report")
    _common(p)
    p.set_defaults(func=cmd_despeckle)

    p = sub.add_parser("eval", help="PSNR/SSIM of a restored image against a reference")
    p.add_argument("restored")
    p.add_argument("reference")
    p.add_argument("--json", action="store_true", help="print full-precision JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="synth + despeckle + eval over a directory")
    p.add_argument("dataset")
    p.add_argument("--looks", dest="looks_list", type=int, nargs="+", default=[1, 3, 8])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", help="write noisy and restored images here")
    _common(p, looks_default=False)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "iters", 0) < 0:
        parser.error("--iters must be >= 0")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"despeckle-foe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"despeckle-foe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, ProxError, OverflowError, FloatingPointError) as exc:
        print(f"despeckle-foe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
