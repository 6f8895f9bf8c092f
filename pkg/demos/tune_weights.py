"""
Choosing data-term weights for the DCT substitute bank
======================================================

The preset weights were tuned for a learned filter bank. With the DCT
substitute the prior is weaker per filter, so every data term needs its
own weights. This script runs a small grid per model on one textured image
and prints PSNR/SSIM for each point. The acceptance tests freeze the best
point of each grid.

Each point is a full 256x256 run, so the whole grid takes a while.

    python demos/tune_weights.py tests/data/chelsea.pgm --looks 8 --seed 1
"""

import argparse
import time

import numpy as np

from despeckle_foe import DataTermSpec, NoiseSpec, add_speckle, despeckle, quality, substitute_bank
from despeckle_foe.imageio import quantize, read_image

GRIDS = {
    "nakagami_log": [dict(lam=v) for v in (1100, 2200, 3000, 3700, 4400, 5000, 6000)],
    "idiv": [dict(lam=v) for v in (0.1, 0.14, 0.2, 0.3, 0.35, 0.4, 0.5)],
    "combined": [dict(lam1=a, lam2=b) for a in (3000, 3700, 4400) for b in (0.005, 0.01, 0.02, 0.04)]
    + [dict(lam1=2200, lam2=0.08), dict(lam1=5000, lam2=0.005)],
}

parser = argparse.ArgumentParser()
parser.add_argument("image")
parser.add_argument("--looks", type=int, default=8)
parser.add_argument("--seed", type=int, default=1)
parser.add_argument("--models", nargs="+", default=list(GRIDS))
args = parser.parse_args()

clean, peak = read_image(args.image)
noisy = quantize(add_speckle(clean, NoiseSpec(args.looks, args.seed)), peak).astype(np.float64)
bank = substitute_bank(7, 48)
print("noisy", quality(noisy, clean, peak))

for model in args.models:
    best = None
    for kw in GRIDS[model]:
        t0 = time.perf_counter()
        u, trace = despeckle(noisy, DataTermSpec(model, looks=args.looks, **kw), bank)
        q = quality(quantize(u, peak).astype(np.float64), clean, peak)
        print(f"{model:13s} {kw}  {q}  {trace.iterations_run} its  {time.perf_counter() - t0:.0f}s", flush=True)
        if best is None or q.psnr_db > best[1].psnr_db:
            best = (kw, q)
    print(f"best {model}: {best[0]} -> {best[1]}")
