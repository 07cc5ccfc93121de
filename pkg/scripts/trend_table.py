"""Method comparison on the tiled-texture fixture over several noise rates and seeds.

Prints a PSNR/SSIM table (mean over seeds) for TNN, N-TRPCA and NN-TRPCA
with both grouping layouts. Usage: python scripts/trend_table.py [--seeds 3]
"""
import argparse
import warnings

import numpy as np

from tenrec import fixtures, media
from tenrec.errors import MaxItersExceeded
from tenrec.metrics import psnr, ssim
from tenrec.nonlocal_trpca import GroupingConfig
from tenrec.pipeline import restore
from tenrec.solvers import SolverConfig

VARIANTS = [
    ("tnn", "tnn", None),
    ("ntrpca", "ntrpca", None),
    ("nntrpca/mode3", "nntrpca", "mode3"),
    ("nntrpca/unfold1", "nntrpca", "unfold1"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--rates", default="0.1,0.2,0.3")
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--patch", type=int, default=8)
    ap.add_argument("--group-size", type=int, default=16)
    ap.add_argument("--stride", type=int, default=4)
    args = ap.parse_args()

    ref = fixtures.tiled_texture(args.size)
    print(f"{'rate':>5} {'method':<16} {'PSNR':>7} {'SSIM':>6}")
    for rate in (float(r) for r in args.rates.split(",")):
        for label, method, layout in VARIANTS:
            gcfg = GroupingConfig(p=args.patch, m=args.group_size, stride=args.stride, method=layout or "unfold1")
            scores = []
            for seed in range(args.seeds):
                noisy, _ = media.inject_noise(ref, media.NoiseSpec(rate, seed=seed))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", MaxItersExceeded)
                    dec, _ = restore(noisy, method, SolverConfig(), gcfg)
                scores.append((psnr(ref, dec.low_rank), ssim(ref, dec.low_rank)))
            p, s = np.mean(scores, axis=0)
            print(f"{rate:5.2f} {label:<16} {p:7.2f} {s:6.3f}", flush=True)


if __name__ == "__main__":
    main()
