"""PSNR of N-TRPCA as a function of theta on the texture fixture (global solver)."""
import argparse

from tenrec import fixtures, media
from tenrec.metrics import psnr
from tenrec.pipeline import restore
from tenrec.solvers import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rate", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--thetas", default="0.5,1,1.5,2,2.5,3,3.5,4,4.5,5")
    args = ap.parse_args()

    ref = fixtures.tiled_texture()
    noisy, _ = media.inject_noise(ref, media.NoiseSpec(args.rate, seed=args.seed))
    for theta in (float(t) for t in args.thetas.split(",")):
        dec, secs = restore(noisy, "ntrpca", SolverConfig(theta=theta))
        bar = "#" * max(0, int(round(psnr(ref, dec.low_rank) - 10)))
        print(f"theta={theta:4.1f}  PSNR={psnr(ref, dec.low_rank):6.2f} dB  iters={dec.report.iterations:3d}  {bar}")


if __name__ == "__main__":
    main()
