"""Fix the decision offset kappa of the F0 distinguisher and write it to
``src/ssmm/_calibration.py``.

For several thresholds T, run many independent sketches on vectors with
F0 = (1 - eps) T and (1 + eps) T, pick the cut on the nonzero-cell fraction
that balances the two error rates, and convert it back to kappa.  Also
reports the error rates at the balanced cut for the configured D_CONST.

    python scripts/calibrate_sketch.py --trials 10000
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from ssmm._calibration import D_CONST
from ssmm.hashing import draw_poly, poly_hash
from ssmm.sketch_f0 import rows_needed

P = (1 << 31) - 1


def fractions(T: float, F0: int, d: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    cut = P * min(1.0, 1.0 / T)
    out = np.empty(trials)
    for n in range(trials):
        keys = rng.choice(1 << 16, size=F0, replace=False)
        h = poly_hash(draw_poly(rng, d), keys)
        out[n] = (h < cut).any(axis=1).mean()
    return out


def balance(lo: np.ndarray, hi: np.ndarray):
    """Cut with the smallest worst-side error; ties resolve to the middle."""
    vals = np.unique(np.concatenate([lo, hi]))
    # candidate cuts sit between consecutive observed fractions
    grid = (vals[:-1] + vals[1:]) / 2 if len(vals) > 1 else vals
    errs = np.array([max((lo >= c).mean(), (hi < c).mean()) for c in grid])
    best = errs.min()
    tied = grid[errs == best]
    return best, 0.5 * (tied.min() + tied.max())


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--U", type=int, default=128)
    ap.add_argument("--trials", type=int, default=10000)
    ap.add_argument("--T", type=float, nargs="+", default=[4.0, 16.0, 64.0])
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--write", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    eps = args.eps
    d = rows_needed(eps, args.delta / args.U, D_CONST)
    kappas = []
    for T in args.T:
        lo = fractions(T, max(1, math.floor((1 - eps) * T)), d, args.trials, rng)
        hi = fractions(T, math.ceil((1 + eps) * T), d, args.trials, rng)
        err, cut = balance(lo, hi)
        q = min(1.0, 1.0 / T)
        kappa = ((1.0 - cut) / (1.0 - q) ** T - 1.0) / eps
        kappas.append(kappa)
        print(f"T={T:g} d={d} cut={cut:.4f} kappa={kappa:+.4f} worst error={err:.4f}")
    kappa = float(np.median(kappas))
    print(f"kappa={kappa:+.4f}")
    if args.write:
        path = Path(__file__).resolve().parents[1] / "src" / "ssmm" / "_calibration.py"
        path.write_text(
            "# Generated by scripts/calibrate_sketch.py; edit by rerunning it.\n"
            f"KAPPA = {kappa:.4f}\n"
            f"D_CONST = {D_CONST}\n"
        )
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
