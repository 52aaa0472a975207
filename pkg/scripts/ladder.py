"""Ground-energy ladder of a single biased qubit with a = 0, 1, 2 extras.

Writes one CSV per a into the output directory and prints the slope of the
ground energy over the last two grid points.

    python scripts/ladder.py [--out ladder_out] [--lambda-max 4] [--points 200]
"""

import argparse
from pathlib import Path

from crossfree.gadgets import GadgetParams, apply_construction
from crossfree.ising import IsingModel
from crossfree.spectrum import SweepSchedule, sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="ladder_out")
    ap.add_argument("--lambda-max", type=float, default=4.0)
    ap.add_argument("--points", type=int, default=200)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h0 = IsingModel.from_fields(1, h={0: -1})
    sched = SweepSchedule(args.lambda_max, args.points, k=2)
    for a in (0, 1, 2):
        model = h0 if a == 0 else apply_construction(h0, GadgetParams(a, 1))[0]
        res = sweep(model, sched)
        (out / f"ladder_a{a}.csv").write_text(res.to_csv())
        last, prev = res.rows[-1], res.rows[-2]
        slope = (prev.energies[0] - last.energies[0]) / prev.lam
        print(f"a={a} qubits={model.num_qubits} slope near 0: {slope:.6f}")


if __name__ == "__main__":
    main()
