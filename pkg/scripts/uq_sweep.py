"""Train one model per noise level and compare the two spread estimates.

    python scripts/uq_sweep.py --preset osc-switch2 --levels 0.01 0.1 0.5 --kind coefficient

``--kind coefficient`` perturbs the coefficient schedules of every trajectory;
``--kind state`` adds measurement noise to the simulated states. Each level
uses the same seeds. Printed values are averages over the true support.
"""
import argparse
import time

from threadpoolctl import threadpool_limits

from dynsindy import experiments as ex
from dynsindy.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="osc-switch2")
    ap.add_argument("--levels", type=float, nargs="+", default=[0.01, 0.1, 0.5])
    ap.add_argument("--kind", choices=["coefficient", "state"], default="coefficient")
    ap.add_argument("--samples", type=int, default=None)
    args = ap.parse_args()
    t = time.time()
    with threadpool_limits(1):
        rows = ex.uq_sweep(load_config(args.preset), args.levels, args.kind, args.samples)
    print(f"{'level':>8} {'over_samples':>13} {'over_time':>10} {'support':>8}")
    for r in rows:
        print(f"{r['level']:>8g} {r['over_samples']:>13.5f} {r['over_time']:>10.5f} {str(r['support_exact']):>8}")
    print(f"{time.time() - t:.0f} s")


if __name__ == "__main__":
    main()
