"""Polynomial and RBF parameter grids, baseline and learned, on one dataset.

    python3 scripts/sweep_grids.py --seed 0
"""

import argparse
import logging

from kernelverify.errors import VerificationError
from kernelverify.evaluation import format_table
from kernelverify.kernel_learning import LearnOptions
from kernelverify.kernels import KernelSpec
from kernelverify.pipeline import RunConfig, SyntheticConfig, prepare_dataset, report_label, run_config

POLY_GRID = [(0.0001, 1, 2), (0.0001, 0, 2), (10, 1, 2), (5, 2, 4)]
RBF_GRID = [5, 10, 15, 20]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--synthetic",
                        default="clients=8,impostors=4,per=8,dim=10,sep=12,warp=radial")
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING)

    config = RunConfig(synthetic=SyntheticConfig.parse(args.synthetic), learn=LearnOptions(),
                       compare=True, seed=args.seed)
    dataset = prepare_dataset(config)
    grid = [KernelSpec.polynomial(a, b, d) for a, b, d in POLY_GRID]
    grid += [KernelSpec.rbf(s) for s in RBF_GRID]
    rows = []
    for kernel in grid:
        try:
            rows.extend((report_label(r), r) for r in run_config(config, dataset, kernel))
        except VerificationError as exc:
            print(f"{kernel.label()}: {exc.to_dict()['error']}")
    print(format_table(rows))


if __name__ == "__main__":
    main()
