"""Baseline vs learned kernel on synthetic protocols, one table per warp.

    python3 scripts/compare_baseline.py --seed 1
"""

import argparse
import logging

from kernelverify.evaluation import format_table
from kernelverify.kernel_learning import LearnOptions
from kernelverify.kernels import KernelSpec
from kernelverify.pipeline import RunConfig, SyntheticConfig, prepare_dataset, report_label, run_config

WARPS = ("none", "quadratic-lift", "radial")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--synthetic", default="clients=8,impostors=4,per=8,dim=6,sep=4")
    parser.add_argument("--kernel", default="rbf:sigma=3")
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING)

    kernel = KernelSpec.parse(args.kernel)
    for warp in WARPS:
        synth = SyntheticConfig.parse(f"{args.synthetic},warp={warp}")
        config = RunConfig(synthetic=synth, kernel=kernel, learn=LearnOptions(), compare=True,
                           seed=args.seed)
        reports = run_config(config, prepare_dataset(config))
        print(f"\nwarp={warp}")
        print(format_table([(report_label(r), r) for r in reports]))


if __name__ == "__main__":
    main()
