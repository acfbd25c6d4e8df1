"""Command line entry point: ``kernelverify {run,sweep,gen,report}``.

Exit status is 0 on success, 1 for numerical/runtime failures and 2 for
usage or validation errors; failures also print a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .dataset import save_dataset
from .errors import ValidationError, VerificationError
from .evaluation import VerificationReport, emit_report, format_table
from .kernel_learning import FIXED_ALPHA, LearnOptions
from .kernels import KernelSpec
from .pipeline import RunConfig, SyntheticConfig, prepare_dataset, report_label, run_config

log = logging.getLogger("kernelverify")


def _parse_learn(text: str) -> dict:
    """``dinkelbach``, ``dinkelbach:tol=1e-8,max_iter=100``, ``fixed:alpha=1`` or JSON."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    mode, _, params = text.partition(":")
    raw: dict = {"mode": FIXED_ALPHA if mode in ("fixed", FIXED_ALPHA) else mode}
    for item in filter(None, params.split(",")):
        key, _, value = item.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--samples", help="samples CSV (features..., identity)")
    p.add_argument("--protocol", help="protocol JSON")
    p.add_argument("--synthetic", help="e.g. clients=5,impostors=3,per=6,dim=8,sep=8,warp=radial")
    p.add_argument("--seed", type=int)
    p.add_argument("--heq", help="histogram-equalize rows as WxH images, e.g. 51x55")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--learn", help="dinkelbach[:tol=..,max_iter=..] or fixed:alpha=..")
    p.add_argument("--baseline", action="store_true", default=None,
                   help="use mu = sqrt(lambda), i.e. fixed-kernel CSKDA")
    p.add_argument("--compare", action="store_true", default=None,
                   help="run baseline and learned kernels side by side")
    p.add_argument("--modes", help="comma-separated subset of OnC,OnI")
    p.add_argument("--out", help="report JSON path")


def build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        raw.pop("grid", None)
    if args.samples or args.protocol:
        raw.pop("synthetic", None)
        raw["samples"], raw["protocol"] = args.samples, args.protocol
    if args.synthetic:
        raw.pop("samples", None)
        raw.pop("protocol", None)
        raw["synthetic"] = SyntheticConfig.parse(args.synthetic)
    if args.heq:
        w, _, h = args.heq.lower().partition("x")
        raw["heq"] = (int(w), int(h))
    for key in ("seed", "baseline", "compare", "modes", "out"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "kernel", None):
        raw["kernel"] = KernelSpec.parse(args.kernel)
    if getattr(args, "learn", None):
        raw["learn"] = LearnOptions.from_dict(_parse_learn(args.learn))
    if getattr(args, "roc", None):
        raw["roc"] = args.roc
    return RunConfig.from_dict(raw)


def cmd_run(args: argparse.Namespace) -> int:
    config = build_config(args)
    reports = run_config(config)
    print(format_table([(report_label(r), r) for r in reports]))
    if config.out:
        emit_report(reports, config.out, config.roc)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_config(args)
    grid = args.grid
    if grid is None and args.config:
        with open(args.config, encoding="utf-8") as fh:
            grid = json.load(fh).get("grid")
    if not grid:
        raise ValidationError("sweep needs a non-empty --grid")
    kernels = [KernelSpec.parse(g) if isinstance(g, str) else KernelSpec.from_dict(g) for g in grid]
    dataset = prepare_dataset(config)

    rows, table = [], []
    for kernel in kernels:
        try:
            reports = run_config(config, dataset, kernel)
        except VerificationError as exc:
            log.warning("grid point %s failed: %s", kernel.label(), exc)
            rows.append({"kernel": kernel.to_dict(), "error": exc.to_dict()})
            continue
        rows.append({"kernel": kernel.to_dict(), "reports": [r.to_dict() for r in reports]})
        table.extend((report_label(r), r) for r in reports)
    print(format_table(table))
    for row in rows:
        if "error" in row:
            print(f"FAILED {KernelSpec.from_dict(row['kernel']).label()}: {row['error']['error']}")
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    if not args.synthetic:
        raise ValidationError("gen needs --synthetic")
    config = RunConfig(synthetic=SyntheticConfig.parse(args.synthetic), seed=args.seed)
    ds = prepare_dataset(config)
    save_dataset(ds, args.samples_out, args.protocol_out)
    print(f"wrote {ds.N} samples (n={ds.n}, E={ds.E}, I={ds.I}) to {args.samples_out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as fh:
        raw = json.load(fh)
    # sweep output nests reports per grid point
    if raw and "mode" not in raw[0]:
        raw = [r for row in raw for r in row.get("reports", [])]
    reports = [VerificationReport.from_dict(r) for r in raw]
    print(format_table([(report_label(r), r) for r in reports]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelverify", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="learn a kernel, fit CSKDA, evaluate")
    _add_source_args(run)
    run.add_argument("--kernel", help="linear | rbf:sigma=20 | poly:a=1e-4,b=1,d=2 | JSON")
    _add_model_args(run)
    run.add_argument("--roc", help="ROC CSV path (mode suffix added when several modes)")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run over a grid of kernels")
    _add_source_args(sweep)
    sweep.add_argument("--grid", nargs="+", help="kernel specs, e.g. rbf:sigma=5 rbf:sigma=10")
    _add_model_args(sweep)
    sweep.set_defaults(func=cmd_sweep)

    gen = sub.add_parser("gen", help="write a synthetic dataset to CSV + JSON")
    gen.add_argument("--synthetic", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--samples-out", required=True)
    gen.add_argument("--protocol-out", required=True)
    gen.set_defaults(func=cmd_gen)

    rep = sub.add_parser("report", help="re-render stored report JSON")
    rep.add_argument("input")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}), file=sys.stderr)
        return 2
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
