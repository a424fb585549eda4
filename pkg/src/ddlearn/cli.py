"""``ddlearn`` command line: run, synth, report, check."""
import argparse
import logging
import os
import sys

from .config import parse_config
from .errors import DDLearnError, SuiteError

log = logging.getLogger("ddlearn")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _config_args(p):
    p.add_argument("-c", "--config", help="INI config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable; beats the file)")


def build_parser():
    parser = argparse.ArgumentParser(prog="ddlearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and evaluate every task x seed x fraction")
    _config_args(p)
    p.add_argument("-o", "--out", help="output directory (default: output.dir, then $DDLEARN_OUTPUT_ROOT)")
    p.add_argument("-j", "--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("synth", help="write a synthetic dataset CSV")
    _config_args(p)
    p.add_argument("-o", "--out", required=True, help="CSV path to write")
    p.add_argument("--subjects", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("report", help="consolidate finished run directories into tables")
    p.add_argument("runs", nargs="+", help="run output directories")
    p.add_argument("--csv", help="also write the table as CSV")

    p = sub.add_parser("check", help="gradient and oracle self-test")
    p.add_argument("--seeds", type=int, default=5)
    return parser


def cmd_run(args):
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output.dir={args.out}")
    config = parse_config(args.config, overrides)
    from .experiment import run_task_suite
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    try:
        summary = run_task_suite(config, out_dir, workers=args.workers)
    except SuiteError as exc:
        log.error("%s; %d completed runs kept in %s", exc, len(exc.completed), out_dir)
        return EXIT_FAILED
    for block in summary["fractions"]:
        avg = block["average"]
        print(f"fraction {block['fraction']:.2f}: average target accuracy "
              f"{100 * avg['accuracy_mean']:.2f} ± {100 * avg['accuracy_std']:.2f}")
    print(f"results in {out_dir}")
    return EXIT_OK


def cmd_synth(args):
    overrides = ["data.dataset=synthetic", *args.overrides]
    for flag, key in (("subjects", "synth.subjects"), ("classes", "data.classes"),
                      ("channels", "data.channels"), ("length", "synth.length"),
                      ("seed", "synth.seed")):
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{key}={value}")
    config = parse_config(args.config, overrides)
    from .data import synth_generate, write_dataset_csv
    recs = synth_generate(config.synth, config.synth_seed)
    write_dataset_csv(args.out, recs)
    print(f"wrote {len(recs)} recordings ({config.synth.n_subjects} subjects, "
          f"{config.synth.n_classes} classes, {config.synth.channels} channels) to {args.out}")
    return EXIT_OK


def cmd_report(args):
    from .report import build_table, format_text, write_csv
    tasks, rows = build_table(args.runs)
    sys.stdout.write(format_text(tasks, rows))
    if args.csv:
        write_csv(args.csv, tasks, rows)
    return EXIT_OK


def cmd_check(args):
    from .selftest import run_checks
    return EXIT_OK if run_checks(args.seeds) else EXIT_FAILED


COMMANDS = {"run": cmd_run, "synth": cmd_synth, "report": cmd_report, "check": cmd_check}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DDLearnError as exc:
        print(f"ddlearn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_FAILED
    except OSError as exc:
        print(f"ddlearn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
