"""
Main entry point for Hopf flow runs.
Evolve, classify, decompose, soliton, verify and render subcommands.
"""

import argparse
import sys
import time
from typing import List, Optional

from config import (
    DEFAULT_EXAMPLE,
    EXAMPLE_ALIASES,
    EXAMPLE_REGISTRY,
    ConfigError,
    RunConfig,
    example_run_config,
    load_run_config,
    validate_run_config,
)
from experiment_runner import ExperimentRunner
from list_examples import list_examples
from logger import RunLogger
from verification import SUITES, VerificationFailure, require_all, run_suite

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

FORMAT_CHOICES = {"csv": ["csv"], "svg": ["svg"], "both": ["csv", "svg"]}


def resolve_config(args) -> RunConfig:
    """RunConfig from --config or --example, with --out and --format applied."""
    if args.config and args.example:
        raise ConfigError(["give either --config or --example, not both"])
    if args.config:
        config = load_run_config(args.config)
    else:
        name = args.example or DEFAULT_EXAMPLE
        if not args.example:
            print(f"📝 No --config given, using example '{name}'")
        config = example_run_config(name, n=getattr(args, "n", None))
    if args.out:
        config.output_directory = args.out
    if args.format:
        config.formats = list(FORMAT_CHOICES[args.format])
    faults = validate_run_config(config, args.config or "<example>")
    if faults:
        raise ConfigError(faults)
    return config


def run_verify(args) -> int:
    logger = RunLogger("verify", args.out or "flow_output")
    logger.log_run_start("verify", suite=args.suite)
    start = time.time()
    options = {"max_index": args.max, "example": args.example or DEFAULT_EXAMPLE,
               "grid_nodes": args.grid, "dt": args.dt, "tol": args.tol}
    if args.n is not None:
        options["n_values"] = (args.n,)
    cases = run_suite(args.suite, **options)

    passed = sum(1 for case in cases if case.passed)
    print(f"\n✅ {passed}/{len(cases)} cases passed")
    for case in cases:
        logger.log_verification(case.as_dict())
        if not case.passed:
            print(f"❌ {case.suite}:{case.name}: observed {case.observed}, expected {case.expected}")
    logger.log_run_summary("verify", time.time() - start, {"passed": passed, "total": len(cases)})
    logger.save_session()
    require_all(cases)
    return EXIT_OK


def run_command(args) -> int:
    if args.command == "verify":
        return run_verify(args)

    config = resolve_config(args)
    if args.command == "decompose" and args.samples:
        config.source = "samples"
        config.samples_path = args.samples
    if args.command == "render" and args.directory:
        config.output_directory = args.directory
    logger = RunLogger(args.command, config.output_directory)
    runner = ExperimentRunner(config, logger)

    if args.command == "evolve":
        runner.run_evolve()
    elif args.command == "classify":
        runner.run_classify()
    elif args.command == "decompose":
        runner.run_decompose(tol=args.tol)
    elif args.command == "soliton":
        runner.run_soliton()
    elif args.command == "render":
        runner.run_render(args.directory)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="Run-config file (flat 'key = value' format)")
    common.add_argument(
        "--example",
        choices=list(EXAMPLE_REGISTRY) + list(EXAMPLE_ALIASES),
        default=None,
        help=(
            "Named example surface:\n" +
            "\n".join([f"  {name}: {example['description']}" for name, example in EXAMPLE_REGISTRY.items()])
            + "\n" + ", ".join(f"{alias} = {name}" for alias, name in EXAMPLE_ALIASES.items())
        )
    )
    common.add_argument("--out", type=str, help="Output directory (overrides output.directory)")
    common.add_argument("--format", choices=list(FORMAT_CHOICES), help="Emitted file formats")
    common.add_argument("--grid", type=int, default=None, help="Oracle grid nodes N")
    common.add_argument("--dt", type=float, default=None, help="Oracle time step")
    common.add_argument("--tol", type=float, default=None, help="Oracle or fit tolerance")

    parser = argparse.ArgumentParser(
        description="Hopf Flow Lab - exact integer linear Hopf flow of rotationally symmetric spheres",
        formatter_class=argparse.RawTextHelpFormatter
    )
    parser.add_argument("--list-examples", action="store_true", help="List the example registry and exit")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("evolve", parents=[common], formatter_class=argparse.RawTextHelpFormatter,
                   help="Evolve and emit RoC diagrams, profiles and summary.json")
    sub.add_parser("classify", parents=[common], formatter_class=argparse.RawTextHelpFormatter,
                   help="Print the fate verdict")
    decompose = sub.add_parser("decompose", parents=[common], formatter_class=argparse.RawTextHelpFormatter,
                               help="Fit sampled astigmatism (theta,s CSV)")
    decompose.add_argument("samples", nargs="?", help="CSV file with theta,s columns")
    sub.add_parser("soliton", parents=[common], formatter_class=argparse.RawTextHelpFormatter,
                   help="Evolve the configured soliton")
    verify = sub.add_parser("verify", parents=[common], formatter_class=argparse.RawTextHelpFormatter,
                            help="Run verification suites")
    verify.add_argument("suite", choices=list(SUITES) + ["all"], help="Suite to run")
    verify.add_argument("--max", type=int, default=30, help="Largest l, m for the lemma suite")
    verify.add_argument("--n", type=int, default=None, help="Flow integer for the oracle suite")
    render = sub.add_parser("render", parents=[common], formatter_class=argparse.RawTextHelpFormatter,
                            help="Convert emitted CSV files into SVG")
    render.add_argument("directory", nargs="?", help="Directory of a previous run")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point with command line interface."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_examples:
        list_examples()
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    try:
        print(f"🎯 Starting Hopf flow command: {args.command.upper()}")
        print(f"⏰ Timestamp: {time.strftime('%Y-%m-%d %H:%M:%S')}")
        return run_command(args)
    except ConfigError as e:
        for fault in e.faults:
            print(f"config error: {fault}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as e:
        print(f"\n❌ Verification failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        print("\n⚠️  Run interrupted by user")
        return EXIT_FAILURE
    except Exception as e:
        print(f"\n❌ {args.command} failed: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
