import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from hydra.errors import HydraException
from pydantic import ValidationError

from src.ising_lab import __version__
from src.ising_lab.chains.kernels import ChainKind, KawasakiVariant
from src.ising_lab.cli.commands import COMMANDS, VERIFY_CHECKS, CommandOutput
from src.ising_lab.cli.reporter import build_manifest, emit_result, print_summary, write_csv
from src.ising_lab.config import configure_logging, load_config
from src.ising_lab.core.generators import GENERATORS
from src.ising_lab.counting.annealing import NuKind
from src.ising_lab.errors import IsingLabError, InvalidInputError
from src.ising_lab.sampling.sample_k import MU_BACKENDS

logger = logging.getLogger(__name__)

_INTERNAL_KEYS = {"command", "check"}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed; required by stochastic commands")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="config override in Hydra syntax, repeatable")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default run.jobs)")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default run.logging_level)")
    common.add_argument("--out", type=Path, default=None, help="also write the JSON result here")
    common.add_argument("--csv", type=Path, default=None, help="write the tabular part of the result here")
    return common


def _add_gadget_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delta", type=int, required=True)
    parser.add_argument("--n", type=int, required=True, help="size parameter of the gadget")
    parser.add_argument("--theta", type=float, default=None)
    parser.add_argument("--psi", type=float, default=None)
    parser.add_argument("--m", type=int, default=None)
    parser.add_argument("--m-prime", type=int, default=None)
    parser.add_argument("--tree-depth", type=int, default=None)
    parser.add_argument("--match-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="ising-lab",
        description="Ferromagnetic Ising model at fixed magnetization: exact oracles, samplers, counters and hardness gadgets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tree", parents=[common], help="tree recursion fixed point")
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--depth", type=int, default=None, help="also report the finite-depth recursion")

    p = sub.add_parser("exact", parents=[common], help="exact partition functions by enumeration")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--beta", type=float, required=True)
    field = p.add_mutually_exclusive_group()
    field.add_argument("--lambda", dest="lam", type=float, default=None)
    field.add_argument("--k", type=int, default=None)

    p = sub.add_parser("sample", parents=[common], help="Sample-k at fixed magnetization")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--sampler", choices=[k.value for k in MU_BACKENDS], default=None)
    p.add_argument("--runs", type=int, default=1)

    p = sub.add_parser("count", parents=[common], help="annealing estimate of Z^fix")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--beta", type=float, required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--eta", type=float)
    target.add_argument("--k", type=int)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--sampler", choices=[k.value for k in NuKind], default=None)
    p.add_argument("--amplify", action="store_true")
    p.add_argument("--check", action="store_true", help="compare with the exact value")

    p = sub.add_parser("kawasaki", parents=[common], help="run Kawasaki dynamics")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--beta", type=float, required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--eta", type=float)
    target.add_argument("--k", type=int)
    p.add_argument("--variant", choices=[v.value for v in KawasakiVariant], default=None, help="default: chains.variant")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)

    p = sub.add_parser("gadget", parents=[common], help="build a hardness gadget")
    _add_gadget_args(p)
    p.add_argument("--gadget-out", type=Path, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--phase", action="store_true", help="run the phase experiment at --beta")
    p.add_argument("--phase-runs", type=int, default=None)

    p = sub.add_parser("reduce", parents=[common], help="build the reduction from a host graph")
    p.add_argument("--host", type=Path, required=True)
    p.add_argument("--gamma", type=str, required=True, help="balance, e.g. 1/2 or 0.75")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=None)
    _add_gadget_args(p)
    p.add_argument("--oracle", action="store_true", help="evaluate Z^fix exactly and recover the cut interval")
    p.add_argument("--instance-out", type=Path, default=None)

    p = sub.add_parser("graph", parents=[common], help="generate a graph file")
    p.add_argument("--kind", choices=sorted(GENERATORS) + ["random", "regular"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--graph-out", type=Path, default=None)

    verify = sub.add_parser("verify", help="property checks against the exact oracle")
    checks = verify.add_subparsers(dest="check", required=True)

    c = checks.add_parser("extremal", parents=[common])
    c.add_argument("--delta", type=int, required=True)
    c.add_argument("--nmax", type=int, default=None)
    c.add_argument("--random", action="store_true", help="add random graphs at oracle.extremal.random_n")

    c = checks.add_parser("gks", parents=[common])
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)
    c.add_argument("--A", type=int, nargs="+", required=True)
    c.add_argument("--B", type=int, nargs="+", required=True)
    c.add_argument("--edge", type=int, nargs=2, required=True)

    c = checks.add_parser("balance", parents=[common])
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--kind", choices=[k.value for k in ChainKind if k != ChainKind.EXACT], required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--lambda", dest="lam", type=float, default=None)
    c.add_argument("--k", type=int, default=None)

    c = checks.add_parser("clt", parents=[common])
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)

    c = checks.add_parser("schedule", parents=[common])
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--delta", type=int, default=None)
    c.add_argument("--beta", type=float, required=True)
    target = c.add_mutually_exclusive_group(required=True)
    target.add_argument("--eta", type=float)
    target.add_argument("--k", type=int)

    c = checks.add_parser("mixing", parents=[common])
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--kind", choices=[k.value for k in ChainKind if k != ChainKind.EXACT], required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--lambda", dest="lam", type=float, default=None)
    c.add_argument("--k", type=int, default=None)
    c.add_argument("--sweeps", type=int, nargs="+", default=[1, 2, 5, 10, 20])
    c.add_argument("--samples", type=int, default=2000)

    c = checks.add_parser("grid", parents=[common])
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--delta", type=int, default=None)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--eta", type=float, required=True)

    return parser


def _dispatch(args: argparse.Namespace, cfg) -> CommandOutput:
    if args.command == "verify":
        return VERIFY_CHECKS[args.check](args, cfg)
    return COMMANDS[args.command](args, cfg)


def _parameters(args: argparse.Namespace) -> dict:
    return {key: value for key, value in sorted(vars(args).items()) if key not in _INTERNAL_KEYS}


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args.overrides)
    configure_logging(args.log_level or cfg.run.logging_level)
    if args.jobs is None:
        args.jobs = int(cfg.run.jobs)
    if args.jobs < 1:
        raise InvalidInputError("--jobs must be at least 1")
    name = args.command if args.command != "verify" else f"verify {args.check}"
    logger.info("🚀 Starting %s", name)

    started = time.perf_counter()
    output = _dispatch(args, cfg)
    duration = time.perf_counter() - started

    manifest = build_manifest(name, _parameters(args), output.seed, cfg.run.tool_version, duration, output.result)
    emit_result(output.result, manifest, out=args.out, stream=sys.stdout)
    print_summary(name, output.result, stream=sys.stderr)
    if args.csv is not None:
        if output.frame is None:
            logger.warning("%s produces no table; --csv ignored", name)
        else:
            write_csv(output.frame, args.csv)
    logger.info("✅ %s finished in %.2fs", name, duration)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except IsingLabError as e:
        logging.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except ValidationError as e:
        logging.error(f"❌ Invalid parameters: {e}")
        return InvalidInputError.exit_code
    except HydraException as e:
        logging.error(f"❌ Bad config override: {e}")
        return InvalidInputError.exit_code
    except Exception as e:
        logging.critical(f"❌ An unhandled error occurred: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
