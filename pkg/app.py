"""entrocrit command line.

    python app.py analyze --input state.json
    python app.py werner --d 3 --p-start 0 --p-end 1 --p-step 0.05
    python app.py isospectral --d 3 --p 0.2 --emit-states out/
    python app.py sample --ensemble separable --dims 3,3 --trials 1000 --seed 7
    python app.py entropy --counterexample --alphas 0,0.5,1,2,inf

Reports go to stdout (or --out); logs go to stderr. Exit status is 2 for
invalid input and 0 otherwise, whatever the verdicts.
"""

import argparse
import io
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from pydantic import ValidationError

from campaign import ENSEMBLES, campaign_service
from config import TOOL_NAME, __version__, apply_tolerance_overrides, resolved_seed, settings
from entropy import DEFAULT_ALPHA_GRID, parse_grid
from errors import EntrocritError, ParameterRangeError
from models import Report
from state_io import load_state
from states import BipartiteDims, monotonicity_counterexample

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2


def parse_dims(text: str) -> BipartiteDims:
    """'dA,dB' -> BipartiteDims."""
    try:
        dA, dB = (int(part) for part in text.split(","))
    except ValueError as e:
        raise ParameterRangeError(f"dims must look like 'dA,dB', got {text!r}") from e
    return BipartiteDims(dA, dB)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="Report format.")
    common.add_argument("--out", help="Write the report here instead of stdout.")
    common.add_argument("--seed", type=int, default=None, help="Master seed (default: ENTROCRIT_SEED or 0).")
    common.add_argument("--tol-psd", type=float, help="PSD slack on eigenvalue margins.")
    common.add_argument("--tol-rank", type=float, help="Eigenvalues above this count towards the rank.")
    common.add_argument("--tol-major", type=float, help="Slack on majorization partial sums.")
    common.add_argument("--tol-entropic", type=float, help="Slack on entropic sign margins.")
    common.add_argument("--backend", choices=("jacobi", "lapack"), help="Hermitian eigensolver.")
    common.add_argument("--log-level", default=None, help="Logging level (default: ENTROCRIT_LOG_LEVEL or WARNING).")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="entrocrit", description="Spectral entanglement criteria.")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", parents=[common], help="Every criterion and an alpha sweep for one state.")
    analyze.add_argument("--input", required=True, help="State file (JSON).")
    analyze.add_argument("--compare", help="Comparator state expected to share the spectra of --input.")
    analyze.add_argument("--alphas", help="Comma-separated alpha grid; 'inf' allowed.")

    werner = commands.add_parser("werner", parents=[common], help="Criterion margins along the Werner family.")
    werner.add_argument("--d", type=int, required=True)
    werner.add_argument("--p-start", type=float, default=0.0)
    werner.add_argument("--p-end", type=float, default=1.0)
    werner.add_argument("--p-step", type=float, default=0.05)
    werner.add_argument("--alphas")

    iso = commands.add_parser("isospectral", parents=[common], help="Werner state and its separable twin.")
    iso.add_argument("--d", type=int, required=True)
    iso.add_argument("--p", type=float, required=True)
    iso.add_argument("--emit-states", metavar="DIR", help="Also write both states as state files.")

    sample = commands.add_parser("sample", parents=[common], help="Seeded property-test campaign.")
    sample.add_argument("--ensemble", choices=ENSEMBLES, required=True)
    sample.add_argument("--dims", type=str, required=True, help="dA,dB")
    sample.add_argument("--trials", type=int, required=True)
    sample.add_argument("--rank", type=int, help="Rank of mixed states (default: full).")
    sample.add_argument("--terms", type=int, help="Product terms in separable states (default: dA*dB).")
    sample.add_argument("--workers", type=int, default=1)
    sample.add_argument("--alphas")

    entropy = commands.add_parser("entropy", parents=[common], help="Entropy table across alpha.")
    source = entropy.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="State file (JSON).")
    source.add_argument("--counterexample", action="store_true",
                        help="Use (|Phi+><Phi+| + |01><01|)/2 on two qubits.")
    entropy.add_argument("--alphas")

    return parser


def configure_logging(level: Optional[str]) -> None:
    level = (level or settings.log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def apply_options(args: argparse.Namespace) -> None:
    overrides = {
        "psd": args.tol_psd,
        "rank": args.tol_rank,
        "major": args.tol_major,
        "entropic": args.tol_entropic,
    }
    apply_tolerance_overrides({name: value for name, value in overrides.items() if value is not None})
    if args.backend:
        settings.eigen_backend = args.backend


def render(report: Report, output_format: str) -> str:
    """JSON document, or CSV rows preceded by '#' lines holding the header and the non-tabular fields."""
    if output_format == "json":
        return report.model_dump_json(indent=2) + "\n"
    buffer = io.StringIO()
    preamble = {"header": report.header.model_dump(mode="json"), "summary": report.summary()}
    for line in json.dumps(preamble, indent=2).splitlines():
        buffer.write(f"# {line}\n")
    pd.DataFrame(report.table_rows()).to_csv(buffer, index=False, float_format="%.17g")
    return buffer.getvalue()


def run_command(args: argparse.Namespace) -> Report:
    seed = resolved_seed(args.seed)
    grid = parse_grid(args.alphas) if getattr(args, "alphas", None) else None
    config = campaign_service.run_config(seed, grid, args.format, args.out)

    if args.command == "analyze":
        rho = load_state(args.input)
        comparator = load_state(args.compare) if args.compare else None
        return campaign_service.analyze(rho, grid, comparator, config)
    if args.command == "werner":
        return campaign_service.werner_sweep(args.d, args.p_start, args.p_end, args.p_step, grid, config)
    if args.command == "isospectral":
        return campaign_service.isospectral_demo(args.d, args.p, args.emit_states, config)
    if args.command == "sample":
        return campaign_service.sample(
            args.ensemble, parse_dims(args.dims), args.trials, seed,
            rank=args.rank, terms=args.terms, workers=args.workers, grid=grid, config=config,
        )
    if args.counterexample:
        rho, source = monotonicity_counterexample(), "counterexample"
    else:
        rho, source = load_state(args.input), args.input
    return campaign_service.entropy_table(rho, grid or DEFAULT_ALPHA_GRID, source, config)


def _attach_option_values(argv: List[str]) -> List[str]:
    """Turn '--alphas -0.5,2' into '--alphas=-0.5,2' so argparse keeps a leading minus."""
    joined = []
    tokens = iter(argv)
    for token in tokens:
        if token == "--alphas":
            value = next(tokens, None)
            joined.append(token if value is None else f"{token}={value}")
        else:
            joined.append(token)
    return joined


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(_attach_option_values(sys.argv[1:] if argv is None else list(argv)))
    configure_logging(args.log_level)
    logger.info(f"{TOOL_NAME} {__version__}: {args.command}")
    try:
        apply_options(args)
        report = run_command(args)
        text = render(report, args.format)
        if args.out:
            Path(args.out).write_text(text)
            logger.info(f"report written to {args.out}")
        else:
            sys.stdout.write(text)
    except (EntrocritError, ValidationError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
