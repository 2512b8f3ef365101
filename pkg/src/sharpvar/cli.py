"""Command-line front end: ``sharpvar estimate | simulate | illustrate``.

Exit codes: 0 success, 2 input error, 3 design error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import InvalidDesign, InvalidInput, NumericalFailure, TooLarge
from .estimators import DEFAULT_LEVEL, ObservedExperiment, estimate_all
from .illustrations import BetaMarginal, limiting_ratios, table3_sweep
from .population import INFINITE, ExperimentDesign, PotentialOutcomeTable
from .report import ReportDocument, estimate_document, illustration_document, simulation_document
from .simulation import impute, parse_hypothesis, run_exhaustive, run_monte_carlo

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DESIGN = 3
EXIT_NUMERICAL = 4

TREAT_LABELS = {"treat": "treat", "treatment": "treat", "1": "treat",
                "control": "control", "0": "control"}
POTENTIALS = {"y1", "y0"}


class InputError(Exception):
    """Malformed command-line input; mapped to exit code 2."""


def _finite(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{where}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise InputError(f"{where}: outcome {text!r} is not finite")
    return value


def _read_csv(path: str, columns: tuple) -> list:
    """Rows of a headed CSV as ``(line_number, {column: text})``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InputError(f"{path}: empty file") from None
            header = [h.strip().lower() for h in header]
            if tuple(header) != columns:
                raise InputError(f"{path}:1: expected header {','.join(columns)!r}, "
                                 f"got {','.join(header)!r}")
            rows = []
            for record in reader:
                line = reader.line_num
                if not record or all(not cell.strip() for cell in record):
                    continue
                if len(record) != len(columns):
                    raise InputError(f"{path}:{line}: expected {len(columns)} fields, got {len(record)}")
                rows.append((line, dict(zip(columns, (c.strip() for c in record)))))
            return rows
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not valid UTF-8") from None


def read_dataset(path: str) -> tuple[list, list]:
    """Parse an ``arm,outcome`` file into treated and control outcome lists."""
    yt, yc = [], []
    for line, row in _read_csv(path, ("arm", "outcome")):
        label = TREAT_LABELS.get(row["arm"].lower())
        if label is None:
            raise InputError(f"{path}:{line}: unknown arm label {row['arm']!r}")
        value = _finite(row["outcome"], f"{path}:{line}")
        (yt if label == "treat" else yc).append(value)
    return yt, yc


def read_table(path: str) -> PotentialOutcomeTable:
    y1, y0 = [], []
    for line, row in _read_csv(path, ("y1", "y0")):
        y1.append(_finite(row["y1"], f"{path}:{line}"))
        y0.append(_finite(row["y0"], f"{path}:{line}"))
    if not y1:
        raise InputError(f"{path}: no data rows")
    return PotentialOutcomeTable(y1, y0)


def read_edits(path: str) -> list:
    edits = []
    for line, row in _read_csv(path, ("unit", "potential", "value")):
        try:
            unit = int(row["unit"])
        except ValueError:
            raise InputError(f"{path}:{line}: unit must be an integer") from None
        potential = row["potential"].lower()
        if potential not in POTENTIALS:
            raise InputError(f"{path}:{line}: potential must be y1 or y0")
        edits.append((unit, potential, _finite(row["value"], f"{path}:{line}")))
    return edits


def _level(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not (math.isfinite(value) and value > 0.0):
        raise argparse.ArgumentTypeError(f"shape parameters must be positive, got {text}")
    return value


def _population_size(text: str):
    if text.lower() in ("inf", "infinite"):
        return INFINITE
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid population size {text!r}") from None


def _replicates(text: str):
    if text == "exhaustive":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("replicates must be an integer or 'exhaustive'") from None
    if value < 0:
        raise argparse.ArgumentTypeError("replicates must be non-negative")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sharpvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--level", type=_level, default=DEFAULT_LEVEL, help="confidence level (default 0.95)")
        p.add_argument("--format", choices=("json", "tsv"), default="json")
        p.add_argument("--output", "-o", help="write the report here instead of stdout")
        p.add_argument("--timestamp", action="store_true", help="embed the generation time")

    est = sub.add_parser("estimate", help="variance estimates and Wald intervals for a dataset")
    est.add_argument("--input", required=True, help="CSV with header arm,outcome")
    est.add_argument("--population-size", type=_population_size, default=None,
                     help="population size N (integer or 'infinite'; default: number of rows)")
    common(est)

    sim = sub.add_parser("simulate", help="randomization study of the estimators")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="observed dataset (arm,outcome); missing outcomes are imputed")
    src.add_argument("--table", help="full potential-outcome table (y1,y0)")
    sim.add_argument("--hypothesis", default=None,
                     help="sharp-null | constant:TAU | edits:PATH (with --input; default sharp-null)")
    sim.add_argument("--edits", help="CSV unit,potential,value used by --hypothesis edits")
    sim.add_argument("--population-size", type=_population_size, default=None)
    sim.add_argument("--sample-size", type=int, default=None, help="n for --table (default N)")
    sim.add_argument("--treated", type=int, default=None, help="m for --table (default n // 2)")
    sim.add_argument("--replicates", type=_replicates, default=10_000,
                     help="number of assignments, or 'exhaustive' to enumerate all")
    sim.add_argument("--seed", type=int, default=0)
    common(sim)

    ill = sub.add_parser("illustrate", help="limiting ratios for Beta marginals")
    ill.add_argument("--alpha0", type=_positive_float, help="control Beta shape alpha")
    ill.add_argument("--beta0", type=_positive_float, help="control Beta shape beta")
    ill.add_argument("--alpha1", type=_positive_float, help="treatment Beta shape alpha")
    ill.add_argument("--beta1", type=_positive_float, help="treatment Beta shape beta")
    ill.add_argument("--table3", action="store_true", help="run the 18 standard scenarios")
    ill.add_argument("--grid-size", type=int, default=100_000, help="quadrature points K")
    common(ill)
    return parser


def _cmd_estimate(args) -> ReportDocument:
    yt, yc = read_dataset(args.input)
    obs = ObservedExperiment(yt, yc, args.population_size)
    inputs = {"input": args.input, "population_size": _n_repr(obs.N), "level": args.level}
    return estimate_document(estimate_all(obs, args.level), inputs)


def _n_repr(N):
    return N if isinstance(N, int) else str(N)


def _hypothesis(args):
    text = args.hypothesis or "sharp-null"
    edits = ()
    if text.startswith("edits"):
        path = text.split(":", 1)[1] if ":" in text else args.edits
        if not path:
            raise InputError("--hypothesis edits needs a file (edits:PATH or --edits PATH)")
        edits = read_edits(path)
        text = "edits"
    try:
        return parse_hypothesis(text, edits)
    except InvalidInput as exc:
        raise InputError(str(exc)) from None


def _cmd_simulate(args) -> ReportDocument:
    if args.input:
        yt, yc = read_dataset(args.input)
        obs = ObservedExperiment(yt, yc, args.population_size)
        hypothesis = _hypothesis(args)
        # raises InvalidDesign when n < N
        table = impute(obs, hypothesis)
        design = obs.design
        source = {"input": args.input, "hypothesis": args.hypothesis or "sharp-null"}
    else:
        if args.hypothesis:
            raise InputError("--hypothesis applies to --input only; a --table is already complete")
        table = read_table(args.table)
        N = args.population_size if args.population_size is not None else table.N
        n = args.sample_size if args.sample_size is not None else N
        m = args.treated if args.treated is not None else n // 2
        design = ExperimentDesign(N, n, m)
        source = {"table": args.table}
    inputs = dict(source)
    inputs.update({"replicates": args.replicates, "seed": args.seed, "level": args.level})
    if args.replicates == "exhaustive":
        report = run_exhaustive(table, design, args.level)
    else:
        report = run_monte_carlo(table, design, args.replicates, args.level, args.seed)
    return simulation_document(report, inputs)


def _cmd_illustrate(args) -> ReportDocument:
    shapes = (args.alpha0, args.beta0, args.alpha1, args.beta1)
    if args.grid_size < 1:
        raise InputError("--grid-size must be positive")
    if args.table3:
        if any(s is not None for s in shapes):
            raise InputError("--table3 cannot be combined with explicit shape parameters")
        rows = table3_sweep(args.grid_size)
        inputs = {"table3": True, "grid_size": args.grid_size}
    else:
        if any(s is None for s in shapes):
            raise InputError("give --alpha0 --beta0 --alpha1 --beta1, or --table3")
        a0, b0, a1, b1 = shapes
        rows = [limiting_ratios(BetaMarginal(a1, b1), BetaMarginal(a0, b0), args.grid_size)]
        inputs = {"alpha0": a0, "beta0": b0, "alpha1": a1, "beta1": b1, "grid_size": args.grid_size}
    return illustration_document(rows, inputs)


COMMANDS = {"estimate": _cmd_estimate, "simulate": _cmd_simulate, "illustrate": _cmd_illustrate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = COMMANDS[args.command](args)
    except (InputError, InvalidInput) as exc:
        print(f"sharpvar: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidDesign, TooLarge) as exc:
        print(f"sharpvar: design error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except NumericalFailure as exc:
        print(f"sharpvar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.timestamp:
        doc.generated_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = doc.render(args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
