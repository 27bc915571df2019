"""Command-line interface: ``semicont {fit,compare,simulate,summary}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .data import RAND_COVARIATES, DataError, SchemaConfig, load_csv, summarize
from .density import TweedieParams, sample
from .evaluation import SplitSpec, compare, render_report, rmse_over_splits, to_json
from .glm import ConvergenceError, SingularDesignError, Tweedie, irls_fit
from .profile import profile_fit
from .tobit import tobit_fit
from .twopart import fit_twopart

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

logger = logging.getLogger("semicont")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _power(text):
    if text == "auto":
        return text
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("power must be 'auto' or a number in (1, 2)") from None
    if not 1.0 < p < 2.0:
        raise argparse.ArgumentTypeError("power must lie in (1, 2)")
    return p


def _covariates(text):
    return tuple(c.strip() for c in text.split(",") if c.strip())


def _add_data_args(sp, covariates=True):
    sp.add_argument("--data", required=True, type=Path, help="headered CSV file")
    sp.add_argument("--response", default="cost", help="response column (default: cost)")
    if covariates:
        sp.add_argument("--covariates", type=_covariates, default=RAND_COVARIATES,
                        help="comma separated covariate columns (default: RAND HIE set)")
    sp.add_argument("--drop-missing", action="store_true",
                    help="drop incomplete rows instead of failing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semicont", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("fit", help="fit one model and write fit_<model>.json")
    _add_data_args(sp)
    sp.add_argument("--model", required=True, choices=("tweedie", "twopart", "tobit"))
    sp.add_argument("--power", type=_power, default="auto")
    sp.add_argument("--out", required=True, type=Path)

    sp = sub.add_parser("compare", help="fit all models and write the comparison report")
    _add_data_args(sp)
    sp.add_argument("--train-n", type=int, default=2801)
    sp.add_argument("--test-n", type=int, default=500)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--power", type=_power, default="auto")
    sp.add_argument("--replicates", type=int, default=100, help="Q-Q simulation replicates")
    sp.add_argument("--n-splits", type=int, default=1,
                    help="also average test RMSE over this many splits (seeds seed..seed+n-1)")
    sp.add_argument("--format", default="json,csv,svg")
    sp.add_argument("--out", required=True, type=Path)

    sp = sub.add_parser("simulate", help="draw Tweedie responses to a CSV")
    sp.add_argument("--mu", type=float, required=True)
    sp.add_argument("--phi", type=float, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--response", default="cost")
    sp.add_argument("--out", required=True, type=Path)

    sp = sub.add_parser("summary", help="print n, zero fraction, mean and max of the response")
    _add_data_args(sp, covariates=False)
    return parser


def _load(args, covariates=None):
    cov = args.covariates if covariates is None else covariates
    schema = SchemaConfig(response_column=args.response, covariate_columns=tuple(cov))
    return load_csv(args.data, schema, drop_missing=args.drop_missing)


def _cmd_fit(args):
    data = _load(args)
    if args.model == "tweedie":
        if args.power == "auto":
            prof = profile_fit(data)
            payload = prof.fit_at_p_hat.to_dict()
            payload["p"] = prof.p_hat
            payload["profile"] = prof.to_dict()
        else:
            fit = irls_fit(data, Tweedie(args.power), link="log", dispersion="mle")
            payload = fit.to_dict()
            payload["p"] = args.power
    elif args.model == "twopart":
        payload = fit_twopart(data).to_dict()
    else:
        payload = tobit_fit(data).to_dict()
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"fit_{args.model}.json"
    path.write_text(to_json(payload), encoding="utf-8")
    print(path)


def _cmd_compare(args):
    data = _load(args)
    spec = SplitSpec(args.train_n, args.test_n, args.seed)
    report = compare(data, spec, power=args.power, replicates=args.replicates)
    if args.n_splits > 1:
        seeds = range(args.seed, args.seed + args.n_splits)
        per = rmse_over_splits(data, args.train_n, args.test_n, seeds, power=args.power)
        report.config["split_seeds"] = list(seeds)
        report.config["split_rmse"] = per
        report.config["split_rmse_mean"] = {k: float(np.mean(v)) for k, v in per.items()}
    formats = tuple(f.strip() for f in args.format.split(","))
    for path in render_report(report, args.out, formats=formats):
        print(path)


def _cmd_simulate(args):
    y = sample(TweedieParams(args.mu, args.phi, args.p), args.n, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([args.response])
        w.writerows([repr(float(v))] for v in y)
    print(args.out)


def _cmd_summary(args):
    s = summarize(_load(args, covariates=()))
    print(to_json(vars(s)), end="")


COMMANDS = {"fit": _cmd_fit, "compare": _cmd_compare, "simulate": _cmd_simulate,
            "summary": _cmd_summary}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (DataError, FileNotFoundError) as exc:
        print(f"semicont: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, SingularDesignError, FloatingPointError) as exc:
        print(f"semicont: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"semicont: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"semicont: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
