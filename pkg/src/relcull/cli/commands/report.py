"""
Report command: label distributions and predictability curves
"""

import logging
from argparse import Namespace
from pathlib import Path

from pydantic import ValidationError

from src.relcull.cli.context import RunContext
from src.relcull.exceptions import DatasetParseError, UsageError
from src.relcull.models.reports import AccuracyReport
from src.relcull.services.curation import compare_predictability, predictability_curve, write_curve
from src.relcull.services.dataset_store import load_dataset
from src.relcull.services.distributions import conditional_distribution, label_distribution, top_k_share, write_histogram

logger = logging.getLogger(__name__)

WHICH = ("dist", "cond", "curve", "compare")


def _load_report(path: Path) -> AccuracyReport:
    try:
        return AccuracyReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DatasetParseError(e.errors()[0]["msg"], source=path.name) from e


def run_report(args: Namespace, ctx: RunContext) -> None:
    if args.which == "dist":
        histogram = label_distribution(load_dataset(ctx.input(args.dataset, "--dataset")))
        write_histogram(histogram, ctx.output("label_distribution.csv"))
        logger.info(f"Top-{args.top_k} predicates cover {top_k_share(histogram, args.top_k):.3f} of triplets")
    elif args.which == "cond":
        if not args.subject or not args.object:
            raise UsageError("report --which cond needs --subject and --object")
        dataset = load_dataset(ctx.input(args.dataset, "--dataset"))
        histogram = conditional_distribution(dataset, args.subject, args.object)
        write_histogram(histogram, ctx.output("conditional_distribution.csv"))
    elif args.which == "curve":
        report = _load_report(ctx.input(args.accuracy_report, "--accuracy-report"))
        write_curve(predictability_curve(report), ctx.output("predictability_curve.csv"))
    else:
        if not args.reports:
            raise UsageError("report --which compare needs --reports A.json,B.json")
        paths = [part for part in args.reports.split(",") if part]
        reports = {path: _load_report(ctx.input(path, "--reports")) for path in paths}
        compare_predictability(reports).to_csv(ctx.output("predictability_comparison.csv"), index=False)


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("report", parents=[common], help="Distribution and predictability reports")
    parser.add_argument("--which", choices=WHICH, required=True)
    parser.add_argument("--dataset")
    parser.add_argument("--subject", help="Subject class label (cond)")
    parser.add_argument("--object", help="Object class label (cond)")
    parser.add_argument("--top-k", dest="top_k", type=int, default=16)
    parser.add_argument("--accuracy-report", dest="accuracy_report", help="accuracy_report.json (curve)")
    parser.add_argument("--reports", help="Comma-separated accuracy reports (compare)")
    parser.set_defaults(handler=run_report)
