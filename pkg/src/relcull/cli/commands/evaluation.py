"""
Recall commands: baseline, eval
"""

import argparse
import logging
from argparse import Namespace
from typing import List

from src.relcull.cli.context import RunContext
from src.relcull.services.dataset_store import load_dataset
from src.relcull.services.freq_baseline import FreqPredictor, fit_freq_baseline
from src.relcull.services.recall_eval import (
    EvalMode,
    Pooling,
    eval_predcls,
    eval_preddet,
    read_predictions,
    write_recall,
)

logger = logging.getLogger(__name__)


def parse_ks(text: str) -> List[int]:
    try:
        ks = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if not ks or min(ks) <= 0:
        raise argparse.ArgumentTypeError(f"K values must be positive integers, got '{text}'")
    return ks


def _score(predictor, dataset, args: Namespace, ctx: RunContext):
    evaluator = eval_preddet if EvalMode(args.mode) == EvalMode.PREDDET else eval_predcls
    return evaluator(
        predictor,
        dataset,
        args.k or ctx.settings.recall_ks,
        graph_constraint=args.graph_constraint,
        pool=Pooling(args.pool),
        threads=ctx.settings.threads,
    )


def run_baseline(args: Namespace, ctx: RunContext) -> None:
    """Fit the frequency baseline on --train and score --test"""
    train = load_dataset(ctx.input(args.train, "--train"))
    test = load_dataset(ctx.input(args.test, "--test"))
    model = fit_freq_baseline(train, args.smoothing)
    result = _score(FreqPredictor(model), test, args, ctx)
    write_recall(result, ctx.output("recall.json"))


def run_eval(args: Namespace, ctx: RunContext) -> None:
    """Score a prediction file against --dataset"""
    dataset = load_dataset(ctx.input(args.dataset, "--dataset"))
    predictor = read_predictions(ctx.input(args.predictions, "--predictions"))
    result = _score(predictor, dataset, args, ctx)
    write_recall(result, ctx.output("recall.json"))


def _recall_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=[m.value for m in EvalMode], default=EvalMode.PREDDET.value)
    parser.add_argument("--k", type=parse_ks, help="Comma-separated K values, e.g. 50,100")
    parser.add_argument("--graph-constraint", dest="graph_constraint", action="store_true")
    parser.add_argument("--pool", choices=[p.value for p in Pooling], default=Pooling.IMAGE.value)


def register(subparsers, common) -> None:
    baseline = subparsers.add_parser("baseline", parents=[common], help="Fit and evaluate the frequency baseline")
    baseline.add_argument("--train", required=True)
    baseline.add_argument("--test", required=True)
    baseline.add_argument("--smoothing", type=float, default=0.0)
    _recall_flags(baseline)
    baseline.set_defaults(handler=run_baseline)

    evaluate = subparsers.add_parser("eval", parents=[common], help="PredDet / PredCls recall from a prediction file")
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--predictions", required=True)
    _recall_flags(evaluate)
    evaluate.set_defaults(handler=run_eval)
