"""
VD-Net commands: train-vdnet, eval-vdnet
"""

import logging
from argparse import Namespace

import numpy as np

from src.relcull.cli.context import RunContext
from src.relcull.exceptions import DataError
from src.relcull.services import vd_net
from src.relcull.services.curation import predictability_curve, write_curve
from src.relcull.services.dataset_store import load_dataset, write_json
from src.relcull.services.embeddings import load_embeddings

logger = logging.getLogger(__name__)


def run_train(args: Namespace, ctx: RunContext) -> None:
    """Train on every triplet of --dataset"""
    config = ctx.settings.vdnet_config()
    dataset = load_dataset(ctx.input(args.dataset, "--dataset"))
    table = load_embeddings(ctx.input(args.embeddings, "--embeddings"))
    samples = vd_net.build_samples(dataset, table)
    if not samples:
        raise DataError(f"{args.dataset} has no triplets to train on")
    params = vd_net.init_vdnet(config, table.dim or 0, dataset.predicate_vocab.size)
    params, history = vd_net.train(params, samples, config, np.random.default_rng(config.seed))
    vd_net.save_params(params, ctx.output("vdnet.npz"))
    vd_net.write_loss_history(history, ctx.output("loss_history.csv"))


def run_eval(args: Namespace, ctx: RunContext) -> None:
    """Per-predicate accuracy of a checkpoint on --dataset"""
    params = vd_net.load_params(ctx.input(args.checkpoint, "--checkpoint"))
    dataset = load_dataset(ctx.input(args.dataset, "--dataset"))
    table = load_embeddings(ctx.input(args.embeddings, "--embeddings"))
    samples = vd_net.build_samples(dataset, table)
    if not samples:
        raise DataError(f"{args.dataset} has no triplets to evaluate")
    report = vd_net.evaluate(params, samples)
    write_json(report, ctx.output("accuracy_report.json"))
    write_curve(predictability_curve(report), ctx.output("predictability_curve.csv"))


def register(subparsers, common) -> None:
    train = subparsers.add_parser("train-vdnet", parents=[common], help="Train the visual discriminator")
    train.add_argument("--dataset", required=True)
    train.add_argument("--embeddings", required=True)
    train.add_argument("--epochs", type=int)
    train.add_argument("--lr", dest="learning_rate", type=float)
    train.add_argument("--batch-size", dest="batch_size", type=int)
    train.set_defaults(handler=run_train)

    evaluate = subparsers.add_parser("eval-vdnet", parents=[common], help="Per-predicate accuracy of a trained VD-Net")
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--embeddings", required=True)
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.set_defaults(handler=run_eval)
