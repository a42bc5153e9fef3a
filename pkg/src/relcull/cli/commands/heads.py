"""
Relationship-head command: train-heads
"""

from argparse import Namespace

from src.relcull.cli.context import RunContext
from src.relcull.exceptions import DataError, UsageError
from src.relcull.services.rel_heads import (
    gen_proposal_batches,
    heads_train,
    init_rel_heads,
    load_heads,
    read_proposal_batches,
    save_heads,
    write_heads_history,
    write_proposal_batches,
)


def run_train_heads(args: Namespace, ctx: RunContext) -> None:
    """Train the heads on a batch file, or on generated batches with --synthetic N"""
    config = ctx.settings.heads_config(relation_loss=not args.no_relation)
    if args.batches:
        batches = read_proposal_batches(ctx.input(args.batches, "--batches"))
    elif args.synthetic:
        batches = gen_proposal_batches(
            args.synthetic,
            k=args.k,
            feature_dim=args.feature_dim,
            n_classes=args.n_classes,
            n_attributes=args.n_attributes,
            n_relations=args.n_relations,
            seed=ctx.settings.seed,
        )
        write_proposal_batches(batches, ctx.output("proposal_batches.jsonl"))
    else:
        raise UsageError("train-heads needs --batches F or --synthetic N")
    if not batches:
        raise DataError("no proposal batches to train on")

    first = batches[0]
    n_classes = max(args.n_classes, max(int(b.gold_classes.max()) for b in batches) + 1)
    n_attributes = max([args.n_attributes] + [max(a) + 1 for b in batches for a in b.gold_attributes if a])
    n_relations = max([args.n_relations] + [p + 1 for b in batches for p in b.gold_relations.values()])
    if args.resume:
        params = load_heads(ctx.input(args.resume, "--resume"))
        layout = (params.feature_dim, params.n_classes, params.n_attributes, params.n_relations)
        needed = (first.features.shape[1], n_classes, n_attributes, n_relations)
        if layout[0] != needed[0] or any(have < need for have, need in zip(layout[1:], needed[1:])):
            raise DataError(f"checkpoint layout {layout} cannot score these proposal batches")
    else:
        params = init_rel_heads(config, first.features.shape[1], n_classes, n_attributes, n_relations)
    params, history = heads_train(params, batches, config)
    save_heads(params, ctx.output("heads.npz"))
    write_heads_history(history, ctx.output("heads_loss_history.csv"))


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("train-heads", parents=[common], help="Train relationship-aware heads on proposal features")
    parser.add_argument("--batches", help="JSONL proposal batches")
    parser.add_argument("--synthetic", type=int, help="Generate this many synthetic batches instead")
    parser.add_argument("--resume", help="Continue training from a heads.npz checkpoint")
    parser.add_argument("--no-relation", dest="no_relation", action="store_true", help="Set the relation loss weight to 0")
    parser.add_argument("--k", type=int, default=6, help="Proposals per synthetic batch")
    parser.add_argument("--feature-dim", dest="feature_dim", type=int, default=16)
    parser.add_argument("--n-classes", dest="n_classes", type=int, default=4)
    parser.add_argument("--n-attributes", dest="n_attributes", type=int, default=3)
    parser.add_argument("--n-relations", dest="n_relations", type=int, default=3)
    parser.add_argument("--epochs", dest="heads_epochs", type=int)
    parser.add_argument("--lr", dest="heads_learning_rate", type=float)
    parser.set_defaults(handler=run_train_heads)
