"""
Curation command
"""

from argparse import Namespace

from src.relcull.cli.context import RunContext
from src.relcull.services.curation import curate, write_curation_outputs
from src.relcull.services.dataset_store import load_dataset
from src.relcull.services.embeddings import load_embeddings


def run_curate(args: Namespace, ctx: RunContext) -> None:
    dataset = load_dataset(ctx.input(args.dataset, "--dataset"))
    table = load_embeddings(ctx.input(args.embeddings, "--embeddings"))
    result = curate(dataset, table, ctx.settings.curate_config())
    paths = write_curation_outputs(result, ctx.out_dir)
    ctx.outputs.extend(path.name for path in paths.values())
    ctx.outputs.extend(["vrr.jsonl.vocab.json", "rvg.jsonl.vocab.json"])


def register(subparsers, common) -> None:
    parser = subparsers.add_parser("curate", parents=[common], help="Run the full curation pipeline")
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--embeddings", required=True)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--n-objects", dest="n_objects", type=int)
    parser.add_argument("--n-predicates", dest="n_predicates", type=int)
    parser.add_argument("--cluster-threshold", dest="cluster_threshold", type=float)
    parser.add_argument("--linkage", dest="cluster_linkage", choices=["single", "complete", "average"])
    parser.add_argument("--train-fraction", dest="train_fraction", type=float)
    parser.add_argument("--support-floor", dest="support_floor", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--lr", dest="learning_rate", type=float)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.set_defaults(handler=run_curate)
