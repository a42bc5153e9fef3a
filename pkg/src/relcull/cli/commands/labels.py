"""
Label-space command: cluster
"""

from argparse import Namespace

from src.relcull.cli.context import RunContext
from src.relcull.services.curation import drop_empty_images
from src.relcull.services.dataset_store import load_dataset, save_dataset
from src.relcull.services.embeddings import load_embeddings
from src.relcull.services.label_space import apply_mapping, cluster_predicates, select_top_labels


def run_cluster(args: Namespace, ctx: RunContext) -> None:
    """Top-label selection plus predicate clustering; writes the mapping and R-VG"""
    s = ctx.settings
    dataset = load_dataset(ctx.input(args.dataset, "--dataset"))
    table = load_embeddings(ctx.input(args.embeddings, "--embeddings"))
    basic = select_top_labels(dataset, s.n_objects, s.n_predicates)
    mapping = cluster_predicates(basic.predicate_vocab, table, s.cluster_linkage, s.cluster_threshold)
    ctx.output("cluster_mapping.json").write_text(mapping.to_json() + "\n", encoding="utf-8")
    save_dataset(drop_empty_images(apply_mapping(basic, mapping)), ctx.output("rvg.jsonl"))
    ctx.outputs.append("rvg.jsonl.vocab.json")


def register(subparsers, common) -> None:
    cluster = subparsers.add_parser("cluster", parents=[common], help="Select top labels and cluster predicates")
    cluster.add_argument("--dataset", required=True)
    cluster.add_argument("--embeddings", required=True)
    cluster.add_argument("--n-objects", dest="n_objects", type=int)
    cluster.add_argument("--n-predicates", dest="n_predicates", type=int)
    cluster.add_argument("--linkage", dest="cluster_linkage", choices=["single", "complete", "average"])
    cluster.add_argument("--cluster-threshold", dest="cluster_threshold", type=float)
    cluster.set_defaults(handler=run_cluster)
