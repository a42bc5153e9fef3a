"""
Dataset commands: ingest, stats, synth
"""

import json
import logging
from argparse import Namespace

from src.relcull.cli.context import RunContext
from src.relcull.models.synth import SynthSpec
from src.relcull.services.dataset_store import dataset_stats, load_dataset, save_dataset, write_json
from src.relcull.services.synthetic import gen_synthetic, synthetic_embeddings
from src.relcull.services.vg_ingest import VGIngestor

logger = logging.getLogger(__name__)

# VD-Net settings under which the synthetic oracle separates geometric from coin predicates
SYNTH_TRAINING = {
    "RELCULL_LEARNING_RATE": "0.02",
    "RELCULL_EPOCHS": "60",
    "RELCULL_BATCH_SIZE": "128",
}


def run_ingest(args: Namespace, ctx: RunContext) -> None:
    """VG-style JSON documents -> canonical dataset"""
    attributes = ctx.input(args.attributes, "--attributes") if args.attributes else None
    ingestor = VGIngestor(threads=ctx.settings.threads)
    dataset = ingestor.ingest(
        ctx.input(args.objects, "--objects"),
        ctx.input(args.relationships, "--relationships"),
        attributes,
        ctx.input(args.image_meta, "--image-meta"),
    )
    save_dataset(dataset, ctx.output("dataset.jsonl"))
    ctx.outputs.append("dataset.jsonl.vocab.json")
    write_json(ingestor.report, ctx.output("ingest_report.json"))


def run_stats(args: Namespace, ctx: RunContext) -> None:
    report = dataset_stats(load_dataset(ctx.input(args.dataset, "--dataset")))
    write_json(report, ctx.output("stats.json"))
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))


def run_synth(args: Namespace, ctx: RunContext) -> None:
    """Oracle dataset, matching word vectors and a training config for it"""
    fields = SynthSpec.default(n_images=args.n_images, seed=ctx.settings.seed).model_dump()
    fields["pairs_per_image"] = args.pairs_per_image
    if args.geometric_share is not None:
        fields["geometric_share"] = args.geometric_share
    spec = SynthSpec.model_validate(fields)
    dataset = gen_synthetic(spec)
    save_dataset(dataset, ctx.output("synthetic.jsonl"))
    ctx.outputs.append("synthetic.jsonl.vocab.json")
    synthetic_embeddings(spec, dim=ctx.settings.embed_dim).save(ctx.output("embeddings.txt"))
    write_json(spec, ctx.output("synth_spec.json"))
    lines = [f"{key}={value}" for key, value in SYNTH_TRAINING.items()]
    ctx.output("synth.env").write_text("\n".join(lines) + "\n", encoding="utf-8")


def register(subparsers, common) -> None:
    ingest = subparsers.add_parser("ingest", parents=[common], help="Convert VG JSON to the canonical format")
    ingest.add_argument("--objects", required=True)
    ingest.add_argument("--relationships", required=True)
    ingest.add_argument("--attributes")
    ingest.add_argument("--image-meta", dest="image_meta", required=True)
    ingest.set_defaults(handler=run_ingest)

    stats = subparsers.add_parser("stats", parents=[common], help="Dataset statistics")
    stats.add_argument("--dataset", required=True)
    stats.set_defaults(handler=run_stats)

    synth = subparsers.add_parser("synth", parents=[common], help="Generate a synthetic oracle dataset")
    synth.add_argument("--n-images", dest="n_images", type=int, default=2000)
    synth.add_argument("--pairs-per-image", dest="pairs_per_image", type=int, default=12)
    synth.add_argument("--geometric-share", dest="geometric_share", type=float)
    synth.add_argument("--embed-dim", dest="embed_dim", type=int)
    synth.set_defaults(handler=run_synth)
