"""
Curation pipeline: frequency pre-selection, predicate clustering, VD-Net
judging and pruning of visually-irrelevant predicates
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from src.relcull.exceptions import PreconditionError, StageError
from src.relcull.models.configs import CurateConfig
from src.relcull.models.reports import AccuracyReport, CurationReport, CurvePoint, PredicateVerdict
from src.relcull.models.scene_graph import Dataset
from src.relcull.services import vd_net
from src.relcull.services.dataset_store import save_dataset, split_dataset, write_json
from src.relcull.services.embeddings import EmbeddingTable
from src.relcull.services.label_space import ClusterMapping, apply_mapping, cluster_predicates, select_top_labels

logger = logging.getLogger(__name__)

DEFAULT_GRID = tuple(np.round(np.linspace(0.0, 1.0, 101), 10).tolist())


@dataclass
class CurationResult:
    """Everything one curation run produced"""
    rvg: Dataset
    vrr: Dataset
    report: AccuracyReport
    kept: List[int]
    dropped: List[int]
    mapping: ClusterMapping
    insufficient_evidence: List[int] = field(default_factory=list)
    params: Optional[vd_net.VDNetParams] = None
    loss_history: List[float] = field(default_factory=list)
    summary: Optional[CurationReport] = None


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Curation stage '{name}' failed: {e}")
        raise StageError(name, e) from e


def _counts(dataset: Dataset) -> Dict[str, int]:
    return {
        "images": len(dataset.images),
        "instances": dataset.n_instances,
        "triplets": dataset.n_triplets,
        "predicates": sum(1 for c in dataset.predicate_vocab.counts if c > 0),
    }


def drop_empty_images(dataset: Dataset) -> Dataset:
    """Remove images without triplets and the labels only they used"""
    images = [image for image in dataset.images if image.triplets]
    if len(images) == len(dataset.images):
        return dataset
    logger.info(f"Dropping {len(dataset.images) - len(images)} images without triplets")
    return dataset.with_images(images, dataset.split_tags).densified()


def judge_predicates(
    report: AccuracyReport, n_predicates: int, alpha: float, support_floor: int = 0
) -> Dict[str, List[int]]:
    """Split predicate ids into kept / dropped / insufficient_evidence (the last is a subset of kept)"""
    if not 0.0 <= alpha <= 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1], got {alpha}")
    kept, dropped, unjudged = [], [], []
    for pred in range(n_predicates):
        entry = report.per_predicate.get(pred)
        if entry is None or entry.support < support_floor:
            kept.append(pred)
            unjudged.append(pred)
        elif entry.accuracy > alpha:
            dropped.append(pred)
        else:
            kept.append(pred)
    return {"kept": kept, "dropped": dropped, "insufficient_evidence": unjudged}


def prune_predicates(dataset: Dataset, kept: Sequence[int]) -> Dataset:
    """Remove triplets of non-kept predicates, the instances they orphaned and every image left without triplets"""
    keep = set(kept)
    predicate_vocab, remap = dataset.predicate_vocab.subset(list(keep))
    images = []
    for image in dataset.images:
        triplets = tuple(t for t in image.triplets if t.predicate in keep)
        if not triplets:
            continue
        before = {t.subject_id for t in image.triplets} | {t.object_id for t in image.triplets}
        after = {t.subject_id for t in triplets} | {t.object_id for t in triplets}
        orphaned = before - after
        instances = tuple(inst for inst in image.instances if inst.instance_id not in orphaned)
        triplets = tuple(t.model_copy(update={"predicate": remap[t.predicate]}) for t in triplets)
        images.append(image.model_copy(update={"instances": instances, "triplets": triplets}))
    pruned = Dataset.build(images, dataset.object_vocab, predicate_vocab, dataset.attribute_vocab, dataset.split_tags)
    # kept predicates keep all their triplets, so this only drops orphaned object and attribute labels
    return pruned.densified()


def curate(dataset: Dataset, embedding_table: EmbeddingTable, config: CurateConfig) -> CurationResult:
    """Run the whole pipeline and return R-VG, the pruned dataset and the audit trail"""
    if not dataset.images:
        raise PreconditionError("curation needs a non-empty dataset")
    stage_counts: Dict[str, Dict[str, int]] = {"input": _counts(dataset)}

    def record(name: str, data: Dataset) -> None:
        stage_counts[name] = _counts(data)
        logger.info(f"[{name}] {stage_counts[name]}")

    with _stage("select_top"):
        basic = select_top_labels(dataset, config.n_objects, config.n_predicates)
        record("select_top", basic)
    with _stage("cluster"):
        mapping = cluster_predicates(
            basic.predicate_vocab, embedding_table, config.linkage, config.distance_threshold
        )
    with _stage("apply_mapping"):
        rvg = drop_empty_images(apply_mapping(basic, mapping))
        record("apply_mapping", rvg)
    with _stage("split"):
        train_set, test_set = split_dataset(rvg, config.train_fraction, config.split_seed)
        stage_counts["split_train"] = _counts(train_set)
        stage_counts["split_test"] = _counts(test_set)
    with _stage("samples"):
        train_samples = vd_net.build_samples(train_set, embedding_table)
        test_samples = vd_net.build_samples(test_set, embedding_table)
    with _stage("train"):
        params = vd_net.init_vdnet(config.vdnet, embedding_table.dim or 0, rvg.predicate_vocab.size)
        params, history = vd_net.train(
            params, train_samples, config.vdnet, np.random.default_rng(config.vdnet.seed)
        )
    with _stage("evaluate"):
        if test_samples:
            report = vd_net.evaluate(params, test_samples)
        else:
            logger.warning("Held-out split has no triplets; every predicate is kept unjudged")
            report = AccuracyReport()
    with _stage("filter"):
        verdicts = judge_predicates(report, rvg.predicate_vocab.size, config.alpha, config.support_floor)
        vrr = prune_predicates(rvg, verdicts["kept"])
        record("filter", vrr)

    labels = rvg.predicate_vocab.labels

    def verdict(pred: int) -> PredicateVerdict:
        entry = report.per_predicate.get(pred)
        if entry is None:
            return PredicateVerdict(predicate=labels[pred])
        return PredicateVerdict(predicate=labels[pred], accuracy=entry.accuracy, support=entry.support)

    summary = CurationReport(
        alpha=config.alpha,
        stage_counts=stage_counts,
        kept=[verdict(p) for p in verdicts["kept"]],
        dropped=[verdict(p) for p in verdicts["dropped"]],
        insufficient_evidence=[verdict(p) for p in verdicts["insufficient_evidence"]],
        clusters={
            mapping.labels[canonical]: sorted(mapping.labels[m] for m in group)
            for canonical, group in sorted(mapping.clusters.items())
        },
        overall_accuracy=report.overall_accuracy,
        loss_history=history,
    )
    logger.info(
        f"Curation kept {len(verdicts['kept'])} predicates, dropped {len(verdicts['dropped'])} "
        f"({[labels[p] for p in verdicts['dropped']]}) at alpha {config.alpha}"
    )
    return CurationResult(
        rvg=rvg,
        vrr=vrr,
        report=report,
        kept=verdicts["kept"],
        dropped=verdicts["dropped"],
        mapping=mapping,
        insufficient_evidence=verdicts["insufficient_evidence"],
        params=params,
        loss_history=history,
        summary=summary,
    )


def predictability_curve(report: AccuracyReport, accuracy_grid: Sequence[float] = DEFAULT_GRID) -> List[CurvePoint]:
    """Fraction of predicates whose accuracy reaches each threshold"""
    if not report.per_predicate:
        raise PreconditionError("accuracy report is empty")
    accuracies = np.array(list(report.accuracies().values()))
    return [(float(t), float(np.mean(accuracies >= t))) for t in accuracy_grid]


def compare_predictability(
    reports: Mapping[str, AccuracyReport], accuracy_grid: Sequence[float] = DEFAULT_GRID
) -> pd.DataFrame:
    """One curve per named report on a shared grid (column 'threshold' plus one column per name)"""
    frame = pd.DataFrame({"threshold": [float(t) for t in accuracy_grid]})
    for name in sorted(reports):
        frame[name] = [fraction for _, fraction in predictability_curve(reports[name], accuracy_grid)]
    return frame


def write_curve(curve: Sequence[CurvePoint], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(curve), columns=["threshold", "fraction"]).to_csv(path, index=False)


def write_curation_outputs(result: CurationResult, out_dir: Path) -> Dict[str, Path]:
    """Write the pruned dataset, audit files and curve; returns name -> path"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "vrr": out_dir / "vrr.jsonl",
        "rvg": out_dir / "rvg.jsonl",
        "mapping": out_dir / "cluster_mapping.json",
        "report": out_dir / "curation_report.json",
        "accuracy": out_dir / "accuracy_report.json",
        "curve": out_dir / "predictability_curve.csv",
        "loss_history": out_dir / "loss_history.csv",
        "checkpoint": out_dir / "vdnet.npz",
    }
    save_dataset(result.vrr, paths["vrr"])
    save_dataset(result.rvg, paths["rvg"])
    paths["mapping"].write_text(result.mapping.to_json() + "\n", encoding="utf-8")
    if result.summary is not None:
        write_json(result.summary, paths["report"])
    write_json(result.report, paths["accuracy"])
    if result.report.per_predicate:
        write_curve(predictability_curve(result.report), paths["curve"])
    else:
        del paths["curve"]
    vd_net.write_loss_history(result.loss_history, paths["loss_history"])
    if result.params is not None:
        vd_net.save_params(result.params, paths["checkpoint"])
    else:
        del paths["checkpoint"]
    logger.info(f"Curation outputs written to {out_dir}")
    return paths
