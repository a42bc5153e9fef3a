"""
Services package for relcull
"""

from .curation import CurationResult, curate, drop_empty_images, judge_predicates, predictability_curve, prune_predicates
from .dataset_store import dataset_stats, load_dataset, save_dataset, split_dataset
from .embeddings import EmbeddingTable, load_embeddings, phrase_vector
from .freq_baseline import FreqModel, FreqPredictor, fit_freq_baseline, freq_predict
from .label_space import ClusterMapping, apply_mapping, cluster_predicates, select_top_labels
from .pair_geometry import NormBox, PairGeometry, normalize_box, pair_embedding
from .recall_eval import eval_predcls, eval_preddet
from .synthetic import gen_synthetic
from .vg_ingest import VGIngestor, ingest_vg

__all__ = [
    "ClusterMapping",
    "CurationResult",
    "EmbeddingTable",
    "FreqModel",
    "FreqPredictor",
    "NormBox",
    "PairGeometry",
    "VGIngestor",
    "apply_mapping",
    "cluster_predicates",
    "curate",
    "dataset_stats",
    "drop_empty_images",
    "eval_predcls",
    "eval_preddet",
    "fit_freq_baseline",
    "freq_predict",
    "gen_synthetic",
    "ingest_vg",
    "judge_predicates",
    "load_dataset",
    "load_embeddings",
    "normalize_box",
    "pair_embedding",
    "phrase_vector",
    "predictability_curve",
    "prune_predicates",
    "save_dataset",
    "select_top_labels",
    "split_dataset",
]
