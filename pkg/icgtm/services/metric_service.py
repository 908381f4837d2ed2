"""Classic and consistency-weighted precision, recall and F-measure."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

import numpy as np

from icgtm.errors import MetricError
from icgtm.models import OUTLIER, UNKNOWN, CorrespondenceSet, MatchResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    w_precision: float
    w_recall: float
    w_f_measure: float
    per_consistency: Tuple[Tuple[int, int, float], ...]
    w_outlier: float
    tp: int
    fp: int
    fn: int
    w_tp: float
    w_fp: float
    w_fn: float
    k_pred: int
    k_true: int
    cluster_accuracy: float
    degenerate: Tuple[str, ...] = ()

    def machine_values(self) -> Dict[str, object]:
        return {
            "P": self.precision,
            "R": self.recall,
            "F": self.f_measure,
            "W-P": self.w_precision,
            "W-R": self.w_recall,
            "W-F": self.w_f_measure,
            "K_pred": self.k_pred,
            "K_true": self.k_true,
            "TP": self.tp,
            "FP": self.fp,
            "FN": self.fn,
            "cluster_accuracy": self.cluster_accuracy,
        }

    def to_kv(self) -> str:
        lines = []
        for key, value in self.machine_values().items():
            lines.append(f"{key}={value:.6f}" if isinstance(value, float) else f"{key}={value}")
        if self.degenerate:
            lines.append("degenerate=" + ",".join(self.degenerate))
        return "\n".join(lines)

    def to_table(self) -> str:
        rows = [
            ("", "classic", "weighted"),
            ("precision", f"{self.precision:.4f}", f"{self.w_precision:.4f}"),
            ("recall", f"{self.recall:.4f}", f"{self.w_recall:.4f}"),
            ("f-measure", f"{self.f_measure:.4f}", f"{self.w_f_measure:.4f}"),
            ("TP / FP / FN", f"{self.tp} / {self.fp} / {self.fn}",
             f"{self.w_tp:.3f} / {self.w_fp:.3f} / {self.w_fn:.3f}"),
        ]
        width = max(len(r[0]) for r in rows)
        out = [f"{a:<{width}}  {b:>18}  {c:>24}" for a, b, c in rows]
        out.append("")
        out.append(f"consistencies: predicted {self.k_pred}, true {self.k_true}")
        out.append(f"cluster accuracy: {self.cluster_accuracy:.4f}")
        for cid, count, weight in self.per_consistency:
            out.append(f"  consistency {cid}: N={count} w={weight:.4f}")
        out.append(f"  outlier weight: {self.w_outlier:.4f}")
        return "\n".join(out)


def consistency_weights(truth_labels) -> Tuple[np.ndarray, float]:
    """Per-consistency weights softmax(-N_i / N_inlier) and the outlier weight max_i w_i."""
    labels = np.asarray(truth_labels, dtype=int)
    inliers = labels[labels >= 0]
    if inliers.size == 0:
        raise MetricError("weights are undefined without ground-truth inliers")
    counts = np.bincount(inliers)
    exps = np.exp(-counts / inliers.size)
    weights = exps / exps.sum()
    return weights, float(weights.max())


def _ratio(num: float, den: float, name: str, degenerate: List[str]) -> float:
    if den == 0:
        degenerate.append(name)
        return 0.0
    return num / den


def _f(p: float, r: float, name: str, degenerate: List[str], literal: bool) -> float:
    if p + r == 0:
        degenerate.append(name)
        return 0.0
    return (p * r if literal else 2.0 * p * r) / (p + r)


def _cluster_accuracy(pred: np.ndarray, truth: np.ndarray, degenerate: List[str]) -> float:
    clustered = (pred >= 0) & (truth >= 0)
    if not clustered.any():
        degenerate.append("cluster_accuracy")
        return 0.0
    hits = 0
    for k in np.unique(pred[clustered]):
        owners = Counter(truth[clustered & (pred == k)].tolist())
        # ties go to the smallest consistency id
        top = max(owners.values())
        majority = min(cid for cid, n in owners.items() if n == top)
        hits += owners[majority]
    return hits / int(clustered.sum())


def weighted_prf(result: MatchResult, truth: Mapping[int, int], paper_literal_f: bool = False) -> EvalReport:
    """Score ``result`` against ground-truth labels keyed by correspondence index.

    Correspondences whose truth is unknown are left out of every count.
    """
    pred_map = result.label_map()
    missing = [idx for idx in truth if idx not in pred_map]
    if missing:
        raise MetricError(f"result has no label for correspondence {missing[0]}")

    scored = [(idx, label) for idx, label in truth.items() if label != UNKNOWN]
    truth_arr = np.array([label for _, label in scored], dtype=int)
    pred_arr = np.array([pred_map[idx] for idx, _ in scored], dtype=int)
    weights, w_outlier = consistency_weights(truth_arr)

    pred_in = pred_arr != OUTLIER
    true_in = truth_arr >= 0
    tp_mask, fp_mask, fn_mask = pred_in & true_in, pred_in & ~true_in, ~pred_in & true_in
    tp, fp, fn = int(tp_mask.sum()), int(fp_mask.sum()), int(fn_mask.sum())
    w_tp = float(np.sum(weights[truth_arr[tp_mask]]))
    w_fn = float(np.sum(weights[truth_arr[fn_mask]]))
    w_fp = fp * w_outlier

    degenerate: List[str] = []
    precision = _ratio(tp, tp + fp, "P", degenerate)
    recall = _ratio(tp, tp + fn, "R", degenerate)
    w_precision = _ratio(w_tp, w_tp + w_fp, "W-P", degenerate)
    w_recall = _ratio(w_tp, w_tp + w_fn, "W-R", degenerate)
    f_measure = _f(precision, recall, "F", degenerate, paper_literal_f)
    w_f_measure = _f(w_precision, w_recall, "W-F", degenerate, paper_literal_f)

    counts = np.bincount(truth_arr[true_in])
    report = EvalReport(
        precision=precision, recall=recall, f_measure=f_measure,
        w_precision=w_precision, w_recall=w_recall, w_f_measure=w_f_measure,
        per_consistency=tuple((k, int(counts[k]), float(weights[k])) for k in range(len(weights))),
        w_outlier=w_outlier,
        tp=tp, fp=fp, fn=fn, w_tp=w_tp, w_fp=w_fp, w_fn=w_fn,
        k_pred=result.num_clusters, k_true=len(weights),
        cluster_accuracy=_cluster_accuracy(pred_arr, truth_arr, degenerate),
        degenerate=tuple(degenerate),
    )
    if degenerate:
        logger.warning("Degenerate metrics: %s", ", ".join(degenerate))
    return report


def evaluate(result: MatchResult, cset: CorrespondenceSet, paper_literal_f: bool = False) -> EvalReport:
    if not cset.has_truth:
        raise MetricError("correspondence set carries no ground truth")
    truth = dict(zip(cset.indices.tolist(), cset.truth_labels().tolist()))
    return weighted_prf(result, truth, paper_literal_f)
