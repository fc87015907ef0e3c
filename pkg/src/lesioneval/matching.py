"""Greedy one-to-one IoU matching between GT and predicted lesions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .components import Lesion, LesionSet

DEFAULT_TAU = 0.35


@dataclass(frozen=True)
class CandidatePair:
    gt_id: int
    pred_id: int
    iou: float


@dataclass(frozen=True)
class MatchSet:
    """One-to-one correspondence plus unmatched residues."""

    matches: list[tuple[int, int, float]]  # (gt_id, pred_id, iou), acceptance order
    unmatched_gt: list[int]  # false negatives
    unmatched_pred: list[int]  # false positives
    tau: float
    trace: list[str] = field(default_factory=list, repr=False)


def bbox_overlap(a: tuple, b: tuple) -> bool:
    """True iff the inclusive boxes intersect on all three axes."""
    (alo, ahi), (blo, bhi) = a, b
    return all(alo[i] <= bhi[i] and blo[i] <= ahi[i] for i in range(3))


def compute_iou(a: Lesion, b: Lesion) -> float:
    """|A ∩ B| / |A ∪ B| over the two voxel sets."""
    sa = {tuple(v) for v in a.voxels}
    sb = {tuple(v) for v in b.voxels}
    inter = len(sa & sb)
    union = len(sa) + len(sb) - inter
    return inter / union if union else 0.0


def generate_candidates(
    gt: LesionSet,
    pred: LesionSet,
    tau: float = DEFAULT_TAU,
    use_bbox_filter: bool = True,
) -> list[CandidatePair]:
    """All pairs with overlapping bounding boxes and IoU strictly above tau.

    The bbox check is a pure accelerator: disjoint boxes imply zero IoU, so
    disabling it (``use_bbox_filter=False``) must not change the result.
    """
    if not gt.lesions or not pred.lesions:
        return []
    n_pred = len(pred.lesions)
    pred_lo = np.array([l.bbox[0] for l in pred.lesions])
    pred_hi = np.array([l.bbox[1] for l in pred.lesions])
    pred_sizes = np.array([l.volume_vox for l in pred.lesions])
    label_map = pred.label_map

    out: list[CandidatePair] = []
    for g in gt.lesions:
        if use_bbox_filter:
            lo, hi = np.array(g.bbox[0]), np.array(g.bbox[1])
            ok = np.all((pred_lo <= hi) & (lo <= pred_hi), axis=1)
            cand_ids = np.nonzero(ok)[0] + 1
        else:
            cand_ids = np.arange(1, n_pred + 1)
        if len(cand_ids) == 0:
            continue
        vox = g.voxels
        hits = label_map[vox[:, 0], vox[:, 1], vox[:, 2]]
        inter = np.bincount(hits, minlength=n_pred + 1)
        for pid in cand_ids:
            i = int(inter[pid])
            union = g.volume_vox + int(pred_sizes[pid - 1]) - i
            iou = i / union if union else 0.0
            if iou > tau:
                out.append(CandidatePair(g.id, int(pid), iou))
    return out


def greedy_match(
    candidates: list[CandidatePair], trace: list[str] | None = None
) -> list[tuple[int, int, float]]:
    """Accept candidates in descending IoU order while both endpoints are free.

    Ties broken by (gt_id, pred_id) for platform-independent determinism.
    """
    ordered = sorted(candidates, key=lambda c: (-c.iou, c.gt_id, c.pred_id))
    used_gt: set[int] = set()
    used_pred: set[int] = set()
    matches: list[tuple[int, int, float]] = []
    for c in ordered:
        if c.gt_id in used_gt:
            reason = "skipped: gt locked"
        elif c.pred_id in used_pred:
            reason = "skipped: pred locked"
        else:
            used_gt.add(c.gt_id)
            used_pred.add(c.pred_id)
            matches.append((c.gt_id, c.pred_id, c.iou))
            reason = "accepted"
        if trace is not None:
            trace.append(f"G{c.gt_id} P{c.pred_id} iou={c.iou:.6f} {reason}")
    return matches


def match_lesions(
    gt: LesionSet,
    pred: LesionSet,
    tau: float = DEFAULT_TAU,
    with_trace: bool = False,
) -> MatchSet:
    """Full matching: candidates, greedy resolution, FP/FN residues."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must be in [0, 1), got {tau}")
    candidates = generate_candidates(gt, pred, tau)
    trace: list[str] = []
    matches = greedy_match(candidates, trace if with_trace else None)
    matched_gt = {m[0] for m in matches}
    matched_pred = {m[1] for m in matches}
    return MatchSet(
        matches=matches,
        unmatched_gt=[l.id for l in gt.lesions if l.id not in matched_gt],
        unmatched_pred=[l.id for l in pred.lesions if l.id not in matched_pred],
        tau=tau,
        trace=trace,
    )
