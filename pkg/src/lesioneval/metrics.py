"""Overlap, surface-distance and detection metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .components import Lesion, LesionSet
from .errors import EmptySet
from .matching import MatchSet
from .volume import Volume

HD95_VARIANTS = ("pooled", "max-of-directed")


@dataclass(frozen=True)
class LesionPairMetrics:
    gt_id: int
    pred_id: int
    dice: float
    iou: float
    hd95_mm: float
    gt_vox: int
    pred_vox: int
    volume_error_rel: float  # (pred - gt) / gt
    size_ratio: float  # pred / gt


@dataclass(frozen=True)
class DetectionCounts:
    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float | None
    f1: float | None


@dataclass(frozen=True)
class ImageMetrics:
    voxel_dice: float | None
    voxel_hd95_mm: float | None
    assd_mm: float | None
    gt_total_vox: int
    pred_total_vox: int


def dice(a: set | frozenset, b: set | frozenset) -> float | None:
    """2|A∩B| / (|A|+|B|); None when both sets are empty."""
    total = len(a) + len(b)
    if total == 0:
        return None
    return 2.0 * len(a & b) / total


def _dice_counts(inter: int, na: int, nb: int) -> float | None:
    total = na + nb
    if total == 0:
        return None
    return 2.0 * inter / total


def _voxels_to_mask(voxels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pack a voxel list into a tight zero-padded sub-array; returns (mask, origin)."""
    lo = voxels.min(axis=0)
    shape = voxels.max(axis=0) - lo + 1
    mask = np.zeros(shape, dtype=bool)
    rel = voxels - lo
    mask[rel[:, 0], rel[:, 1], rel[:, 2]] = True
    return mask, lo


_FACE_STRUCT = ndimage.generate_binary_structure(3, 1)


def _surface_from_mask(mask: np.ndarray) -> np.ndarray:
    """(n, 3) coordinates of voxels with at least one 6-neighbor outside."""
    eroded = ndimage.binary_erosion(mask, structure=_FACE_STRUCT, border_value=0)
    return np.argwhere(mask & ~eroded)


def surface_voxels(voxels: np.ndarray, dims: tuple | None = None) -> np.ndarray:
    """Border voxels of a set: those with a 6-neighbor outside the set.

    The grid boundary counts as outside, so a voxel on the edge of ``dims``
    is always on the surface.
    """
    voxels = np.asarray(voxels)
    if len(voxels) == 0:
        raise EmptySet("surface of an empty voxel set")
    mask, lo = _voxels_to_mask(voxels)
    return _surface_from_mask(mask) + lo


def _directed_distances(
    a_surf: np.ndarray, b_surf: np.ndarray, spacing: tuple
) -> np.ndarray:
    """Distance in mm from each surface voxel of A to the nearest of B."""
    sp = np.asarray(spacing, dtype=float)
    tree = cKDTree(b_surf * sp)
    d, _ = tree.query(a_surf * sp, k=1)
    return np.atleast_1d(d)


def _pooled_surface_distances(
    a: np.ndarray, b: np.ndarray, spacing: tuple
) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("surface distance on an empty voxel set")
    a_surf = surface_voxels(a)
    b_surf = surface_voxels(b)
    return (
        _directed_distances(a_surf, b_surf, spacing),
        _directed_distances(b_surf, a_surf, spacing),
    )


def hd95(
    a: np.ndarray, b: np.ndarray, spacing: tuple, variant: str = "pooled"
) -> float:
    """95th percentile (linear interpolation) of symmetric surface distances."""
    if variant not in HD95_VARIANTS:
        raise ValueError(f"unknown hd95 variant {variant!r}")
    d_ab, d_ba = _pooled_surface_distances(a, b, spacing)
    if variant == "pooled":
        return float(np.percentile(np.concatenate([d_ab, d_ba]), 95))
    return float(max(np.percentile(d_ab, 95), np.percentile(d_ba, 95)))


def assd(a: np.ndarray, b: np.ndarray, spacing: tuple) -> float:
    """Mean of the pooled symmetric surface-distance multiset."""
    d_ab, d_ba = _pooled_surface_distances(a, b, spacing)
    return float(np.concatenate([d_ab, d_ba]).mean())


def compute_lesion_metrics(
    g: Lesion,
    p: Lesion,
    spacing: tuple,
    hd95_variant: str = "pooled",
) -> LesionPairMetrics:
    """All per-pair metrics for a matched GT/prediction lesion pair."""
    sg = {tuple(v) for v in g.voxels}
    sp = {tuple(v) for v in p.voxels}
    inter = len(sg & sp)
    union = len(sg) + len(sp) - inter
    iou = inter / union if union else 0.0
    return LesionPairMetrics(
        gt_id=g.id,
        pred_id=p.id,
        dice=_dice_counts(inter, len(sg), len(sp)),
        iou=iou,
        hd95_mm=hd95(g.voxels, p.voxels, spacing, hd95_variant),
        gt_vox=g.volume_vox,
        pred_vox=p.volume_vox,
        volume_error_rel=(p.volume_vox - g.volume_vox) / g.volume_vox,
        size_ratio=p.volume_vox / g.volume_vox,
    )


def detection_rates(
    tp: int, fp: int, fn: int
) -> tuple[float | None, float | None, float | None]:
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def compute_instance_metrics(
    gt: LesionSet, pred: LesionSet, m: MatchSet
) -> DetectionCounts:
    """Lesion-level TP/FP/FN and the derived detection rates."""
    tp = len(m.matches)
    fn = len(m.unmatched_gt)
    fp = len(m.unmatched_pred)
    precision, recall, f1 = detection_rates(tp, fp, fn)
    return DetectionCounts(tp, fp, fn, precision, recall, f1)


def compute_image_metrics(
    gt: Volume,
    pred: Volume,
    hd95_variant: str = "pooled",
    spacing: tuple | None = None,
) -> ImageMetrics:
    """Voxel-wise Dice plus whole-foreground HD95 and ASSD.

    Distances are None when either foreground is empty; Dice is None only
    when both are empty.
    """
    sp = spacing if spacing is not None else gt.spacing
    g = gt.data != 0
    p = pred.data != 0
    n_g = int(g.sum())
    n_p = int(p.sum())
    voxel_dice = _dice_counts(int((g & p).sum()), n_g, n_p)
    voxel_hd95 = assd_mm = None
    if n_g > 0 and n_p > 0:
        g_surf = _surface_from_mask(g)
        p_surf = _surface_from_mask(p)
        d_gp = _directed_distances(g_surf, p_surf, sp)
        d_pg = _directed_distances(p_surf, g_surf, sp)
        pooled = np.concatenate([d_gp, d_pg])
        if hd95_variant == "pooled":
            voxel_hd95 = float(np.percentile(pooled, 95))
        else:
            voxel_hd95 = float(max(np.percentile(d_gp, 95), np.percentile(d_pg, 95)))
        assd_mm = float(pooled.mean())
    return ImageMetrics(voxel_dice, voxel_hd95, assd_mm, n_g, n_p)
