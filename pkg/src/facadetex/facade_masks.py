"""Facade isolation from externally produced candidate instance masks.

Candidate masks arrive through a JSON manifest together with per-label
similarity scores (the mask generator and the scoring network run out of
process). The combination logic keeps masks whose best label is
"building facade" above a confidence threshold, subtracts eave masks,
drops small components, and smooths with opening + closing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, EmptyMaskError, ManifestError
from .imageproc import morphology, remove_small_components
from .imgio import load_mask

FACADE_LABEL = "building facade"
EAVE_LABEL = "building eave"


@dataclass
class LabeledMask:
    mask: np.ndarray              # bool
    label_scores: dict[str, float]

    def best_label(self) -> str | None:
        """Highest-scoring label; None on a tie (conservative discard)."""
        if not self.label_scores:
            return None
        best = max(self.label_scores.values())
        winners = [k for k, v in self.label_scores.items() if v == best]
        if len(winners) != 1:
            return None
        return winners[0]


def load_mask_manifest(path, image_shape: tuple[int, int] | None = None,
                       top_k: int = 0) -> list[LabeledMask]:
    """Read a manifest JSON; top_k > 0 keeps only the first top_k entries."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    entries = manifest.get("masks", [])
    if top_k > 0:
        entries = entries[:top_k]

    masks = []
    for index, entry in enumerate(entries):
        mask_path = path.parent / entry.get("mask", "")
        if not mask_path.is_file():
            raise ManifestError(f"entry {index}: mask file {mask_path} not found",
                                entry_index=index)
        mask = load_mask(mask_path)
        if image_shape is not None and mask.shape != tuple(image_shape):
            raise ManifestError(
                f"entry {index}: mask is {mask.shape}, image is {tuple(image_shape)}",
                entry_index=index)
        scores = entry.get("scores", {})
        for label, value in scores.items():
            if not 0.0 <= float(value) <= 1.0:
                raise ManifestError(
                    f"entry {index}: score {value} for {label!r} outside [0, 1]",
                    entry_index=index)
        if masks and mask.shape != masks[0].mask.shape:
            raise ManifestError(
                f"entry {index}: mask shape {mask.shape} differs from entry 0",
                entry_index=index)
        masks.append(LabeledMask(mask=mask, label_scores={k: float(v) for k, v in scores.items()}))
    return masks


def filter_facade_masks(masks: list[LabeledMask], threshold: float = 0.05
                        ) -> tuple[list[LabeledMask], list[LabeledMask]]:
    """Split into (facade set, eave set) by the argmax label rule."""
    facades, eaves = [], []
    for labeled in masks:
        best = labeled.best_label()
        if best == FACADE_LABEL and labeled.label_scores[best] > threshold:
            facades.append(labeled)
        elif best == EAVE_LABEL:
            eaves.append(labeled)
    return facades, eaves


def combine_and_clean(facades: list[LabeledMask], eaves: list[LabeledMask],
                      min_area: int = 2000, kernel: int = 25) -> np.ndarray:
    """OR facades, subtract OR of eaves, drop small components, open + close."""
    if not facades:
        raise EmptyMaskError("no facade masks to combine")
    combined = np.zeros_like(facades[0].mask, dtype=bool)
    for labeled in facades:
        combined |= labeled.mask
    for labeled in eaves:
        combined &= ~labeled.mask
    combined = remove_small_components(combined, min_area)
    combined = morphology(combined, "open", (kernel, kernel))
    return morphology(combined, "close", (kernel, kernel))


def apply_mask(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-pixel multiply; masked-out pixels become 0."""
    image = np.asarray(image)
    mask = np.asarray(mask, dtype=bool)
    if image.shape[:2] != mask.shape:
        raise ArgumentError(f"image {image.shape[:2]} vs mask {mask.shape}")
    if image.ndim == 3:
        return image * mask[:, :, None]
    return image * mask
