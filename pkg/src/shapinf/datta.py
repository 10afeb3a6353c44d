"""Flip-count influence in the style of Datta et al.

For every distinct observed feature vector and every feature, substitute
each domain value whose resulting vector was also observed, and count the
substitutions that change the predicted class. Ties in the predicted class
break toward the lowest class index, matching the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import Classifier
from .data import Dataset


@dataclass(frozen=True, eq=False)
class DattaResult:
    raw_counts: np.ndarray  # (k,) int64 flip counts
    values: np.ndarray  # (k,) float64 normalized counts
    normalization: int  # divisor applied to raw counts
    observed_set_size: int  # number of distinct observed vectors


def datta_influence(ds: Dataset, classifier: Classifier, normalize: bool = True) -> DattaResult:
    """Count class flips under single-feature substitutions.

    Membership is set-based: each distinct observed vector counts once no
    matter how often it occurs. With ``normalize`` the counts are divided
    by the number of distinct observed vectors; otherwise raw counts are
    returned.
    """
    schema = ds.schema
    observed = np.unique(ds.assignment_indices)
    sizes = schema.sizes_array()
    strides = schema.strides_array()
    codes = (observed[:, None] // strides[None, :]) % sizes[None, :]
    preds = np.argmax(classifier.predict_proba_batch(codes), axis=1)
    position = {int(idx): pos for pos, idx in enumerate(observed)}

    raw = np.zeros(schema.k, dtype=np.int64)
    for pos, idx in enumerate(observed):
        base_pred = preds[pos]
        for j in range(schema.k):
            own = codes[pos, j]
            for v in range(int(sizes[j])):
                # v == own contributes nothing; kept for clarity of the sum
                other = position.get(int(idx + (v - own) * strides[j]))
                if other is not None and preds[other] != base_pred:
                    raw[j] += 1

    divisor = int(observed.shape[0]) if normalize else 1
    return DattaResult(
        raw_counts=raw,
        values=raw / divisor,
        normalization=divisor,
        observed_set_size=int(observed.shape[0]),
    )
