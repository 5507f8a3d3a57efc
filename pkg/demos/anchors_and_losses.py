"""
Anchor boxes for size and heading
=================================

Box sizes cluster tightly per class, so a regressor predicts a confidence
per anchor plus a small offset from it. Anchors come from k-means over the
training sizes; headings use circular k-means.
"""

import numpy as np

from monofit3d.anchors import (
    AnglePrediction,
    best_anchor_dimension,
    DimensionPrediction,
    decode_dimension,
    decode_orientation,
    dimension_loss,
    format_anchors,
    kmeans_angles,
    kmeans_dimensions,
    orientation_loss,
)

rng = np.random.default_rng(2)
# Three rough size families: compact cars, sedans, vans (w, h, l).
sizes = np.concatenate([
    rng.normal([1.6, 1.5, 3.6], 0.08, (300, 3)),
    rng.normal([1.8, 1.5, 4.6], 0.08, (300, 3)),
    rng.normal([1.9, 2.1, 5.2], 0.10, (100, 3)),
])
dims = kmeans_dimensions(sizes, k=4, seed=0)
print(format_anchors(dims))

# Most cars drive along the road or against it.
headings = np.concatenate([rng.normal(1.57, 0.2, 300), rng.normal(-1.57, 0.2, 300)])
angles = kmeans_angles(headings, k=2, seed=0)
print(format_anchors(angles))

gt = np.array([1.75, 1.52, 4.4])
pred = DimensionPrediction(np.array([0.1, 2.0, -1.0, 0.3]), np.zeros((4, 3)))
print("decoded size:", np.round(decode_dimension(pred, dims), 3))
print(f"dimension loss with zero offsets: {dimension_loss(pred, dims, gt):.4f}")
# The loss charges the anchor that fits the true size best.
best = best_anchor_dimension(dims, gt)
offsets = np.zeros((4, 3))
offsets[best] = gt - dims.anchors[best]
exact = DimensionPrediction(pred.confidences, offsets)
print(f"dimension loss with exact offsets: {dimension_loss(exact, dims, gt):.4f} "
      "(only the classification part is left)")

apred = AnglePrediction(np.array([1.5, -0.5]), np.array([0.05, 0.0]))
print(f"decoded heading {decode_orientation(apred, angles):.3f} rad, "
      f"loss against 1.6 rad: {orientation_loss(apred, angles, 1.6):.4f}")
