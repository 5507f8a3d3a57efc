"""
Projecting a cuboid and measuring overlap
=========================================

A car is a box with a size, a bottom-center location and a heading.
This script projects one onto a KITTI-like image plane, then compares
the exact volume IoU against a brute-force sampling estimate.
"""

import math

import numpy as np

from monofit3d import CameraIntrinsics, Cuboid3D, iou_3d, project_cuboid
from monofit3d.geometry import projected_hull_bbox
from monofit3d.overlap import bev_iou, iou_3d_monte_carlo

# The P2 matrix of a typical KITTI frame.
cam = CameraIntrinsics(np.array([
    [721.5377, 0.0, 609.5593, 44.85728],
    [0.0, 721.5377, 172.854, 0.2163791],
    [0.0, 0.0, 1.0, 0.002745884],
]))

# Width, height, length in meters; location is the bottom-face center.
car = Cuboid3D(1.6, 1.5, 3.9, (2.0, 1.6, 15.0), yaw=0.4)
proj = project_cuboid(car, cam)
print("projected corners (u, v):")
print(np.round(proj.vertices, 1))
print("tight 2D box:", np.round(projected_hull_bbox(proj), 1))

# Move the car half a meter sideways and a meter back, turn it a bit.
other = Cuboid3D(1.6, 1.5, 3.9, (2.5, 1.6, 16.0), yaw=0.55)
print(f"3D IoU = {iou_3d(car, other):.4f}, bird's-eye IoU = {bev_iou(car, other):.4f}")
print(f"sampling estimate (1e6 points) = {iou_3d_monte_carlo(car, other, 10**6):.4f}")

# Two equal squares, one turned by 45 degrees about the shared center,
# overlap in a regular octagon; the IoU works out to 1/sqrt(2).
a = Cuboid3D(2.0, 1.0, 2.0, (0.0, 0.0, 0.0), 0.0)
b = Cuboid3D(2.0, 1.0, 2.0, (0.0, 0.0, 0.0), math.pi / 4)
print(f"45-degree case: {iou_3d(a, b):.12f} vs {1 / math.sqrt(2):.12f}")
