"""
Scoring a detector
==================

Average precision under 2D, bird's-eye and 3D overlap, orientation
similarity and the mean size error, on a tiny hand-made result set.
"""

from dataclasses import replace

from monofit3d import Cuboid3D
from monofit3d.evaluation import evaluate, evaluation_report, format_report_csv, MatchConfig
from monofit3d.geometry import Detection2D
from monofit3d.kitti import label_from_cuboid


def car(x, z, yaw=0.0, alpha=0.0, score=None):
    u = 609.6 + 721.5 * x / z
    box = Detection2D(u - 1900 / z, 172.8, u + 1900 / z, 172.8 + 1600 / z)
    return label_from_cuboid(Cuboid3D(1.6, 1.5, 3.9, (x, 1.6, z), yaw), box, alpha, score=score)


truth = [car(-4.0, 12.0, 0.3, 0.6), car(3.0, 20.0, -1.2, -1.0), car(0.5, 30.0, 1.5, 1.5)]
results = [
    replace(truth[0], location=(-3.9, 1.6, 12.3)).with_score(0.95),  # good
    replace(truth[1], location=(3.0, 1.6, 21.5), alpha=-0.6).with_score(0.80),  # far off in depth
    car(8.0, 15.0, score=0.40),  # nothing there
]
frames = [(results, truth)]

for kind, thr in (("2d", 0.7), ("bev", 0.5), ("3d", 0.5), ("3d", 0.7)):
    res = evaluate(frames, MatchConfig(kind, thr, "moderate"))
    print(f"{kind:>3} @ {thr}: AP = {res.ap:.3f}, AOS = {res.aos:.3f}")

print()
print(format_report_csv(evaluation_report(frames)))
