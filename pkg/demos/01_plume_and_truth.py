"""
A plume over the survey area and its true danger map
====================================================

A ground-level source sits in the lower part of the 200 x 100 m area and
the wind blows towards +y. Every 1 m box whose peak concentration reaches
the danger threshold is labelled unsafe.
"""
import numpy as np

from plumesurvey import ConcentrationField, DangerThreshold, PlumeSource, Region
from plumesurvey.plume_field import box_maxima, ground_truth_labels

region = Region(0, 0, 200, 100)
field = ConcentrationField(PlumeSource((90.3, 20.7)))
threshold = DangerThreshold(0.2)

truth = ground_truth_labels(field, region, threshold)
print(f"{truth.n_unsafe} of {region.n_boxes} boxes are unsafe")

rows, cols = np.nonzero(truth.labels)
print(f"unsafe footprint: x {cols.min()}..{cols.max() + 1} m, y {rows.min()}..{rows.max() + 1} m")

# peak values fall off quickly downwind
peaks = box_maxima(field, region)
for y in (25, 40, 60, 80):
    print(f"  y = {y:3d} m: strongest box {peaks[y].max():.3f}")

# coarse picture, 4 m per character, north up
print()
coarse = truth.labels.reshape(25, 4, 50, 4).any(axis=(1, 3))
for line in coarse[::-1]:
    print("".join("#" if c else "." for c in line))
