"""
Which representation generalizes best, and where
================================================

Around the start point of a sine demonstration, every grid point gets the
best of three representations (elastic map, DMP, Laplacian editing) under
the discrete Frechet similarity.
"""

from skillforge.corpus import skill
from skillforge.framework import RegionSpec, build_region, select

demo = skill("sine", 100)
region = build_region(demo, RegionSpec(half_extents=(0.3, 0.3), resolution=7))

short = {"elastic_map": "E", "dmp": "D", "lte": "L"}
print("best representation per grid point (rows: x, columns: y), lower case = outside")
for i in range(7):
    row = []
    for j in range(7):
        k = i * 7 + j
        c = short[region.best[k]]
        row.append(c if region.inside[k] else c.lower())
    print(" ".join(row))

print("at the demonstrated start:", select(region, demo.points[0]))
print("at a shifted start:      ", select(region, demo.points[0] + [0.25, -0.25]))
