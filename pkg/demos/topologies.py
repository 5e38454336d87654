"""
Benchmark topologies and their parameters
=========================================

Every protocol run is parametrized by the largest bounded face Z, the
largest degree Y and the diameter d.  This script builds the generator
families and prints those numbers together with the 4-connectivity verdict.
"""

from planarbcast.graph import (compute_Y, compute_Z, diameter, enumerate_polygons,
                               find_small_cut, generate, grid_patch, torus, trace_faces)

# The capped cylinders: quad cells ("quadrangulation"), all cells split
# ("triangulation"), or a random mix controlled by `diagonals`.
families = [
    generate("quadrangulation", {"n": 8}),
    generate("quadrangulation", {"n": 8, "diagonals": 0.3}, seed=1),
    generate("triangulation", {"w": 8, "h": 8}),
    generate("quad_annulus", {"w": 16, "h": 6}),
    generate("octahedron"),
    torus(8, 8),
]

print(f"{'topology':28} {'n':>4} {'E':>4} {'Z':>2} {'Y':>2} {'d':>3} polygons")
for t in families:
    print(f"{t.label:28} {t.n:4} {len(t.edges):4} {compute_Z(t):2} {compute_Y(t):2} "
          f"{diameter(t):3} {len(enumerate_polygons(t))}")

# Faces come from the rotation system: following "next arc clockwise" from
# every directed edge visits each arc exactly once, and Euler's formula holds.
q = families[0]
faces = trace_faces(q)
print("\nV - E + F =", q.n - len(q.edges) + len(faces))

# A planar grid patch has corner nodes of degree 2, so it is not 4-connected;
# the cut search returns a witness.
g = grid_patch(4, 4)
print("grid(4,4) small cut:", sorted(find_small_cut(g, 4)))
