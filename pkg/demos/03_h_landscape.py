"""Scan h^k over the unit square for n = 3 and write the grid as CSV.

The output files can be fed to any plotting tool.  The peak sits on the
diagonal at k/n.
"""
import sys
from pathlib import Path

import numpy as np

from crround.exact import grid_maximize, h_values
from crround.scheme import alpha

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")
r = 300
t = np.linspace(0, 1, r + 1)
X1, X2 = np.meshgrid(t, t, indexing="ij")
points = np.column_stack([X1.ravel(), X2.ravel()])

for k in (1, 2):
    H = h_values(points, k).reshape(X1.shape)
    path = out_dir / f"h_landscape_n3_k{k}.csv"
    np.savetxt(path, np.column_stack([X1.ravel(), X2.ravel(), H.ravel()]),
               delimiter=",", header="x1,x2,h", comments="", fmt="%.6f")
    point, value = grid_maximize(lambda P, k=k: h_values(P, k), 2, r, snap=3)
    print(f"k={k}: peak at {point} value {value:.6f}, alpha(k,3) = {alpha(k, 3):.6f}; wrote {path}")
