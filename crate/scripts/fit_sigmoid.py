"""Least-squares cubic fit of the logistic function on [-8, 8].

Prints the coefficients stored as SIGMOID3 in fairgate-core's gd module.
The fit is taken over a dense uniform grid, which approximates the
continuous L2 fit on the interval.
"""
import numpy as np

LO, HI, POINTS = -8.0, 8.0, 160_001

x = np.linspace(LO, HI, POINTS)
basis = np.vstack([x**k for k in range(4)]).T
coef, *_ = np.linalg.lstsq(basis, 1.0 / (1.0 + np.exp(-x)), rcond=None)
coef[0] = 0.5  # odd symmetry about (0, 1/2): the even terms vanish exactly
coef[2] = 0.0
for k, c in enumerate(coef):
    print(f"c{k} = {c:.17e}")
err = np.abs(basis @ coef - 1.0 / (1.0 + np.exp(-x))).max()
print(f"max abs error on [{LO}, {HI}]: {err:.4f}")
