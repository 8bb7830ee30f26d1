"""Nearest-rotation projection and the surrogate for the geodesic loss.

Computing the exact geodesic distance needs an iterative logarithm, but
projecting onto SO(3) has a closed form via the SVD.  The surrogate loss
theta^p + lambda * ||G - P||^2 uses that projection twice: the angle of
the projected rotation plus the squared projection residual.  This script
compares the surrogate against the exact loss along a one-parameter family.
"""

import numpy as np

from liegdt import (
    Homography,
    gdt_loss_exact,
    project_so3,
    rotation_angle,
    surrogate_loss,
)

rng = np.random.default_rng(1)

# for a matrix already in SO(3) the projection is the identity map
from liegdt import TangentVector, riem_exp_identity

skew = rng.standard_normal((3, 3))
skew = skew - skew.T
rot = riem_exp_identity(TangentVector(0.7 * skew / np.linalg.norm(skew)))
p = project_so3(rot)
print("projection of a rotation is itself:",
      f"{np.linalg.norm(p.m - rot.m):.2e}")
print("its angle:", round(rotation_angle(p), 6))

# perturb away from the group of rotations and watch the residual grow
print("\n  eps    theta    residual^2   surrogate   exact")
t = Homography.identity()
for eps in (0.0, 0.05, 0.1, 0.2, 0.4):
    m = rot.m + eps * rng.standard_normal((3, 3))
    that = Homography(m)
    res = surrogate_loss(t, that)
    exact = gdt_loss_exact(t, that)
    print(f"  {eps:.2f}   {res.theta:.4f}   {res.residual_sq:.6f}"
          f"     {res.loss:.4f}    {exact:.4f}")

# the two losses rank candidate predictions the same way near the truth,
# which is what the trainer needs from the cheap surrogate
t = Homography(np.eye(3) + 0.2 * rng.standard_normal((3, 3)))
cands = []
for _ in range(6):
    cand = Homography(t.m + 0.15 * rng.standard_normal((3, 3)))
    cands.append((surrogate_loss(t, cand).loss, gdt_loss_exact(t, cand)))
cands.sort()
print("\nsurrogate vs exact on candidates sorted by surrogate:")
for s_val, e_val in cands:
    print(f"  surrogate {s_val:.4f}   exact {e_val:.4f}")
