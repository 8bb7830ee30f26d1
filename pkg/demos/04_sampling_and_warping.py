"""Sampling transformations and rendering the synthetic image pairs.

Each training sample is a random grayscale image (a bright anchor blob
left of center, a few dim clutter blobs, one tapered bar) plus a random
projective transformation built from jittered corners, a scale, and a
quarter turn.  The warped image and the unit-frame truth matrix form one
supervised pair.  Run with an output directory to dump PGM files:

    python3 demos/04_sampling_and_warping.py /tmp/samples
"""

import sys

import numpy as np

from liegdt import (
    Rng,
    dump_sample,
    make_synthetic_image,
    params_to_homography,
    sample_params,
    to_unit_frame,
    warp_image,
    write_pgm,
)

root = Rng(seed=42)
size = 32

for i in range(3):
    params = sample_params(root.derive(2, i))
    h = params_to_homography(params, size, size)
    print(f"sample {i}: quarter turn {params.rotation_quarter}, "
          f"scale {params.scale:.3f}, "
          f"max corner offset {np.max(np.abs(params.corner_offsets)):.3f}")
    print("  pixel-frame matrix, det =", round(float(np.linalg.det(h.m)), 10))
    print(np.round(h.m, 3))
    u = to_unit_frame(h, size, size)
    print("  unit-frame entries stay O(1): max |entry| =",
          round(float(np.max(np.abs(u.m))), 3))

# render one pair and show a crude ASCII view of both images
rng_img = root.derive(1, 0)
img = make_synthetic_image(rng_img, size, size)
params = sample_params(root.derive(2, 0))
h = params_to_homography(params, size, size)
warped = warp_image(img, h)

ramp = " .:-=+*#%@"


def ascii_view(image, step=2):
    rows = []
    for r in range(0, image.height, step):
        row = image.pixels[r, ::step]
        rows.append("".join(ramp[min(int(v * 9.999), 9)] for v in row))
    return rows


print(f"\noriginal vs warped (quarter turn {params.rotation_quarter}):")
for a, b in zip(ascii_view(img), ascii_view(warped)):
    print(" ", a, "   ", b)

if len(sys.argv) > 1:
    out = sys.argv[1]
    import os

    os.makedirs(out, exist_ok=True)
    dump_sample(os.path.join(out, "sample_0000"), img, params)
    write_pgm(warped, os.path.join(out, "sample_0000_warped.pgm"))
    print("\nwrote PGM dumps under", out)
