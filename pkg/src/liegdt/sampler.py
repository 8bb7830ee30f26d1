"""Random homography sampling and synthetic grayscale image warping.

Transformations are drawn desk-scale: per-corner offsets up to 12.5% of the
image size, isotropic scale in [0.8, 1.2], and a quarter-turn rotation, all
about the image center.  The corner perturbation is recovered as a 4-point
direct linear transform, composed after scale and rotation, giving the full
8-parameter family.  Images are synthetic blob-and-bar patterns with enough
oriented structure that a regressor can tell rotations apart.

Randomness comes from a counter-based Philox generator keyed by
``(seed, domain << 32 | index)``; any (domain, index) substream can be
re-derived independently, so minibatch elements do not depend on draw order.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SingularMatrixError
from .geometry import Homography, normalize_unit_det

__all__ = [
    "Rng",
    "TransformParams",
    "GrayImage",
    "sample_params",
    "params_to_homography",
    "unit_frame_matrix",
    "to_unit_frame",
    "warp_image",
    "make_synthetic_image",
    "write_pgm",
    "read_pgm",
    "dump_sample",
]

CORNER_OFFSET_MAX = 0.125
SCALE_RANGE = (0.8, 1.2)

# cos/sin lookup for exact quarter turns (np.cos(np.pi/2) is not exactly 0)
_QUARTER_COS = (1.0, 0.0, -1.0, 0.0)
_QUARTER_SIN = (0.0, 1.0, 0.0, -1.0)


class Rng:
    """Seeded counter-based random stream (Philox 4x64).

    ``derive(domain, index)`` opens an independent substream keyed by
    ``(seed, domain << 32 | index)``; equal keys always reproduce the same
    draws regardless of what other streams were consumed.
    """

    def __init__(self, seed: int, domain: int = 0, index: int = 0):
        self.seed = int(seed)
        self.domain = int(domain)
        self.index = int(index)
        key = np.array(
            [self.seed & 0xFFFFFFFFFFFFFFFF, (self.domain << 32) | (self.index & 0xFFFFFFFF)],
            dtype=np.uint64,
        )
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, domain: int, index: int = 0) -> "Rng":
        return Rng(self.seed, domain=domain, index=index)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size=size)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size=size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size=size)


@dataclass(frozen=True)
class TransformParams:
    """One sampled transformation: 4 corner offsets, a scale, a quarter turn.

    Offsets are fractions of image width (x) and height (y), each in
    [-0.125, 0.125]; scale lies in [0.8, 1.2]; rotation_quarter counts 90
    degree turns counterclockwise.
    """

    corner_offsets: np.ndarray  # shape (4, 2), (dx, dy) rows
    scale: float
    rotation_quarter: int

    def __post_init__(self):
        off = np.asarray(self.corner_offsets, dtype=float)
        if off.shape != (4, 2):
            raise ValueError(f"corner_offsets must be 4x2, got {off.shape}")
        if np.any(np.abs(off) > CORNER_OFFSET_MAX + 1e-12):
            raise ValueError("corner offsets outside [-0.125, 0.125]")
        if not SCALE_RANGE[0] - 1e-12 <= self.scale <= SCALE_RANGE[1] + 1e-12:
            raise ValueError(f"scale {self.scale} outside {SCALE_RANGE}")
        if self.rotation_quarter not in (0, 1, 2, 3):
            raise ValueError("rotation_quarter must be in {0, 1, 2, 3}")
        off.setflags(write=False)
        object.__setattr__(self, "corner_offsets", off)
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "rotation_quarter", int(self.rotation_quarter))

    def to_dict(self) -> dict:
        return {
            "corner_offsets": self.corner_offsets.tolist(),
            "scale": self.scale,
            "rotation_quarter": self.rotation_quarter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformParams":
        return cls(
            corner_offsets=np.asarray(d["corner_offsets"], dtype=float),
            scale=float(d["scale"]),
            rotation_quarter=int(d["rotation_quarter"]),
        )


class GrayImage:
    """Grayscale image: 2D float array, values in [0, 1], row-major."""

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        px = np.asarray(pixels, dtype=float)
        if px.ndim != 2:
            raise ValueError(f"pixels must be 2D, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixel values must be finite")
        if px.size and (px.min() < -1e-12 or px.max() > 1.0 + 1e-12):
            raise ValueError("pixel values must lie in [0, 1]")
        px = np.clip(px, 0.0, 1.0)
        px.setflags(write=False)
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


def sample_params(rng: Rng) -> TransformParams:
    """Draw one TransformParams uniformly over its documented ranges."""
    offsets = rng.uniform(-CORNER_OFFSET_MAX, CORNER_OFFSET_MAX, size=(4, 2))
    scale = float(rng.uniform(*SCALE_RANGE))
    quarter = int(rng.integers(0, 4))
    return TransformParams(corner_offsets=offsets, scale=scale, rotation_quarter=quarter)


def _center_matrix(width, height, core):
    """Conjugate a 2D linear ``core`` (2x2) to act about the image center."""
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    m = np.eye(3)
    m[:2, :2] = core
    m[0, 2] = cx - core[0, 0] * cx - core[0, 1] * cy
    m[1, 2] = cy - core[1, 0] * cx - core[1, 1] * cy
    return m


def _dlt(src, dst):
    """Homography mapping 4 source points to 4 targets (direct linear transform).

    Points are conditioned by translating centroids to the origin and scaling
    the mean radius to sqrt(2) before building the 8x9 system; the solution is
    the right singular vector of the smallest singular value.
    """

    def conditioner(pts):
        c = pts.mean(axis=0)
        d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
        s = np.sqrt(2.0) / max(d, 1e-12)
        return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])

    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    ts, td = conditioner(src), conditioner(dst)
    sh = (ts @ np.column_stack([src, np.ones(4)]).T).T
    dh = (td @ np.column_stack([dst, np.ones(4)]).T).T

    a = np.zeros((8, 9))
    for i in range(4):
        x, y = sh[i, 0], sh[i, 1]
        u, v = dh[i, 0], dh[i, 1]
        a[2 * i] = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]
        a[2 * i + 1] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u]
    _, s, vt = np.linalg.svd(a)
    if s[7] < 1e-10 * s[0]:
        raise SingularMatrixError("4-point correspondence is degenerate (collinear corners)")
    h = vt[8].reshape(3, 3)
    return np.linalg.inv(td) @ h @ ts


def params_to_homography(p: TransformParams, width: int, height: int) -> Homography:
    """Build the full transformation for an image of the given size.

    Scale and the quarter-turn rotation act about the image center; the
    corner offsets (in pixels: fraction times width or height) are then
    absorbed by a 4-point direct linear transform from the scaled-rotated
    corners to their translated positions.  The composite is normalised to
    unit determinant.
    """
    if width < 2 or height < 2:
        raise ValueError("image dimensions must be at least 2")
    c, s = _QUARTER_COS[p.rotation_quarter], _QUARTER_SIN[p.rotation_quarter]
    h_scale = _center_matrix(width, height, np.array([[p.scale, 0.0], [0.0, p.scale]]))
    h_rot = _center_matrix(width, height, np.array([[c, -s], [s, c]]))

    corners = np.array(
        [[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]]
    )
    pre = h_rot @ h_scale
    moved_h = (pre @ np.column_stack([corners, np.ones(4)]).T).T
    moved = moved_h[:, :2] / moved_h[:, 2:3]
    shifted = moved + p.corner_offsets * np.array([width, height])

    h_dlt = _dlt(moved, shifted)
    return normalize_unit_det(h_dlt @ pre)


def unit_frame_matrix(width: int, height: int) -> np.ndarray:
    """Affine change of chart sending the pixel box to [-1, 1] x [-1, 1].

    Pixel x in [0, width-1] maps to 2x/(width-1) - 1, likewise y.  In this
    frame homography entries are O(1) regardless of resolution (a pixel-frame
    quarter turn about the center carries a translation of ~width), which
    keeps the loss terms commensurate and group elements near the identity.
    """
    if width < 2 or height < 2:
        raise ValueError("image dimensions must be at least 2")
    return np.array(
        [[2.0 / (width - 1), 0.0, -1.0], [0.0, 2.0 / (height - 1), -1.0], [0.0, 0.0, 1.0]]
    )


def to_unit_frame(h: Homography, width: int, height: int) -> Homography:
    """Conjugate a pixel-frame homography into the unit frame (same element,
    different chart; the determinant is unchanged)."""
    s = unit_frame_matrix(width, height)
    return Homography(s @ h.m @ np.linalg.inv(s))


def warp_image(img: GrayImage, h: Homography) -> GrayImage:
    """Apply ``h`` to the image plane: output(x) = input(h^-1 x).

    Inverse-mapping warp with bilinear interpolation in pixel coordinates
    ((0, 0) is the top-left pixel center); samples falling outside the
    source frame contribute zero.
    """
    height, width = img.pixels.shape
    hinv = np.linalg.inv(h.m if hasattr(h, "m") else np.asarray(h, dtype=float))

    ys, xs = np.mgrid[0:height, 0:width]
    pts = np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
    src = hinv @ pts
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = src[0] / src[2]
        sy = src[1] / src[2]
    valid = np.isfinite(sx) & np.isfinite(sy) & (np.abs(src[2]) > 1e-12)
    sx = np.where(valid, sx, -2.0)
    sy = np.where(valid, sy, -2.0)

    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    fx = sx - x0
    fy = sy - y0

    def tap(ix, iy):
        inb = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
        out = np.zeros(ix.shape)
        out[inb] = img.pixels[iy[inb], ix[inb]]
        return out

    val = (
        (1.0 - fx) * (1.0 - fy) * tap(x0, y0)
        + fx * (1.0 - fy) * tap(x0 + 1, y0)
        + (1.0 - fx) * fy * tap(x0, y0 + 1)
        + fx * fy * tap(x0 + 1, y0 + 1)
    )
    val[~valid] = 0.0
    return GrayImage(val.reshape(height, width))


def make_synthetic_image(rng: Rng, width: int, height: int) -> GrayImage:
    """Render a seeded random pattern: 3 to 6 Gaussian blobs plus one soft bar.

    The images have a canonical pose, like photographs do: blob mass skews
    toward the left edge, the bar lies near horizontal, and its brightness
    tapers toward one end.  That pose is what makes the relative
    transformation identifiable from per-image features; with fully
    uniform content statistics a quarter-turn ambiguity would remain that
    no per-image encoding can resolve.  Output is min-max normalised to
    [0, 1].
    """
    if width < 8 or height < 8:
        raise ValueError("image dimensions must be at least 8")
    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    size = min(width, height)
    img = np.zeros((height, width))

    # anchor blob: always the brightest mass, parked in a tight band left of
    # center so the gross brightness centroid points the same way in every
    # image; the remaining blobs are dim clutter kept off the anchor by
    # placing them on a ring around it
    ax = rng.uniform(0.20, 0.30) * (width - 1)
    ay = rng.uniform(0.42, 0.58) * (height - 1)
    sigma = rng.uniform(0.12, 0.18) * size
    img += np.exp(-((xs - ax) ** 2 + (ys - ay) ** 2) / (2.0 * sigma**2))

    n_extra = int(rng.integers(2, 6))
    for _ in range(n_extra):
        radius = rng.uniform(0.35, 0.60) * size
        phi = rng.uniform(0.0, 2.0 * np.pi)
        cx = np.clip(ax + radius * np.cos(phi), 0.0, width - 1.0)
        cy = np.clip(ay + radius * np.sin(phi), 0.0, height - 1.0)
        sigma = rng.uniform(0.04, 0.10) * size
        amp = rng.uniform(0.12, 0.28)
        img += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sigma**2))

    # one soft-edged bar: Gaussian profile across, smooth cutoff along,
    # brighter toward its left head so a half turn changes pixel statistics
    # in the same direction as the anchor-blob skew
    cx = rng.uniform(0.40, 0.60) * (width - 1)
    cy = rng.uniform(0.40, 0.60) * (height - 1)
    angle = rng.uniform(-0.25, 0.25)
    half_len = rng.uniform(0.25, 0.45) * size
    thick = rng.uniform(0.05, 0.10) * size
    amp = rng.uniform(0.40, 0.55)
    ca, sa = np.cos(angle), np.sin(angle)
    along = (xs - cx) * ca + (ys - cy) * sa
    across = -(xs - cx) * sa + (ys - cy) * ca
    taper = 1.0 - 0.8 * np.clip(along / half_len, -1.0, 1.0)
    img += amp * taper * np.exp(-((across / thick) ** 2) - (along / half_len) ** 8)

    lo, hi = img.min(), img.max()
    if hi - lo < 1e-12:
        return GrayImage(np.zeros((height, width)))
    return GrayImage((img - lo) / (hi - lo))


# ---------------------------------------------------------------------------
# Debug dumps: binary PGM plus a JSON sidecar with the generating params


def write_pgm(img: GrayImage, path):
    """Write the image as 8-bit binary PGM (P5, maxval 255)."""
    data = np.round(img.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def read_pgm(path) -> GrayImage:
    """Read an 8-bit binary PGM written by :func:`write_pgm`."""
    raw = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        # whitespace-delimited header tokens, '#' starts a comment line
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise ValueError("not a binary PGM (P5) file")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    data = np.frombuffer(raw[pos : pos + width * height], dtype=np.uint8)
    if data.size != width * height:
        raise ValueError("truncated PGM payload")
    return GrayImage(data.reshape(height, width) / 255.0)


def dump_sample(stem, img: GrayImage, params: TransformParams = None):
    """Write ``stem.pgm`` and a ``stem.json`` sidecar with the params."""
    stem = Path(stem)
    write_pgm(img, stem.with_suffix(".pgm"))
    sidecar = {"width": img.width, "height": img.height}
    if params is not None:
        sidecar["params"] = params.to_dict()
    stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
