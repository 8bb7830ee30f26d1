import numpy as np
import pytest

from liegdt.errors import SingularMatrixError
from liegdt.sampler import (
    GrayImage,
    Rng,
    TransformParams,
    dump_sample,
    make_synthetic_image,
    params_to_homography,
    read_pgm,
    sample_params,
    warp_image,
    write_pgm,
)
from liegdt.sampler import _dlt

from util import assert_close


def expected_corners(p, width, height):
    """Independent corner oracle: scale, rotate about center, then offset."""
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    quarter_cs = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    c, s = quarter_cs[p.rotation_quarter]
    out = []
    for i, (x, y) in enumerate(
        [(0, 0), (width - 1, 0), (width - 1, height - 1), (0, height - 1)]
    ):
        dx, dy = (x - cx) * p.scale, (y - cy) * p.scale
        rx, ry = c * dx - s * dy, s * dx + c * dy
        out.append(
            [
                cx + rx + p.corner_offsets[i, 0] * width,
                cy + ry + p.corner_offsets[i, 1] * height,
            ]
        )
    return np.array(out)


def apply_homography(m, pts):
    ph = (m @ np.column_stack([pts, np.ones(len(pts))]).T).T
    return ph[:, :2] / ph[:, 2:3]


class TestRng:
    def test_same_seed_same_stream(self):
        a = Rng(123)
        b = Rng(123)
        assert np.array_equal(a.uniform(size=100), b.uniform(size=100))
        assert np.array_equal(a.integers(0, 1000, size=50), b.integers(0, 1000, size=50))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).uniform(size=20), Rng(2).uniform(size=20))

    def test_derived_streams_are_independent_of_consumption(self):
        a = Rng(9)
        a.uniform(size=1000)  # consume the parent stream
        fresh = Rng(9)
        assert np.array_equal(
            a.derive(3, 7).uniform(size=10), fresh.derive(3, 7).uniform(size=10)
        )

    def test_derived_streams_differ_by_key(self):
        r = Rng(9)
        assert not np.array_equal(r.derive(1, 0).uniform(size=10), r.derive(1, 1).uniform(size=10))
        assert not np.array_equal(r.derive(1, 0).uniform(size=10), r.derive(2, 0).uniform(size=10))


class TestSampleParams:
    def test_ranges(self):
        rng = Rng(5)
        for _ in range(500):
            p = sample_params(rng)
            assert np.all(np.abs(p.corner_offsets) <= 0.125)
            assert 0.8 <= p.scale <= 1.2
            assert p.rotation_quarter in (0, 1, 2, 3)

    def test_seed_42_reproducible(self):
        a = sample_params(Rng(42))
        b = sample_params(Rng(42))
        assert np.array_equal(a.corner_offsets, b.corner_offsets)
        assert a.scale == b.scale
        assert a.rotation_quarter == b.rotation_quarter

    def test_scale_mean_is_centered(self):
        rng = Rng(7)
        scales = np.array([sample_params(rng).scale for _ in range(100_000)])
        assert abs(scales.mean() - 1.0) <= 0.01

    def test_params_validation(self):
        with pytest.raises(ValueError):
            TransformParams(np.zeros((4, 2)), scale=1.5, rotation_quarter=0)
        with pytest.raises(ValueError):
            TransformParams(np.full((4, 2), 0.2), scale=1.0, rotation_quarter=0)
        with pytest.raises(ValueError):
            TransformParams(np.zeros((4, 2)), scale=1.0, rotation_quarter=4)

    def test_round_trips_through_dict(self):
        p = sample_params(Rng(11))
        q = TransformParams.from_dict(p.to_dict())
        assert np.array_equal(p.corner_offsets, q.corner_offsets)
        assert (p.scale, p.rotation_quarter) == (q.scale, q.rotation_quarter)


class TestParamsToHomography:
    def test_identity_params(self):
        p = TransformParams(np.zeros((4, 2)), scale=1.0, rotation_quarter=0)
        h = params_to_homography(p, 32, 32)
        assert_close(h.m, np.eye(3), 1e-9)

    def test_pure_quarter_rotation(self):
        p = TransformParams(np.zeros((4, 2)), scale=1.0, rotation_quarter=1)
        h = params_to_homography(p, 32, 32)
        c = 15.5
        expected = np.array([[0.0, -1.0, 2 * c], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        expected[0, 2] = c + c  # x' = c - (y - c)
        expected[1, 2] = 0.0  # y' = c + (x - c)
        assert_close(h.m, expected, 1e-9)
        assert abs(np.linalg.det(h.m) - 1.0) <= 1e-9

    def test_corner_round_trip_bulk(self):
        base = Rng(1)
        for i in range(10_000):
            p = sample_params(base.derive(1, i))
            h = params_to_homography(p, 32, 24)
            got = apply_homography(h.m, np.array([[0, 0], [31, 0], [31, 23], [0, 23]], float))
            assert_close(got, expected_corners(p, 32, 24), 1e-9)
            assert abs(np.linalg.det(h.m) - 1.0) <= 1e-9

    def test_rejects_tiny_images(self):
        p = TransformParams(np.zeros((4, 2)), scale=1.0, rotation_quarter=0)
        with pytest.raises(ValueError):
            params_to_homography(p, 1, 32)

    def test_dlt_degenerate_corners(self):
        src = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])  # collinear
        with pytest.raises(SingularMatrixError):
            _dlt(src, src + 0.1)


class TestWarpImage:
    def test_identity_warp_is_exact(self):
        img = make_synthetic_image(Rng(3), 16, 16)
        p = TransformParams(np.zeros((4, 2)), scale=1.0, rotation_quarter=0)
        out = warp_image(img, params_to_homography(p, 16, 16))
        assert_close(out.pixels, img.pixels, 1e-9)

    def test_half_turn_reverses_pixels(self):
        img = GrayImage(np.arange(16.0).reshape(4, 4) / 16.0)
        p = TransformParams(np.zeros((4, 2)), scale=1.0, rotation_quarter=2)
        out = warp_image(img, params_to_homography(p, 4, 4))
        assert_close(out.pixels, img.pixels[::-1, ::-1], 1e-9)

    def test_round_trip_interior(self):
        rng = Rng(13)
        img = make_synthetic_image(rng, 32, 32)
        p = sample_params(rng)
        h = params_to_homography(p, 32, 32)
        back = warp_image(warp_image(img, h), h.inverse())
        crop = slice(8, 24)
        mae = np.mean(np.abs(back.pixels[crop, crop] - img.pixels[crop, crop]))
        assert mae <= 0.05

    def test_composition_consistency(self):
        rng = Rng(17)
        img = make_synthetic_image(rng, 32, 32)
        h1 = params_to_homography(sample_params(rng), 32, 32)
        h2 = params_to_homography(sample_params(rng), 32, 32)
        two_step = warp_image(warp_image(img, h1), h2)
        one_step = warp_image(img, h2 @ h1)
        crop = slice(8, 24)
        mae = np.mean(np.abs(two_step.pixels[crop, crop] - one_step.pixels[crop, crop]))
        assert mae <= 0.05

    def test_output_dims_and_range(self):
        img = make_synthetic_image(Rng(19), 24, 16)
        h = params_to_homography(sample_params(Rng(19)), 24, 16)
        out = warp_image(img, h)
        assert (out.width, out.height) == (24, 16)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


class TestSyntheticImage:
    def test_deterministic(self):
        a = make_synthetic_image(Rng(21), 32, 32)
        b = make_synthetic_image(Rng(21), 32, 32)
        assert np.array_equal(a.pixels, b.pixels)

    def test_range_and_shape(self):
        img = make_synthetic_image(Rng(22), 40, 24)
        assert (img.width, img.height) == (40, 24)
        assert img.pixels.min() >= 0.0 and img.pixels.max() <= 1.0

    def test_not_flat(self):
        stds = [make_synthetic_image(Rng(seed), 32, 32).pixels.std() for seed in range(100)]
        assert min(stds) >= 0.05

    def test_rejects_tiny_images(self):
        with pytest.raises(ValueError):
            make_synthetic_image(Rng(1), 4, 32)


class TestGrayImage:
    def test_validation(self):
        with pytest.raises(ValueError):
            GrayImage(np.full((4, 4), 1.5))
        with pytest.raises(ValueError):
            GrayImage(np.full((4, 4), np.nan))
        with pytest.raises(ValueError):
            GrayImage(np.zeros(16))


class TestPgmIo:
    def test_round_trip(self, tmp_path):
        img = make_synthetic_image(Rng(23), 20, 14)
        path = tmp_path / "img.pgm"
        write_pgm(img, path)
        back = read_pgm(path)
        assert (back.width, back.height) == (20, 14)
        # 8-bit quantization: half a step plus rounding slack
        assert np.max(np.abs(back.pixels - img.pixels)) <= 0.5 / 255.0 + 1e-12

    def test_reads_comment_headers(self, tmp_path):
        path = tmp_path / "c.pgm"
        payload = bytes(range(6))
        path.write_bytes(b"P5\n# a comment\n3 2\n255\n" + payload)
        img = read_pgm(path)
        assert (img.width, img.height) == (3, 2)
        assert_close(img.pixels.ravel() * 255.0, np.arange(6.0), 1e-12)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P2\n2 2\n255\n1 2 3 4\n")
        with pytest.raises(ValueError):
            read_pgm(path)

    def test_dump_sample_writes_sidecar(self, tmp_path):
        import json

        img = make_synthetic_image(Rng(24), 16, 16)
        p = sample_params(Rng(24))
        dump_sample(tmp_path / "s0", img, p)
        assert (tmp_path / "s0.pgm").exists()
        sidecar = json.loads((tmp_path / "s0.json").read_text())
        assert sidecar["width"] == 16
        assert sidecar["params"]["rotation_quarter"] == p.rotation_quarter
        back = TransformParams.from_dict(sidecar["params"])
        assert np.array_equal(back.corner_offsets, p.corner_offsets)
