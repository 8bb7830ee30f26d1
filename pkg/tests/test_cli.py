"""Command-line behavior: exit codes, JSON/CSV output shapes against the
in-repo schemas, golden determinism, and agreement with library values."""

import json
import os
import pathlib
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from liegdt.geometry import Homography, surrogate_loss
from liegdt.train import TrainConfig

from util import rot_z

SCHEMA_DIR = pathlib.Path(__file__).resolve().parents[1] / "schemas"


def validate(obj, schema_name):
    schema = json.loads((SCHEMA_DIR / schema_name).read_text())
    jsonschema.validate(obj, schema)


def run_cli(*args, env_extra=None, stdin=None):
    env = os.environ.copy()
    env.pop("LIE_GDT_LOG", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "liegdt", *args],
        capture_output=True,
        text=True,
        env=env,
        input=stdin,
    )


def write_matrix(path, m):
    path.write_text(json.dumps(np.asarray(m).tolist()))
    return str(path)


@pytest.fixture
def ident_file(tmp_path):
    return write_matrix(tmp_path / "ident.json", np.eye(3))


class TestLoss:
    def test_identical_matrices_zero_loss(self, ident_file):
        proc = run_cli("loss", ident_file, ident_file)
        assert proc.returncode == 0, proc.stderr
        report = json.loads(proc.stdout)
        validate(report, "loss_report.schema.json")
        assert report["loss"] == 0.0
        # coincident singular values at the minimum: fallback gradient
        assert report["grad_status"] == "near_singular_gradient"

    def test_matches_library_values(self, tmp_path, ident_file):
        that = rot_z(0.3) @ np.diag([1.1, 1.0 / 1.1, 1.0])
        that_file = write_matrix(tmp_path / "that.json", that)
        proc = run_cli("loss", ident_file, that_file, "--lambda", "1.0")
        assert proc.returncode == 0, proc.stderr
        report = json.loads(proc.stdout)
        validate(report, "loss_report.schema.json")
        res = surrogate_loss(Homography.identity(), Homography(that))
        assert report["loss"] == res.loss
        assert report["theta"] == res.theta
        assert report["residual_sq"] == res.residual_sq
        assert report["grad"] == list(np.asarray(res.grad_that).ravel())

    def test_flat_nine_matrix_form(self, tmp_path, ident_file):
        that_file = tmp_path / "that9.json"
        that_file.write_text(json.dumps(rot_z(0.4).ravel().tolist()))
        proc = run_cli("loss", ident_file, str(that_file))
        assert proc.returncode == 0
        res = surrogate_loss(Homography.identity(), Homography(rot_z(0.4)))
        assert json.loads(proc.stdout)["loss"] == res.loss

    def test_exact_mode_reports_iterations(self, tmp_path, ident_file):
        that_file = write_matrix(tmp_path / "that.json", rot_z(0.3))
        proc = run_cli("loss", ident_file, str(that_file), "--mode", "exact")
        assert proc.returncode == 0
        report = json.loads(proc.stdout)
        validate(report, "loss_report.schema.json")
        assert "iterations" in report and report["iterations"] >= 0
        # skew generator has Frobenius norm sqrt(2) * angle, so the exact
        # loss 0.5 ||r||^2 equals the squared angle
        assert abs(report["loss"] - 0.3**2) < 1e-9

    def test_mse_mode(self, tmp_path, ident_file):
        that_file = write_matrix(tmp_path / "that.json", rot_z(0.2))
        proc = run_cli("loss", ident_file, str(that_file), "--mode", "mse")
        assert proc.returncode == 0
        report = json.loads(proc.stdout)
        validate(report, "loss_report.schema.json")
        expected = 0.5 * float(np.sum((rot_z(0.2) - np.eye(3)) ** 2))
        assert abs(report["loss"] - expected) < 1e-12

    def test_malformed_json_exits_2(self, tmp_path, ident_file):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        proc = run_cli("loss", ident_file, str(bad))
        assert proc.returncode == 2

    def test_missing_file_exits_2(self, ident_file):
        proc = run_cli("loss", ident_file, "/nonexistent/matrix.json")
        assert proc.returncode == 2

    def test_singular_matrix_exits_1_with_error_json(self, tmp_path, ident_file):
        sing = write_matrix(tmp_path / "sing.json", [[1, 2, 3], [2, 4, 6], [0, 0, 1]])
        proc = run_cli("loss", ident_file, sing)
        assert proc.returncode == 1
        err = json.loads(proc.stdout)
        validate(err, "error.schema.json")
        assert err["error"]["status"] == "singular"

    def test_requests_batch(self, tmp_path):
        ident = np.eye(3).ravel().tolist()
        singular = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]
        ok_that = (rot_z(0.3) @ np.diag([1.1, 1.0 / 1.1, 1.0])).ravel().tolist()
        reqs = [
            {"t": ident, "that": ok_that},
            {"t": ident, "that": singular},
            {"t": ident, "that": ident, "mode": "exact"},
        ]
        req_file = tmp_path / "reqs.json"
        req_file.write_text(json.dumps(reqs))
        proc = run_cli("loss", "--requests", str(req_file))
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        validate(out, "loss_batch.schema.json")
        assert [r["status"] for r in out] == ["ok", "singular", "ok"]

    def test_requests_from_stdin(self):
        ident = np.eye(3).ravel().tolist()
        proc = run_cli("loss", "--requests", "-", stdin=json.dumps([{"t": ident, "that": ident}]))
        assert proc.returncode == 0
        assert json.loads(proc.stdout)[0]["loss"] == 0.0


class TestGradcheck:
    def test_count_zero_exits_2(self):
        proc = run_cli("gradcheck", "--count", "0")
        assert proc.returncode == 2

    def test_surrogate_suite_passes(self):
        proc = run_cli("gradcheck", "--seed", "1", "--count", "8", "--mode", "surrogate")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        report = json.loads(proc.stdout)
        validate(report, "gradcheck_report.schema.json")
        assert report["pass"] is True
        assert report["suites"]["surrogate"]["max_rel_err"] < 1e-5

    def test_exact_suite_passes(self):
        proc = run_cli("gradcheck", "--seed", "3", "--count", "5", "--mode", "exact")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        report = json.loads(proc.stdout)
        assert report["suites"]["exact"]["max_rel_err"] < 1e-5

    def test_chain_suite_passes(self):
        proc = run_cli("gradcheck", "--seed", "5", "--count", "5", "--mode", "chain")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        report = json.loads(proc.stdout)
        assert report["suites"]["chain"]["max_rel_err"] < 1e-4

    def test_backward_suite_passes(self):
        proc = run_cli("gradcheck", "--seed", "7", "--count", "3", "--mode", "backward")
        assert proc.returncode == 0, proc.stdout + proc.stderr


class TestSample:
    def test_params_within_ranges_and_deterministic(self):
        a = run_cli("sample", "--seed", "9", "--count", "5")
        b = run_cli("sample", "--seed", "9", "--count", "5")
        assert a.returncode == 0
        assert a.stdout == b.stdout
        out = json.loads(a.stdout)
        validate(out, "sample_report.schema.json")
        assert len(out) == 5
        h = np.array(out[0]["homography"]).reshape(3, 3)
        assert abs(np.linalg.det(h) - 1.0) < 1e-9

    def test_out_dir_writes_pgm_and_sidecar(self, tmp_path):
        out_dir = tmp_path / "dumps"
        proc = run_cli("sample", "--seed", "2", "--count", "2", "--out", str(out_dir))
        assert proc.returncode == 0
        assert (out_dir / "sample_0000.pgm").exists()
        assert (out_dir / "sample_0000.json").exists()
        assert (out_dir / "sample_0001_warped.pgm").exists()
        sidecar = json.loads((out_dir / "sample_0000.json").read_text())
        assert sidecar["params"]["scale"] == json.loads(proc.stdout)[0]["params"]["scale"]


class TestGeodesic:
    def test_endpoints_match_inputs(self, tmp_path):
        t = rot_z(0.5)
        that = rot_z(1.1)
        t_file = write_matrix(tmp_path / "t.json", t)
        that_file = write_matrix(tmp_path / "that.json", that)
        proc = run_cli("geodesic", t_file, that_file, "--points", "5")
        assert proc.returncode == 0, proc.stderr
        lines = proc.stdout.strip().splitlines()
        assert lines[0] == "s," + ",".join(f"m{r}{c}" for r in range(3) for c in range(3))
        assert len(lines) == 6
        first = np.array([float(v) for v in lines[1].split(",")])
        last = np.array([float(v) for v in lines[-1].split(",")])
        assert first[0] == 0.0 and last[0] == 1.0
        np.testing.assert_allclose(first[1:].reshape(3, 3), t, atol=1e-12)
        np.testing.assert_allclose(last[1:].reshape(3, 3), that, atol=1e-8)

    def test_out_file(self, tmp_path):
        t_file = write_matrix(tmp_path / "t.json", np.eye(3))
        that_file = write_matrix(tmp_path / "that.json", rot_z(0.4))
        out = tmp_path / "curve.csv"
        proc = run_cli("geodesic", t_file, that_file, "--out", str(out))
        assert proc.returncode == 0
        assert out.read_text().startswith("s,m00")


def small_config_file(tmp_path, **overrides):
    config = {
        "minibatch_size": 4,
        "steps": 5,
        "image_size": 12,
        "hidden1": 8,
        "hidden2": 6,
        "seed": 3,
    }
    config.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return str(path)


class TestTrain:
    def test_tiny_run_outputs_and_determinism(self, tmp_path):
        cfg = small_config_file(tmp_path)
        prefix = str(tmp_path / "run")
        a = run_cli("train", "--config", cfg, "--out", prefix)
        assert a.returncode == 0, a.stderr
        summary = json.loads(a.stdout)
        validate(summary, "train_summary.schema.json")
        assert summary["steps_run"] == 5
        csv_lines = (tmp_path / "run.csv").read_text().strip().splitlines()
        assert csv_lines[0] == "step,loss,angle_error"
        assert len(csv_lines) == 6
        on_disk = json.loads((tmp_path / "run.json").read_text())
        validate(on_disk, "train_summary.schema.json")
        b = run_cli("train", "--config", cfg, "--out", str(tmp_path / "rerun"))
        assert json.loads(b.stdout)["weights_digest"] == summary["weights_digest"]
        assert (tmp_path / "rerun.csv").read_bytes() == (tmp_path / "run.csv").read_bytes()

    def test_flag_overrides(self, tmp_path):
        cfg = small_config_file(tmp_path)
        proc = run_cli("train", "--config", cfg, "--steps", "2", "--seed", "8")
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["steps_run"] == 2
        assert summary["config"]["seed"] == 8

    def test_bad_config_key_exits_2(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"stepz": 3}))
        proc = run_cli("train", "--config", str(path))
        assert proc.returncode == 2

    def test_unknown_flag_exits_2(self):
        proc = run_cli("train", "--bogus", "1")
        assert proc.returncode == 2

    def test_log_env_writes_progress_to_stderr(self, tmp_path):
        cfg = small_config_file(tmp_path, steps=1)
        proc = run_cli("train", "--config", cfg, env_extra={"LIE_GDT_LOG": "info"})
        assert proc.returncode == 0
        assert "step 0" in proc.stderr


class TestBench:
    def test_byte_identical_reruns(self, tmp_path):
        args = [
            "bench",
            "--seed",
            "4",
            "--steps",
            "3",
            "--batch",
            "2",
            "--eval-pairs",
            "8",
        ]
        a = run_cli(*args, "--out", str(tmp_path / "bench"))
        assert a.returncode == 0, a.stderr
        comparison = json.loads(a.stdout)
        validate(comparison, "bench_compare.schema.json")
        assert set(comparison["arms"]) == {"gdt_surrogate", "mse"}
        b = run_cli(*args, "--out", str(tmp_path / "again"))
        assert b.stdout == a.stdout
        for kind in ("gdt_surrogate", "mse"):
            assert (tmp_path / f"bench_{kind}.csv").read_bytes() == (tmp_path / f"again_{kind}.csv").read_bytes()
        cmp_a = (tmp_path / "bench_compare.json").read_bytes()
        assert cmp_a == (tmp_path / "again_compare.json").read_bytes()
        assert b"wall_clock" not in cmp_a


class TestUsage:
    def test_no_subcommand_exits_2(self):
        proc = run_cli()
        assert proc.returncode == 2

    def test_unknown_subcommand_exits_2(self):
        proc = run_cli("frobnicate")
        assert proc.returncode == 2

    def test_loss_without_files_exits_2(self):
        proc = run_cli("loss")
        assert proc.returncode == 2
