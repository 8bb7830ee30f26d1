"""Command-line frontend.

Subcommands: ``loss`` (evaluate a loss and its gradient on a matrix pair or
a batch of requests), ``gradcheck`` (finite-difference validation of every
analytic gradient), ``sample`` (draw transformation params and synthetic
images), ``geodesic`` (tabulate the connecting geodesic as CSV),
``train`` (run the desk-scale trainer), and ``bench`` (paired
surrogate-vs-MSE training comparison).

Exit codes: 0 success, 1 domain error (reported as machine-readable JSON
on stdout), 2 usage or file/parse error.  Machine output is JSON except
for the CSV series.  The ``LIE_GDT_LOG`` environment variable (debug,
info, warning, error) controls stderr logging verbosity.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .bridge import eval_loss_batch
from .errors import LieGdtError
from .geometry import (
    Homography,
    _riem_exp,
    gdt_exact_grad,
    geodesic_between,
    mse_loss,
    project_so3,
    riem_log_matrix,
    rotation_angle,
    surrogate_loss,
    surrogate_loss_grad,
)
from .numdiff import central_diff_grad, rel_error
from .sampler import (
    Rng,
    dump_sample,
    make_synthetic_image,
    params_to_homography,
    sample_params,
    warp_image,
    write_pgm,
)
from .train import (
    TrainConfig,
    decoder_output_to_homography,
    evaluate_angle_error,
    init_weights,
    load_train_config,
    loss_head_grad,
    report_summary,
    train,
    write_report_csv,
    write_report_json,
)

__all__ = ["main"]

log = logging.getLogger(__name__)

_LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


def _print_json(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_matrix(path) -> np.ndarray:
    """Read a 3x3 matrix from a JSON file: nested 3x3 rows or 9 reals
    row-major.  ``-`` reads stdin."""
    if path == "-":
        data = json.load(sys.stdin)
    else:
        with open(path) as fh:
            data = json.load(fh)
    arr = np.asarray(data, dtype=float)
    if arr.shape == (9,):
        arr = arr.reshape(3, 3)
    if arr.shape != (3, 3):
        raise ValueError(f"{path}: expected a 3x3 matrix or 9 reals, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------- loss


def cmd_loss(args) -> int:
    if args.requests is not None:
        if args.requests == "-":
            requests = json.load(sys.stdin)
        else:
            with open(args.requests) as fh:
                requests = json.load(fh)
        if not isinstance(requests, list):
            raise ValueError("--requests file must hold a JSON array of request objects")
        responses = eval_loss_batch(requests)
        _print_json([r.to_dict() for r in responses])
        return 0

    if args.t_file is None or args.that_file is None:
        print("loss: need two matrix files, or --requests", file=sys.stderr)
        return 2
    t = Homography(_load_matrix(args.t_file))
    that = Homography(_load_matrix(args.that_file))
    report = {"mode": args.mode, "lambda": args.lam, "angle_power": args.angle_power}
    if args.mode == "surrogate":
        res = surrogate_loss(t, that, lam=args.lam, angle_power=args.angle_power)
        report.update(
            loss=res.loss,
            theta=res.theta,
            residual_sq=res.residual_sq,
            grad=list(np.asarray(res.grad_that).ravel()),
            grad_status=res.grad_status,
        )
    elif args.mode == "exact":
        # same raw product as the batch evaluator, so values agree bitwise
        g = np.linalg.inv(t.m) @ that.m
        r, iterations = riem_log_matrix(g)
        report.update(
            loss=0.5 * float(np.sum(r * r)),
            theta=None,
            residual_sq=None,
            grad=list(gdt_exact_grad(t, that).ravel()),
            grad_status="ok",
            iterations=iterations,
        )
    else:
        value, grad_m = mse_loss(t, that)
        report.update(loss=value, theta=None, residual_sq=None, grad=list(grad_m.ravel()), grad_status="ok")
    _print_json(report)
    return 0


# ---------------------------------------------------------------- gradcheck


def _random_pair(rng: np.random.Generator, spread=0.3):
    """A well-conditioned random homography pair for gradient checks."""
    while True:
        m = np.eye(3) + spread * rng.standard_normal((3, 3))
        if abs(np.linalg.det(m)) > 0.2 and np.linalg.cond(m) < 50.0:
            break
    while True:
        n = np.eye(3) + spread * rng.standard_normal((3, 3))
        if abs(np.linalg.det(n)) > 0.2 and np.linalg.cond(n) < 50.0:
            break
    return Homography(m), Homography(n)


def _surrogate_value_raw(t_inv: np.ndarray, m: np.ndarray, lam: float, power: int) -> float:
    g = t_inv @ m
    p = project_so3(g)
    theta = rotation_angle(p)
    return theta**power + lam * float(np.sum((g - p.m) ** 2))


def _check_surrogate(seed, count, lam, power):
    rng = np.random.default_rng(seed)
    worst, checked, skipped = 0.0, 0, 0
    for _ in range(count):
        t, that = _random_pair(rng)
        res = surrogate_loss(t, that, lam=lam, angle_power=power)
        if res.grad_status != "ok":
            skipped += 1
            continue
        t_inv = np.linalg.inv(t.m)
        fd = central_diff_grad(lambda m: _surrogate_value_raw(t_inv, m, lam, power), that.m)
        worst = max(worst, rel_error(np.asarray(res.grad_that), fd))
        checked += 1
    return worst, checked, skipped


def _check_exact(seed, count):
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for _ in range(count):
        t, _ = _random_pair(rng, spread=0.25)
        r = 0.35 * rng.standard_normal((3, 3))
        r -= np.trace(r) / 3.0 * np.eye(3)
        that = Homography(t.m @ _riem_exp(r))
        grad = gdt_exact_grad(t, that)
        t_inv = np.linalg.inv(t.m)

        def value(m):
            rr, _ = riem_log_matrix(t_inv @ m)
            return 0.5 * float(np.sum(rr * rr))

        fd = central_diff_grad(value, that.m)
        worst = max(worst, rel_error(grad, fd))
        checked += 1
    return worst, checked, 0


def _check_mse(seed, count):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        t, that = _random_pair(rng)
        _, grad = mse_loss(t, that)
        fd = central_diff_grad(lambda m: 0.5 * float(np.sum((m - t.m) ** 2)), that.m)
        worst = max(worst, rel_error(grad, fd))
    return worst, count, 0


def _check_chain(seed, count, lam, power):
    """End-to-end loss-head check: perturb the 8 raw decoder outputs."""
    rng = np.random.default_rng(seed)
    config = replace(TrainConfig(), lam=lam, angle_power=power)

    def value(t, raw8):
        return loss_head_grad(t, decoder_output_to_homography(raw8), config)[0]

    worst, checked, skipped = 0.0, 0, 0
    for _ in range(count):
        t, _ = _random_pair(rng)
        raw8 = np.array([1, 0, 0, 0, 1, 0, 0, 0], dtype=float) + 0.25 * rng.standard_normal(8)
        try:
            _, grad8 = loss_head_grad(t, decoder_output_to_homography(raw8), config)
            fd = central_diff_grad(lambda r8: value(t, r8), raw8)
        except LieGdtError:
            skipped += 1
            continue
        worst = max(worst, rel_error(grad8, fd))
        checked += 1
    return worst, checked, skipped


def _check_backward(seed, count):
    """Weight-gradient check on a miniature dense model."""
    from .train import ModelWeights, _backward_batch, _forward_batch

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        w = ModelWeights(
            enc_w1=0.5 * rng.standard_normal((4, 3)),
            enc_b1=0.1 * rng.standard_normal(3),
            enc_w2=0.5 * rng.standard_normal((3, 2)),
            enc_b2=0.1 * rng.standard_normal(2),
            dec_w=0.5 * rng.standard_normal((4, 8)),
            dec_b=0.1 * rng.standard_normal(8),
        )
        x = rng.standard_normal((1, 4))
        tx = rng.standard_normal((1, 4))
        up = rng.standard_normal((1, 8))
        raw, cache = _forward_batch(w, x, tx)
        grads = _backward_batch(cache, up)
        for name, tensor in w.tensors().items():

            def value(flat, name=name, tensor=tensor):
                saved = tensor.copy()
                tensor[...] = flat.reshape(tensor.shape)
                out, _ = _forward_batch(w, x, tx)
                tensor[...] = saved
                return float(np.sum(out * up))

            fd = central_diff_grad(value, tensor.ravel().copy())
            worst = max(worst, rel_error(grads[name].ravel(), fd))
    return worst, count, 0


def cmd_gradcheck(args) -> int:
    if args.count < 1:
        print("gradcheck: --count must be >= 1", file=sys.stderr)
        return 2
    suites = {
        "surrogate": lambda: _check_surrogate(args.seed, args.count, args.lam, args.angle_power),
        "exact": lambda: _check_exact(args.seed, args.count),
        "mse": lambda: _check_mse(args.seed, args.count),
        "chain": lambda: _check_chain(args.seed, args.count, args.lam, args.angle_power),
        "backward": lambda: _check_backward(args.seed, min(args.count, 20)),
    }
    tolerances = {"surrogate": 1e-5, "exact": 1e-5, "mse": 1e-5, "chain": 1e-4, "backward": 1e-5}
    selected = list(suites) if args.mode == "all" else [args.mode]
    report = {"seed": args.seed, "count": args.count, "suites": {}, "pass": True}
    for name in selected:
        worst, checked, skipped = suites[name]()
        ok = bool(checked > 0 and worst < tolerances[name])
        report["suites"][name] = {
            "max_rel_err": worst,
            "tolerance": tolerances[name],
            "checked": checked,
            "skipped": skipped,
            "pass": ok,
        }
        report["pass"] = report["pass"] and ok
        log.info("gradcheck %s: max rel err %.3g over %d cases", name, worst, checked)
    _print_json(report)
    return 0 if report["pass"] else 1


# ---------------------------------------------------------------- sample


def cmd_sample(args) -> int:
    root = Rng(args.seed)
    out = []
    for i in range(args.count):
        params = sample_params(root.derive(0, i))
        h = params_to_homography(params, args.width, args.height)
        entry = {"index": i, "params": params.to_dict(), "homography": list(h.m.ravel())}
        out.append(entry)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            img = make_synthetic_image(root.derive(1, i), args.width, args.height)
            dump_sample(os.path.join(args.out, f"sample_{i:04d}"), img, params)
            write_pgm(warp_image(img, h), os.path.join(args.out, f"sample_{i:04d}_warped.pgm"))
    _print_json(out)
    return 0


# ---------------------------------------------------------------- geodesic


def cmd_geodesic(args) -> int:
    t = Homography(_load_matrix(args.t_file))
    that = Homography(_load_matrix(args.that_file))
    curve = geodesic_between(t, that)
    names = [f"m{r}{c}" for r in range(3) for c in range(3)]
    lines = ["s," + ",".join(names)]
    for i in range(args.points):
        s = i / (args.points - 1) if args.points > 1 else 0.0
        m = curve.point_at(s).m
        lines.append(f"{s!r}," + ",".join(repr(float(v)) for v in m.ravel()))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- train


def _config_from_args(args) -> TrainConfig:
    path = getattr(args, "config", None)
    config = load_train_config(path) if path else TrainConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.batch is not None:
        overrides["minibatch_size"] = args.batch
    if args.lam is not None:
        overrides["lam"] = args.lam
    if args.angle_power is not None:
        overrides["angle_power"] = args.angle_power
    if getattr(args, "loss_kind", None) is not None:
        overrides["loss_kind"] = args.loss_kind
    return replace(config, **overrides) if overrides else config


def cmd_train(args) -> int:
    config = _config_from_args(args)
    report = train(config)
    if args.out:
        write_report_csv(report, args.out + ".csv")
        write_report_json(report, config, args.out + ".json")
    _print_json(report_summary(report, config))
    return 0


# ---------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    base = _config_from_args(args)
    comparison = {"config": {k: v for k, v in base.to_dict().items() if k != "loss_kind"}, "arms": {}}
    untrained = None
    for kind in ("gdt_surrogate", "mse"):
        config = replace(base, loss_kind=kind)
        log.info("bench: training %s arm", kind)
        report = train(config)
        write_report_csv(report, f"{args.out}_{kind}.csv")
        if untrained is None:
            untrained = evaluate_angle_error(init_weights(config), config, args.eval_pairs)
        summary = report_summary(report, config, include_wall_clock=False)
        summary["eval_angle_error"] = evaluate_angle_error(report.weights, config, args.eval_pairs)
        del summary["config"]
        comparison["arms"][kind] = summary
    comparison["untrained_eval_angle_error"] = untrained
    with open(f"{args.out}_compare.json", "w") as fh:
        json.dump(comparison, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _print_json(comparison)
    return 0


# ---------------------------------------------------------------- parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liegdt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loss", help="evaluate a loss and gradient on one matrix pair or a request batch")
    p.add_argument("t_file", nargs="?", help="JSON file with the truth matrix (3x3 or 9 reals row-major)")
    p.add_argument("that_file", nargs="?", help="JSON file with the predicted matrix")
    p.add_argument("--mode", choices=["surrogate", "exact", "mse"], default="surrogate")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="projection-residual weight")
    p.add_argument("--angle-power", type=int, choices=[1, 2], default=1)
    p.add_argument("--requests", help="JSON file with an array of request objects (- for stdin)")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("gradcheck", help="finite-difference validation of the analytic gradients")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=100, help="random cases per suite")
    p.add_argument("--mode", choices=["surrogate", "exact", "mse", "chain", "backward", "all"], default="all")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--angle-power", type=int, choices=[1, 2], default=1)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sample", help="draw transformation params and synthetic images")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--out", help="directory for PGM dumps with JSON sidecars")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("geodesic", help="tabulate the geodesic between two matrices as CSV")
    p.add_argument("t_file")
    p.add_argument("that_file")
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("train", help="run the desk-scale trainer")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch", type=int, help="minibatch size")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--angle-power", type=int, choices=[1, 2])
    p.add_argument("--loss-kind", choices=["gdt_surrogate", "mse"])
    p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="paired surrogate-vs-MSE training comparison")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch", type=int, help="minibatch size")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--angle-power", type=int, choices=[1, 2])
    p.add_argument("--eval-pairs", type=int, default=512)
    p.add_argument("--out", default="bench", help="output prefix for the two CSVs and comparison JSON")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("LIE_GDT_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LieGdtError as err:
        _print_json({"error": {"status": err.status, "message": str(err)}})
        return 1
    except FileNotFoundError as err:
        print(f"liegdt: {err}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as err:
        print(f"liegdt: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
