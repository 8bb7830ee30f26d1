"""Batch-oriented foreign-callable surface for the loss kernels.

External callers (other languages, training frameworks) talk to the library
through flat row-major 9-vectors and plain dicts, so everything here is
JSON-shaped and copy-on-entry: no caller memory is retained.  Domain
failures (singular input, non-converged solve) are reported per element
through a status code; one bad element never aborts a batch.

Gradients are taken with respect to the entries of the unit-determinant
representative of ``that`` (inputs are normalised on entry, exactly as the
``Homography`` constructor does).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    IllConditionedError,
    NoConvergenceError,
    SingularMatrixError,
)
from .geometry import (
    Homography,
    gdt_exact_grad,
    gdt_loss_exact,
    mse_loss,
    surrogate_loss,
)

__all__ = ["LossRequest", "LossResponse", "eval_loss_batch", "eval_loss", "eval_loss_flat"]

MODES = ("surrogate", "exact", "mse")

# integer status codes for the flat-array interface
STATUS_CODES = {"ok": 0, "singular": 1, "no_convergence": 2, "near_singular_gradient": 3}


@dataclass(frozen=True)
class LossRequest:
    """One loss evaluation: two matrices as row-major 9-vectors plus options.

    ``fix_last`` zeroes the ninth gradient entry for callers who hold that
    matrix entry fixed at a constant.
    """

    t: tuple
    that: tuple
    lam: float = 1.0
    angle_power: int = 1
    mode: str = "surrogate"
    fix_last: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "LossRequest":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(
            t=tuple(float(v) for v in d["t"]),
            that=tuple(float(v) for v in d["that"]),
            lam=float(d.get("lam", 1.0)),
            angle_power=int(d.get("angle_power", 1)),
            mode=str(d.get("mode", "surrogate")),
            fix_last=bool(d.get("fix_last", False)),
        )


@dataclass(frozen=True)
class LossResponse:
    """Evaluation result; numeric fields are None when not defined for the
    mode or when status is not ok."""

    loss: float
    grad: tuple
    theta: float
    residual_sq: float
    status: str

    def to_dict(self) -> dict:
        return {
            "loss": self.loss,
            "grad": list(self.grad) if self.grad is not None else None,
            "theta": self.theta,
            "residual_sq": self.residual_sq,
            "status": self.status,
        }


def _validate(req: LossRequest):
    if len(req.t) != 9 or len(req.that) != 9:
        raise ValueError("t and that must each hold 9 reals (row-major 3x3)")
    if not all(np.isfinite(v) for v in req.t) or not all(np.isfinite(v) for v in req.that):
        raise ValueError("matrix entries must be finite")
    if req.mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if req.angle_power not in (1, 2):
        raise ValueError("angle_power must be 1 or 2")


def _eval_one(req: LossRequest) -> LossResponse:
    try:
        t = Homography(np.asarray(req.t, dtype=float).reshape(3, 3))
        that = Homography(np.asarray(req.that, dtype=float).reshape(3, 3))
        if req.mode == "surrogate":
            res = surrogate_loss(t, that, lam=req.lam, angle_power=req.angle_power)
            loss, grad = res.loss, np.array(res.grad_that).ravel()
            theta, residual_sq, status = res.theta, res.residual_sq, res.grad_status
        elif req.mode == "exact":
            loss = gdt_loss_exact(t, that)
            grad = gdt_exact_grad(t, that).ravel()
            theta, residual_sq, status = None, None, "ok"
        else:
            loss, grad_m = mse_loss(t, that)
            grad = grad_m.ravel()
            theta, residual_sq, status = None, None, "ok"
    except SingularMatrixError:
        return LossResponse(None, None, None, None, "singular")
    except (NoConvergenceError, IllConditionedError):
        return LossResponse(None, None, None, None, "no_convergence")
    grad = grad.copy()
    if req.fix_last:
        grad[8] = 0.0
    return LossResponse(float(loss), tuple(grad), theta, residual_sq, status)


def eval_loss_batch(requests) -> list:
    """Evaluate a list of LossRequest (or request dicts), order-preserving.

    Structural problems (wrong lengths, non-finite numbers, unknown mode)
    raise ValueError immediately; domain failures are returned per element
    as ``status`` in {singular, no_convergence, near_singular_gradient}.
    """
    parsed = []
    for req in requests:
        if isinstance(req, dict):
            req = LossRequest.from_dict(req)
        _validate(req)
        parsed.append(req)
    return [_eval_one(req) for req in parsed]


def eval_loss(t, that, lam=1.0, angle_power=1, mode="surrogate") -> LossResponse:
    """Scalar convenience wrapper around :func:`eval_loss_batch`."""
    req = LossRequest(
        t=tuple(np.asarray(t, dtype=float).ravel()),
        that=tuple(np.asarray(that, dtype=float).ravel()),
        lam=lam,
        angle_power=angle_power,
        mode=mode,
    )
    return eval_loss_batch([req])[0]


def eval_loss_flat(t_flat, that_flat, count, lam=1.0, angle_power=1, mode="surrogate"):
    """Flat-array interface: contiguous float64 inputs, float64/int32 outputs.

    ``t_flat`` and ``that_flat`` hold ``count`` row-major 3x3 matrices each
    (9 * count doubles).  Returns ``(loss, grad, status)`` where ``loss`` has
    shape (count,), ``grad`` (count * 9,), and ``status`` (count,) carries
    the integer codes {0: ok, 1: singular, 2: no_convergence,
    3: near_singular_gradient}.  Failed elements hold NaN in loss and grad.
    """
    t_flat = np.ascontiguousarray(t_flat, dtype=np.float64).ravel()
    that_flat = np.ascontiguousarray(that_flat, dtype=np.float64).ravel()
    if t_flat.size != 9 * count or that_flat.size != 9 * count:
        raise ValueError(f"expected {9 * count} doubles per side, got {t_flat.size} and {that_flat.size}")
    requests = [
        LossRequest(
            t=tuple(t_flat[9 * i : 9 * i + 9]),
            that=tuple(that_flat[9 * i : 9 * i + 9]),
            lam=lam,
            angle_power=angle_power,
            mode=mode,
        )
        for i in range(count)
    ]
    responses = eval_loss_batch(requests)
    loss = np.full(count, np.nan)
    grad = np.full(count * 9, np.nan)
    status = np.zeros(count, dtype=np.int32)
    for i, resp in enumerate(responses):
        status[i] = STATUS_CODES[resp.status]
        if resp.loss is not None:
            loss[i] = resp.loss
            grad[9 * i : 9 * i + 9] = resp.grad
    return loss, grad, status
