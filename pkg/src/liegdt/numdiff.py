"""Central finite differences for scalar functions of matrix arguments."""

import numpy as np

__all__ = ["central_diff_grad", "rel_error"]


def central_diff_grad(f, x, h=1e-6) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` by second-order central differences.

    Perturbs each entry of ``x`` in place by ``+-h`` and combines
    ``(f(x + h e) - f(x - h e)) / (2 h)``.  ``x`` is left unchanged.
    """
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def rel_error(a, b, atol=1e-8) -> float:
    """Worst entrywise relative error ``|a - b| / (|b| + atol)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / (np.abs(b) + atol)))
