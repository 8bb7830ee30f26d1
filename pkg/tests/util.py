"""Shared helpers for the test suite.

The finite-difference and rotation-construction helpers here are written
independently of the library internals so they can serve as oracles.
"""

import numpy as np


def fd_grad(f, x, h=1e-6):
    """Central-difference gradient of scalar ``f`` w.r.t. every entry of ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def fd_dir(f, x, e, h=1e-6):
    """Central-difference directional derivative of matrix-valued ``f``."""
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    return (f(x + h * e) - f(x - h * e)) / (2.0 * h)


def rodrigues(axis, theta):
    """Rotation about ``axis`` by ``theta`` via the closed-form Rodrigues formula."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    return np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * (k @ k)


def random_rotation(rng, max_theta=np.pi):
    axis = rng.normal(size=3)
    theta = rng.uniform(0.0, max_theta)
    return rodrigues(axis, theta), theta


def rot_z(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_traceless(rng, scale=1.0):
    m = rng.normal(size=(3, 3)) * scale
    return m - np.trace(m) / 3.0 * np.eye(3)


def assert_close(actual, expected, tol, msg=""):
    err = np.max(np.abs(np.asarray(actual) - np.asarray(expected)))
    assert err <= tol, f"{msg} max abs err {err:.3e} > {tol:.1e}"
