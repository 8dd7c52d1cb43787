"""Small input-validation helpers shared by the estimator layer."""

from __future__ import annotations

import numpy as np

__all__ = ["check_parameter_points", "check_problem"]


def check_parameter_points(points, dim: int) -> np.ndarray:
    """Coerce parameter samples to a finite float array of shape (k, dim).

    Accepts a single point (shape (dim,)), a flat array when dim == 1,
    or a 2-D array with one row per point.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        if dim == 1:
            pts = pts.reshape(-1, 1)
        elif pts.shape == (dim,):
            pts = pts.reshape(1, -1)
        else:
            raise ValueError(
                f"cannot interpret 1-D input of length {pts.shape[0]} as points "
                f"in dimension {dim}")
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (k, {dim}), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("parameter points contain NaN or Inf")
    return pts


def check_problem(problem) -> None:
    """Verify the black-box problem contract is met."""
    for attr in ("n", "dim", "domain"):
        if not hasattr(problem, attr):
            raise TypeError(f"problem lacks required attribute {attr!r}")
    for method in ("residual", "precond_apply"):
        if not callable(getattr(problem, method, None)):
            raise TypeError(f"problem lacks required callable {method!r}")
    if len(problem.domain) != problem.dim:
        raise ValueError(
            f"domain has {len(problem.domain)} coordinate ranges for dim={problem.dim}")
