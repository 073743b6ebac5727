"""Dense vectorized kernels on the index grid [-K, K].

All public library types delegate their numerics here.  Arrays carry the
state in the last axis (length 2K+1); any number of leading batch axes is
allowed, so a whole point cloud evolves in one call.

Two boundary closures exist:
  * "window": the bi-infinite stencil applied to a zero-padded window; the
    two components the stencil would write just outside the grid are clipped.
  * "truncated": the (2m+1)-dimensional Dirichlet system, whose second
    difference is the composition of the clipped first differences (its two
    corner rows differ from the clipped infinite stencil).
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergence, NonFinite


def shift_up(U: np.ndarray) -> np.ndarray:
    """Values of the neighbor i+1, zero beyond the right edge."""
    out = np.zeros_like(U)
    out[..., :-1] = U[..., 1:]
    return out


def shift_down(U: np.ndarray) -> np.ndarray:
    """Values of the neighbor i-1, zero beyond the left edge."""
    out = np.zeros_like(U)
    out[..., 1:] = U[..., :-1]
    return out


def d_plus(U: np.ndarray) -> np.ndarray:
    return shift_up(U) - U


def d_minus(U: np.ndarray) -> np.ndarray:
    return shift_down(U) - U


def laplacian(U: np.ndarray, mode: str) -> np.ndarray:
    if mode == "window":
        return -shift_down(U) + 2.0 * U - shift_up(U)
    if mode == "truncated":
        return d_plus(d_minus(U))
    raise ValueError(f"unknown mode {mode!r}")


def field(p, U: np.ndarray, f_grid: np.ndarray, mode: str) -> np.ndarray:
    """Burgers-Huxley vector field on the grid.

    The reaction cubic u(1-u)(u-gamma) is evaluated in expanded form with
    the same term grouping as the transformed random field, so the latter
    reduces to this function exactly (bit for bit) at noise intensity zero.
    """
    lap = laplacian(U, mode)
    if p.laplacian_sign == "continuum":
        lap = -lap
    return (
        p.nu * lap
        - p.alpha * U * d_minus(U)
        - p.beta * U**3
        + p.beta * (1.0 + p.gamma) * U**2
        - p.beta * p.gamma * U
        - p.lam * U
        + f_grid
    )


def random_field(p, sigma: float, z: float, U: np.ndarray, f_grid: np.ndarray,
                 mode: str) -> np.ndarray:
    """Transformed random vector field with noise intensity sigma at noise
    value z, exactly as displayed for the conjugated system."""
    lap = laplacian(U, mode)
    if p.laplacian_sign == "continuum":
        lap = -lap
    e = np.exp(sigma * z)
    return (
        p.nu * lap
        - p.alpha * e * U * d_minus(U)
        - p.beta * e * e * U**3
        + p.beta * (1.0 + p.gamma) * e * U**2
        - p.beta * p.gamma * U
        - p.lam * U
        + f_grid / e
        + sigma * z * U
    )


def row_norms(U: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(U * U, axis=-1))


def picard_solve(field_fn, u_prev: np.ndarray, eps: float, tol: float,
                 max_iter: int):
    """Solve y = u_prev + eps*F(y) by iterating the contraction map.

    Returns (y, residual, iterations); the residual is the exact defect
    ||y - u_prev - eps*F(y)|| (max over batch rows), certified by one field
    evaluation per iteration.
    """
    y = u_prev
    Fy = field_fn(y)
    for it in range(1, max_iter + 1):
        y_new = u_prev + eps * Fy
        Fy_new = field_fn(y_new)
        resid = float(np.max(row_norms(y_new - u_prev - eps * Fy_new)))
        y, Fy = y_new, Fy_new
        if not np.isfinite(resid):
            raise NonFinite("fixed-point iterate overflowed")
        if resid <= tol:
            return y, resid, it
    raise NoConvergence(max_iter, resid)


def field_jacobian(p, U: np.ndarray, mode: str) -> np.ndarray:
    """Dense Jacobian of the vector field at a single state U (1-D)."""
    n = U.shape[-1]
    lap_mat = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
               - np.diag(np.ones(n - 1), -1))
    if mode == "truncated":
        lap_mat[-1, -1] = 1.0
    if p.laplacian_sign == "continuum":
        lap_mat = -lap_mat
    dm_mat = -np.eye(n) + np.diag(np.ones(n - 1), -1)
    jac = p.nu * lap_mat
    jac -= p.alpha * (np.diag(dm_mat @ U) + np.diag(U) @ dm_mat)
    reac = -3.0 * U**2 + 2.0 * (1.0 + p.gamma) * U - p.gamma
    jac += p.beta * np.diag(reac)
    jac -= p.lam * np.eye(n)
    return jac


def newton_solve(p, u_prev: np.ndarray, eps: float, f_grid: np.ndarray,
                 mode: str, tol: float, max_iter: int):
    """Newton iteration for the implicit relation; single state only.

    Provided for step sizes beyond the contraction-safe cap; none of the
    contraction guarantees apply here.
    """
    y = u_prev.copy()
    for it in range(1, max_iter + 1):
        res_vec = y - u_prev - eps * field(p, y, f_grid, mode)
        resid = float(np.linalg.norm(res_vec))
        if not np.isfinite(resid):
            raise NonFinite("Newton iterate overflowed")
        if resid <= tol:
            return y, resid, it
        jac = np.eye(y.size) - eps * field_jacobian(p, y, mode)
        y = y - np.linalg.solve(jac, res_vec)
    raise NoConvergence(max_iter, resid)


def rk4(field_fn, U: np.ndarray, t0: float, dt: float, n_steps: int) -> np.ndarray:
    """Classical fourth-order one-step method for dU/dt = field_fn(t, U)."""
    t = t0
    for _ in range(n_steps):
        k1 = field_fn(t, U)
        k2 = field_fn(t + 0.5 * dt, U + 0.5 * dt * k1)
        k3 = field_fn(t + 0.5 * dt, U + 0.5 * dt * k2)
        k4 = field_fn(t + dt, U + dt * k3)
        U = U + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    if not np.all(np.isfinite(U)):
        raise NonFinite("integrator state overflowed; reduce the step size")
    return U
