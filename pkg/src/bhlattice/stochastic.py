"""Ornstein-Uhlenbeck noise paths, the transformed random vector field, the
random absorbing radius, and pullback sampling of random attractors.

The noise intensity is called sigma throughout (the time step keeps the
name eps).  Paths are generated from t_max backwards so that extending the
pullback horizon leaves the realized noise near time zero unchanged.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from . import _grid
from .attractor import PointCloud
from .errors import HorizonTooShort
from .lattice import LatticeWindow, Params, derived_constants
from .truncation import truncated_forcing

OU_SCHEMA_VERSION = 1

# stationary law of dz + z dt = dW: Normal(0, 1/2)
STATIONARY_VARIANCE = 0.5


def ou_decay(h: float) -> float:
    """Exact one-step autoregression coefficient over a grid spacing h."""
    return float(np.exp(-h))


def ou_innovation_std(h: float) -> float:
    """Exact one-step innovation standard deviation over spacing h."""
    return float(np.sqrt((1.0 - np.exp(-2.0 * h)) * STATIONARY_VARIANCE))


@dataclasses.dataclass(frozen=True)
class OUPath:
    """Stationary Ornstein-Uhlenbeck path sampled on a uniform grid."""

    t_min: float
    t_max: float
    h_path: float
    z: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.z, dtype=float)
        n = int(round((self.t_max - self.t_min) / self.h_path)) + 1
        if arr.shape != (n,):
            raise ValueError("grid length inconsistent with the horizon")
        if not np.all(np.isfinite(arr)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "z", arr)
        self.z.setflags(write=False)

    @property
    def grid(self) -> np.ndarray:
        # anchored at t_max so that t = 0 is always an exact node
        n = self.z.size
        return self.t_max - self.h_path * (n - 1 - np.arange(n))

    def at(self, t: float) -> float:
        """Linear interpolation between grid nodes."""
        slack = 1e-9 * max(1.0, abs(self.t_min))
        if t < self.t_min - slack or t > self.t_max + slack:
            raise ValueError("time outside the path horizon")
        return float(np.interp(t, self.grid, self.z))


def ou_path(seed: int, t_min: float, t_max: float, h: float) -> OUPath:
    """Sample the stationary solution of dz + z dt = dW exactly on the grid.

    Generation runs from t_max backwards (the reversed stationary process is
    the same AR(1) recursion), so for a fixed seed the values on [t, t_max]
    do not change when t_min is pushed further into the past.
    """
    if not (t_min < t_max):
        raise ValueError("t_min must be below t_max")
    if h <= 0:
        raise ValueError("h must be positive")
    # snap the horizon outward to a whole number of grid cells
    n_seg = int(np.ceil((t_max - t_min) / h - 1e-12))
    t_min = t_max - n_seg * h
    n = n_seg + 1
    rng = np.random.default_rng(seed)
    a = ou_decay(h)
    s = ou_innovation_std(h)
    z = np.empty(n)
    z[-1] = np.sqrt(STATIONARY_VARIANCE) * rng.standard_normal()
    for j in range(n - 2, -1, -1):
        z[j] = a * z[j + 1] + s * rng.standard_normal()
    return OUPath(t_min, t_max, h, z, seed)


def ergodic_average(path: OUPath) -> float:
    """Trapezoidal time average of z over the path horizon."""
    horizon = path.t_max - path.t_min
    if horizon < 100:
        raise ValueError("path horizon too short for an ergodic average")
    return float(np.trapezoid(path.z, dx=path.h_path) / horizon)


@dataclasses.dataclass
class NoiseConfig:
    """Noise intensity and pullback-experiment controls."""

    sigma: float = 0.1
    h_path: float = 0.01
    pullback_T: float = 30.0
    realizations: int = 20
    master_seed: int = 2024

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.h_path <= 0 or self.pullback_T <= 0:
            raise ValueError("h_path and pullback_T must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be positive")


def realization_seed(master_seed: int, realization_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed,
                                  spawn_key=(realization_index,))


def random_field(p: Params, sigma: float, z_t: float,
                 U: LatticeWindow) -> LatticeWindow:
    """Transformed random vector field at noise value z_t.

    At sigma = 0 this reduces to the deterministic vector field (the cubic
    regroups componentwise).
    """
    lo, hi = U.support
    flo, fhi = p.f.support
    half = max(abs(lo), abs(hi), abs(flo), abs(fhi), 1) + 1
    grid = U.to_grid(half)
    f_grid = p.f.to_grid(half)
    out = _grid.random_field(p, sigma, z_t, grid, f_grid, "window")
    return LatticeWindow.from_grid(out, half)


def pullback_sample(p: Params, noise: NoiseConfig, realization_index: int,
                    dt: float, initial_cloud: PointCloud) -> PointCloud:
    """Evolve a cloud from time -pullback_T to 0 along one noise realization.

    The realization's OU path is generated from its derived seed; the
    nonautonomous transformed system is integrated pathwise with the
    classical fourth-order one-step method, sampling z by linear
    interpolation.  The returned time-0 cloud samples the random attractor.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    seed = realization_seed(noise.master_seed, realization_index)
    path = ou_path(seed, -noise.pullback_T, 0.0, noise.h_path)
    n_steps = int(round(noise.pullback_T / dt))
    dt = noise.pullback_T / n_steps
    mode = initial_cloud.space
    if mode == "truncated":
        f_grid = truncated_forcing(p, initial_cloud.half_width)
    else:
        f_grid = p.f.to_grid(initial_cloud.half_width)
    sigma = noise.sigma

    def rhs(t, U):
        return _grid.random_field(p, sigma, path.at(t), U, f_grid, mode)

    pts = _grid.rk4(rhs, initial_cloud.points, -noise.pullback_T, dt, n_steps)
    meta = dict(initial_cloud.meta)
    meta.update({
        "sigma": sigma,
        "seed": int(seed.entropy),
        "realization": realization_index,
        "pullback_T": noise.pullback_T,
    })
    return PointCloud(mode, initial_cloud.half_width, pts, meta=meta)


@dataclasses.dataclass(frozen=True)
class AbsorbingRadius:
    value: float
    truncation_bound: float


def absorbing_radius(p: Params, sigma: float, path: OUPath,
                     quad_tol: float) -> AbsorbingRadius:
    """Random absorbing radius squared for one noise realization.

    R = 1 + (||f||^2/(lam - lam*)) * int_{-inf}^0 exp(-2*sigma*z(s)
        - int_0^s 2*sigma*z(r) dr + (lam - lam*)*s) ds,
    evaluated by trapezoidal quadrature over the path grid; the reported
    truncation bound estimates the discarded tail below t_min.
    """
    dc = derived_constants(p)
    gap = p.lam - dc.lambda_star
    if path.t_max < -1e-12:
        raise ValueError("path must reach time 0")
    if np.exp(gap * path.t_min) > quad_tol:
        raise HorizonTooShort(
            f"path horizon {-path.t_min} too short for quad_tol={quad_tol}")
    fn2 = p.f.norm() ** 2
    if fn2 == 0.0:
        return AbsorbingRadius(1.0, 0.0)
    s = path.grid
    z = path.z
    # inner integral int_0^s 2*sigma*z dr accumulated from the right (s=0)
    seg = 0.5 * path.h_path * (z[1:] + z[:-1])
    back = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # int_s^0 z dr
    inner = -2.0 * sigma * back  # int_0^s 2 sigma z dr
    integrand = np.exp(-2.0 * sigma * z - inner + gap * s)
    integral = float(np.trapezoid(integrand, dx=path.h_path))
    tail = float(integrand[0]) / gap
    return AbsorbingRadius(1.0 + fn2 / gap * integral,
                           fn2 / gap * tail)


# -- serialization ----------------------------------------------------------


def ou_path_to_json(path: OUPath) -> str:
    doc = {
        "version": OU_SCHEMA_VERSION,
        "t_min": path.t_min,
        "t_max": path.t_max,
        "h_path": path.h_path,
        "seed": path.seed if isinstance(path.seed, int) else str(path.seed),
        "z": [float(v) for v in path.z],
    }
    return json.dumps(doc, separators=(",", ":"))


def ou_path_from_json(text: str) -> OUPath:
    doc = json.loads(text)
    if doc.get("version") != OU_SCHEMA_VERSION:
        raise ValueError(f"unsupported path schema version {doc.get('version')}")
    seed = doc["seed"]
    return OUPath(doc["t_min"], doc["t_max"], doc["h_path"],
                  np.array(doc["z"], dtype=float),
                  int(seed) if isinstance(seed, (int, str)) and str(seed).isdigit() else seed)
