"""Rotationally symmetric closed convex hypersurfaces as radial graphs.

A hypersurface in R^(n+1), symmetric about the polar axis and star-shaped
about the origin, is stored as a discrete profile rho(theta) on the uniform
grid theta_j = j pi / N.  Curvatures, support function and the flow
diagnostics all come from rho and its centered finite differences; even
reflection across the poles keeps the scheme second order there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .symfun import SpeedFunction, CurvatureVector, eval_bundle, eval_on_axisymmetric

__all__ = [
    "MeridianProfile",
    "CurvatureField",
    "ConvexityError",
    "Sphere",
    "Ellipsoid",
    "PerturbedSphere",
    "make_shape",
    "curvature_field",
    "selfsim_residual",
    "stationary_sphere_radius",
    "diagnostics",
    "sphere_identity_residuals",
    "write_profile_csv",
    "read_profile_csv",
]


class ConvexityError(ValueError):
    """A profile fails strict convexity; carries the first offending node."""

    def __init__(self, message: str, node: int):
        super().__init__(message)
        self.node = node


@dataclass(frozen=True)
class MeridianProfile:
    """Radial graph rho(theta_j), theta_j = j pi / N, of a closed rotationally
    symmetric hypersurface of dimension n in R^(n+1)."""

    n: int
    N: int
    rho: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("hypersurface dimension n must be >= 2")
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != (self.N + 1,):
            raise ValueError(f"rho must have N+1 = {self.N + 1} entries, got {rho.shape}")
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
            bad = int(np.argmax(~(np.isfinite(rho) & (rho > 0))))
            raise ValueError(f"rho must be positive and finite; node {bad} is {rho[bad]}")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.N + 1)

    def with_rho(self, rho: np.ndarray) -> "MeridianProfile":
        return MeridianProfile(self.n, self.N, rho)


@dataclass(frozen=True)
class CurvatureField:
    """Per-node principal curvatures, support value and |X|^2."""

    lam_merid: np.ndarray
    lam_par: np.ndarray
    u: np.ndarray
    normX2: np.ndarray

    @property
    def min_curvature(self) -> float:
        return float(min(np.min(self.lam_merid), np.min(self.lam_par)))

    @property
    def is_convex(self) -> bool:
        return self.min_curvature > 0.0


# --- shape constructors -----------------------------------------------------

@dataclass(frozen=True)
class Sphere:
    r: float


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid of revolution: equatorial semi-axis a, polar semi-axis b."""

    a: float
    b: float


@dataclass(frozen=True)
class PerturbedSphere:
    """Sphere of radius r with a Legendre-mode radial perturbation."""

    r: float
    mode: int
    amplitude: float


def make_shape(kind, n: int, N: int) -> MeridianProfile:
    """Sample the exact radial-graph formula of the shape on the grid and
    verify strict convexity of the result."""
    theta = np.linspace(0.0, math.pi, N + 1)
    if isinstance(kind, Sphere):
        if kind.r <= 0:
            raise ValueError("sphere radius must be positive")
        rho = np.full(N + 1, float(kind.r))
    elif isinstance(kind, Ellipsoid):
        a, b = float(kind.a), float(kind.b)
        if a <= 0 or b <= 0:
            raise ValueError("ellipsoid semi-axes must be positive")
        rho = a * b / np.sqrt(b ** 2 * np.sin(theta) ** 2 + a ** 2 * np.cos(theta) ** 2)
    elif isinstance(kind, PerturbedSphere):
        leg = np.polynomial.legendre.Legendre.basis(kind.mode)
        rho = kind.r * (1.0 + kind.amplitude * leg(np.cos(theta)))
    else:
        raise ValueError(f"unknown shape {kind!r}")
    p = MeridianProfile(n, N, rho)
    field = curvature_field(p)
    if not field.is_convex:
        lam = np.minimum(field.lam_merid, field.lam_par)
        node = int(np.argmax(lam <= 0))
        raise ConvexityError(
            f"shape {kind!r} is not strictly convex: curvature "
            f"{lam[node]:.3e} at node {node}", node)
    return p


# --- curvature and diagnostics ----------------------------------------------

def profile_derivatives(rho: np.ndarray, dtheta: float):
    """Centered second-order rho' and rho'' with even reflection at the
    poles (ghost values rho_{-1} = rho_1, rho_{N+1} = rho_{N-1})."""
    rp = np.empty_like(rho)
    rpp = np.empty_like(rho)
    rp[1:-1] = (rho[2:] - rho[:-2]) / (2.0 * dtheta)
    rp[0] = 0.0
    rp[-1] = 0.0
    rpp[1:-1] = (rho[2:] - 2.0 * rho[1:-1] + rho[:-2]) / dtheta ** 2
    rpp[0] = 2.0 * (rho[1] - rho[0]) / dtheta ** 2
    rpp[-1] = 2.0 * (rho[-2] - rho[-1]) / dtheta ** 2
    return rp, rpp


def curvatures_from_arrays(rho: np.ndarray, theta: np.ndarray, dtheta: float):
    """(lam_merid, lam_par, w) with w = sqrt(rho^2 + rho'^2); the parallel
    curvature takes its meridian limit at the poles."""
    rp, rpp = profile_derivatives(rho, dtheta)
    w2 = rho ** 2 + rp ** 2
    w = np.sqrt(w2)
    lam_merid = (rho ** 2 + 2.0 * rp ** 2 - rho * rpp) / (w2 * w)
    lam_par = np.empty_like(rho)
    s = np.sin(theta[1:-1])
    c = np.cos(theta[1:-1])
    lam_par[1:-1] = (rho[1:-1] * s - rp[1:-1] * c) / (rho[1:-1] * s * w[1:-1])
    lam_par[0] = lam_merid[0]
    lam_par[-1] = lam_merid[-1]
    return lam_merid, lam_par, w


def curvature_field(p: MeridianProfile) -> CurvatureField:
    dtheta = math.pi / p.N
    lam_merid, lam_par, w = curvatures_from_arrays(p.rho, p.theta, dtheta)
    if not np.all(np.isfinite(lam_merid)) or not np.all(np.isfinite(lam_par)):
        raise ConvexityError("non-finite curvature values",
                             int(np.argmax(~np.isfinite(lam_merid))))
    u = p.rho ** 2 / w
    return CurvatureField(lam_merid, lam_par, u, p.rho ** 2)


def _require_convex(p: MeridianProfile) -> CurvatureField:
    field = curvature_field(p)
    if not field.is_convex:
        lam = np.minimum(field.lam_merid, field.lam_par)
        node = int(np.argmax(lam <= 0))
        raise ConvexityError(f"profile is not strictly convex at node {node}", node)
    return field


def selfsim_residual(p: MeridianProfile, F: SpeedFunction, C: float):
    """Grid residual of the self-similar equation F + C = <X, nu>:
    returns (max |r|, mean |r|)."""
    field = _require_convex(p)
    fv, _, _ = eval_on_axisymmetric(F, field.lam_merid, field.lam_par, p.n)
    r = fv + C - field.u
    return float(np.max(np.abs(r))), float(np.mean(np.abs(r)))


def stationary_sphere_radius(F: SpeedFunction, C: float, n: int) -> float:
    """Unique root of g(r) = F(1/r, ..., 1/r) + C - r for C <= 0; g is
    strictly decreasing from +inf to -inf."""
    if C > 0:
        raise ValueError("C must be <= 0")
    F1 = F.value_at_ones(n)
    if F1 <= 0:
        raise ValueError(f"F = {F} is not positive on the diagonal")
    beta = F.beta

    def g(r):
        return F1 * r ** (-beta) + C - r

    lo, hi = 1e-8, max(1.0, F1 ** (1.0 / (1.0 + beta)))
    tries = 0
    while g(hi) > 0:
        hi *= 2.0
        tries += 1
        if tries > 200:
            raise RuntimeError("bracket expansion failed")
    while g(lo) < 0:
        lo *= 0.5
        tries += 1
        if tries > 400:
            raise RuntimeError("bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    r = 0.5 * (lo + hi)
    if abs(g(r)) > 1e-12 * max(1.0, r):
        # polish with a few secant steps
        for _ in range(8):
            gr = g(r)
            dr = -gr / (-beta * F1 * r ** (-beta - 1.0) - 1.0)
            r += dr
        if abs(g(r)) > 1e-12 * max(1.0, r):
            raise RuntimeError(f"root refinement stalled at g({r}) = {g(r)}")
    return float(r)


def diagnostics(p: MeridianProfile, F: SpeedFunction):
    """Per-node maximum-principle quantities:
    Z = F tr b - n (beta-1)/(2 beta) |X|^2 and
    W = F / lambda_min - (beta-1)/(2 beta) |X|^2."""
    field = _require_convex(p)
    beta = F.beta
    fv, _, _ = eval_on_axisymmetric(F, field.lam_merid, field.lam_par, p.n)
    trb = 1.0 / field.lam_merid + (p.n - 1) / field.lam_par
    lam_min = np.minimum(field.lam_merid, field.lam_par)
    coeff = (beta - 1.0) / (2.0 * beta)
    Z = fv * trb - p.n * coeff * field.normX2
    W = fv / lam_min - coeff * field.normX2
    return Z, W


def sphere_identity_residuals(F: SpeedFunction, C: float, n: int):
    """On the stationary sphere all gradient terms of the structure equations
    drop and two closed-form combinations must vanish:
    res1 = beta F - (sum F_i lambda_i^2)(F + C) and
    res5 = sum F_i - beta F (F + C), at lambda = (1/r*, ..., 1/r*)."""
    r_star = stationary_sphere_radius(F, C, n)
    lam = CurvatureVector((1.0 / r_star,) * n)
    bun = eval_bundle(F, lam)
    arr = lam.as_array()
    res1 = F.beta * bun.value - float(np.sum(bun.gradient * arr ** 2)) * (bun.value + C)
    res5 = float(np.sum(bun.gradient)) - F.beta * bun.value * (bun.value + C)
    return res1, res5


# --- serialization ----------------------------------------------------------

def write_profile_csv(p: MeridianProfile, path: str) -> None:
    """CSV (theta, rho) with shortest round-trip float formatting."""
    lines = ["theta,rho"]
    for th, r in zip(p.theta, p.rho):
        lines.append(f"{float(th)!r},{float(r)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_profile_csv(path: str, n: int) -> MeridianProfile:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "theta,rho":
            raise ValueError(f"unexpected header {header!r}")
        rho = []
        for line in fh:
            line = line.strip()
            if line:
                rho.append(float(line.split(",")[1]))
    return MeridianProfile(n, len(rho) - 1, np.array(rho))
