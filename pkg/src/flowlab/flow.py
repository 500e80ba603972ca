"""Explicit integration of the contracting flow X_t = -F nu on meridian
profiles, raw and normalized, with a closed-form shrinking-sphere oracle.

The radial graph turns the normal speed into d(rho)/dt = -F w / rho with
w = sqrt(rho^2 + rho'^2); time stepping is classical four-stage Runge-Kutta
under a parabolic CFL restriction, and every stage re-evaluates curvatures.
Leaving the positive cone aborts the run rather than clamping it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geom import (
    ConvexityError,
    MeridianProfile,
    curvature_field,
    curvatures_from_arrays,
    stationary_sphere_radius,
)
from .symfun import SpeedFunction, eval_on_axisymmetric

__all__ = [
    "FlowConfig",
    "FlowRecord",
    "FlowTrace",
    "TRACE_COLUMNS",
    "flow_step",
    "run_flow",
    "shrinking_sphere_oracle",
    "roundness",
]

TRACE_COLUMNS = (
    "t", "step", "mean_radius", "roundness", "selfsim_residual_max",
    "Z_min", "Z_max", "W_min", "W_max", "min_curvature",
)

STATUSES = ("Converged", "Shrunk", "StepLimit", "ConvexityLost")


@dataclass(frozen=True)
class FlowConfig:
    F: SpeedFunction
    n: int
    N: int
    cfl: float = 0.5
    mode: str = "raw"  # "raw" or "normalized"
    C_shift: float = 0.0  # enters diagnostics/residuals only, not the speed
    max_steps: int | None = None
    max_time: float | None = None
    roundness_tol: float | None = None
    min_mean_radius: float | None = None
    record_every: int = 20

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl coefficient must be in (0, 1], got {self.cfl}")
        if self.N < 16:
            raise ValueError(f"N must be >= 16, got {self.N}")
        if self.mode not in ("raw", "normalized"):
            raise ValueError(f"mode must be 'raw' or 'normalized', got {self.mode!r}")
        if all(v is None for v in (self.max_steps, self.max_time,
                                   self.roundness_tol, self.min_mean_radius)):
            raise ValueError("at least one stop criterion is required")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class FlowRecord:
    t: float
    step: int
    mean_radius: float
    roundness: float
    selfsim_residual_max: float
    Z_min: float
    Z_max: float
    W_min: float
    W_max: float
    min_curvature: float

    def row(self):
        return (self.t, self.step, self.mean_radius, self.roundness,
                self.selfsim_residual_max, self.Z_min, self.Z_max,
                self.W_min, self.W_max, self.min_curvature)


@dataclass
class FlowTrace:
    records: list[FlowRecord] = field(default_factory=list)
    status: str = "StepLimit"
    steps: int = 0
    wall_time_ms: float = 0.0
    final_profile: MeridianProfile | None = None

    def csv_text(self) -> str:
        lines = [",".join(TRACE_COLUMNS)]
        for rec in self.records:
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                                  for v in rec.row()))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def summary(self) -> dict:
        last = self.records[-1] if self.records else None
        return {
            "status": self.status,
            "steps": self.steps,
            "final_roundness": last.roundness if last else None,
            "final_residual": last.selfsim_residual_max if last else None,
            "final_mean_radius": last.mean_radius if last else None,
            "final_time": last.t if last else None,
            "wall_time_ms": self.wall_time_ms,
        }


def _weights(theta: np.ndarray, n: int) -> np.ndarray:
    return np.sin(theta) ** (n - 1)


def mean_radius(p: MeridianProfile) -> float:
    """sin^(n-1)(theta)-weighted mean of rho (the poles carry zero weight)."""
    w = _weights(p.theta, p.n)
    return float(np.sum(w * p.rho) / np.sum(w))


def roundness(p: MeridianProfile) -> float:
    """(global max principal curvature) / (global min) - 1; zero only on
    round spheres."""
    f = curvature_field(p)
    hi = max(float(np.max(f.lam_merid)), float(np.max(f.lam_par)))
    lo = f.min_curvature
    if lo <= 0:
        raise ConvexityError("roundness undefined for non-convex profile",
                             int(np.argmin(np.minimum(f.lam_merid, f.lam_par))))
    return hi / lo - 1.0


def _curvatures_fused(rho, sin_safe, cos_t, inv_dtheta2, n):
    """Curvatures with precomputed trig; `sin_safe` is sin(theta) with the
    pole entries replaced by 1 so the parallel formula never divides by zero
    (the pole values are overwritten with the meridian limit anyway).
    Raises outside the positive cone; returns (lam_m, lam_p, w)."""
    rho_min = float(rho.min())
    if not rho_min > 0:  # also catches NaN
        raise ConvexityError("rho reached non-positive values",
                             int(np.argmin(rho)))
    rp = np.empty_like(rho)
    rpp = np.empty_like(rho)
    rp[1:-1] = (rho[2:] - rho[:-2]) * (0.5 * math.sqrt(inv_dtheta2))
    rp[0] = rp[-1] = 0.0
    rpp[1:-1] = (rho[2:] - 2.0 * rho[1:-1] + rho[:-2]) * inv_dtheta2
    rpp[0] = 2.0 * (rho[1] - rho[0]) * inv_dtheta2
    rpp[-1] = 2.0 * (rho[-2] - rho[-1]) * inv_dtheta2
    rho2 = rho * rho
    w2 = rho2 + rp * rp
    w = np.sqrt(w2)
    lam_m = (rho2 + 2.0 * rp * rp - rho * rpp) / (w2 * w)
    rs = rho * sin_safe
    lam_p = (rs - rp * cos_t) / (rs * w)
    lam_p[0] = lam_m[0]
    lam_p[-1] = lam_m[-1]
    lam_min = min(float(lam_m.min()), float(lam_p.min()))
    if not lam_min > 0:  # also catches NaN
        raise ConvexityError("principal curvature left the positive cone",
                             int(np.argmin(np.minimum(lam_m, lam_p))))
    return lam_m, lam_p, w


def _rhs_fused(rho, sin_safe, cos_t, inv_dtheta2, F, n):
    lam_m, lam_p, w = _curvatures_fused(rho, sin_safe, cos_t, inv_dtheta2, n)
    fv, _, _ = eval_on_axisymmetric(F, lam_m, lam_p, n)
    return -fv * w / rho


def _sin_safe(theta: np.ndarray) -> np.ndarray:
    s = np.sin(theta)
    s[0] = s[-1] = 1.0
    return s


def _rhs(rho: np.ndarray, theta: np.ndarray, dtheta: float,
         F: SpeedFunction, n: int) -> np.ndarray:
    """Radial speed -F w / rho; raises ConvexityError outside the cone."""
    return _rhs_fused(rho, _sin_safe(theta), np.cos(theta), dtheta ** -2, F, n)


def flow_step(p: MeridianProfile, F: SpeedFunction, dt: float) -> MeridianProfile:
    """One classical four-stage explicit step of d(rho)/dt = -F w / rho."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    theta = p.theta
    dtheta = math.pi / p.N
    rho = p.rho
    k1 = _rhs(rho, theta, dtheta, F, p.n)
    k2 = _rhs(rho + 0.5 * dt * k1, theta, dtheta, F, p.n)
    k3 = _rhs(rho + 0.5 * dt * k2, theta, dtheta, F, p.n)
    k4 = _rhs(rho + dt * k3, theta, dtheta, F, p.n)
    out = rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if np.any(out <= 0):
        raise ConvexityError("rho became non-positive after step",
                             int(np.argmax(out <= 0)))
    return p.with_rho(out)


def _record(rho, lam_m, lam_p, w, fv, n, beta, C, t, step, mean_r):
    lam_min = np.minimum(lam_m, lam_p)
    res = np.abs(fv + C - rho ** 2 / w)
    trb = 1.0 / lam_m + (n - 1) / lam_p
    coeff = (beta - 1.0) / (2.0 * beta)
    Z = fv * trb - n * coeff * rho ** 2
    W = fv / lam_min - coeff * rho ** 2
    return FlowRecord(
        t=t, step=step,
        mean_radius=mean_r,
        roundness=(max(float(np.max(lam_m)), float(np.max(lam_p)))
                   / float(np.min(lam_min)) - 1.0),
        selfsim_residual_max=float(np.max(res)),
        Z_min=float(np.min(Z)), Z_max=float(np.max(Z)),
        W_min=float(np.min(W)), W_max=float(np.max(W)),
        min_curvature=float(np.min(lam_min)),
    )


def run_flow(config: FlowConfig, initial: MeridianProfile) -> FlowTrace:
    """Step the flow until a stop criterion fires.  In normalized mode the
    profile is rescaled after every step so its weighted mean radius stays
    pinned at the stationary-sphere radius, making that sphere an exact fixed
    point of the discrete map."""
    if initial.n != config.n or initial.N != config.N:
        raise ValueError("initial profile does not match config (n, N)")
    F = config.F
    n = config.n
    beta = F.beta
    theta = initial.theta
    dtheta = math.pi / config.N
    inv_dtheta2 = dtheta ** -2
    sin_t = _sin_safe(theta)
    cos_t = np.cos(theta)
    wq = _weights(theta, n)
    wq_sum = float(np.sum(wq))
    r_star = stationary_sphere_radius(F, 0.0, n) \
        if config.mode == "normalized" else None

    trace = FlowTrace()
    started = time.perf_counter()
    rho = initial.rho.copy()
    if config.mode == "normalized":
        rho *= r_star / (float(wq.dot(rho)) / wq_sum)
    t = 0.0
    step = 0
    try:
        while True:
            # one curvature/speed evaluation feeds the stop checks, the
            # observables, the CFL estimate, and the first RK stage
            lam_m, lam_p, w = _curvatures_fused(rho, sin_t, cos_t,
                                                inv_dtheta2, n)
            lam_min = min(float(lam_m.min()), float(lam_p.min()))
            fv, dfm, dfp = eval_on_axisymmetric(F, lam_m, lam_p, n)
            mean_r = float(wq.dot(rho)) / wq_sum
            lam_max = max(float(lam_m.max()), float(lam_p.max()))
            rnd = lam_max / lam_min - 1.0

            status = None
            if config.roundness_tol is not None and rnd <= config.roundness_tol:
                status = "Converged"
            elif (config.min_mean_radius is not None
                  and mean_r <= config.min_mean_radius):
                status = "Shrunk"
            elif config.max_steps is not None and step >= config.max_steps:
                status = "StepLimit"
            elif config.max_time is not None and t >= config.max_time:
                status = "StepLimit"

            if status is not None or step % config.record_every == 0:
                trace.records.append(_record(rho, lam_m, lam_p, w, fv, n, beta,
                                             config.C_shift, t, step, mean_r))
            if status is not None:
                trace.status = status
                break

            # interior rows diffuse with coefficient dF/dlam_merid; at the
            # poles the parallel term turns into a second diffusion
            # (cot(theta) d_theta -> d_theta^2), but the one-sided ghost
            # stencil there has half the interior eigenvalue, hence the /2
            met = (rho / w) ** 2
            D_int = float((dfm * met).max())
            D_pole = max(
                (dfm[0] + (n - 1) * dfp[0]) * met[0],
                (dfm[-1] + (n - 1) * dfp[-1]) * met[-1]) * 0.5
            D_max = max(D_int, D_pole)
            if D_max <= 0 or not math.isfinite(D_max):
                raise ConvexityError("parabolic coefficient is not positive",
                                     int(np.argmax(~np.isfinite(dfm))))
            dt = config.cfl * dtheta ** 2 * float(rho.min()) ** 2 / D_max
            if config.max_time is not None:
                dt = min(dt, config.max_time - t + 1e-300)

            k1 = -fv * w / rho
            k2 = _rhs_fused(rho + 0.5 * dt * k1, sin_t, cos_t, inv_dtheta2, F, n)
            k3 = _rhs_fused(rho + 0.5 * dt * k2, sin_t, cos_t, inv_dtheta2, F, n)
            k4 = _rhs_fused(rho + dt * k3, sin_t, cos_t, inv_dtheta2, F, n)
            rho = rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if config.mode == "normalized":
                rho *= r_star / (float(wq.dot(rho)) / wq_sum)
            t += dt
            step += 1
    except ConvexityError:
        trace.status = "ConvexityLost"
    trace.steps = step
    trace.final_profile = initial.with_rho(rho)
    trace.wall_time_ms = (time.perf_counter() - started) * 1e3
    return trace


def shrinking_sphere_oracle(F: SpeedFunction, n: int, r0: float, t: float) -> float:
    """Exact radius of the shrinking-sphere solution of dr/dt = -F(1/r, ...):
    r(t) = (r0^(1+beta) - (1+beta) F(1, ..., 1) t)^(1/(1+beta)).

    Only meaningful before the extinction time T = r0^(1+beta)/((1+beta) F(1))."""
    beta = F.beta
    F1 = F.value_at_ones(n)
    T = r0 ** (1.0 + beta) / ((1.0 + beta) * F1)
    if t >= T:
        raise ValueError(f"t = {t} is at or past the extinction time T = {T}")
    return float((r0 ** (1.0 + beta) - (1.0 + beta) * F1 * t) ** (1.0 / (1.0 + beta)))
