"""Matrix constructions and pointwise inequality margins, with randomized
verification campaigns.

Every inequality is evaluated as a signed margin (negative = violated) plus a
natural scale, so tolerances are dimensionless even though the curvature
samples span six orders of magnitude.  Campaigns are deterministic functions
of (lemma_id, parameters, samples, seed); sample generation uses a
counter-based generator and evaluation runs in fixed-size chunks, so results
do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .symfun import (
    CurvatureVector,
    SpeedFunction,
    elementary_all,
    eval_bundle,
    sigma,
)

__all__ = [
    "SymmetricMatrixValue",
    "InequalityReport",
    "NumericError",
    "build_D",
    "build_A",
    "psd_margin",
    "det_identity_residual",
    "key_inequality_margin",
    "key_inequality_margin_qfm",
    "condition_margins",
    "lamij_margin",
    "rigidity_terms",
    "cs_margin",
    "condmin_value",
    "condmin_kkt_point",
    "thm63_factor_margin",
    "sk_loghess_margin",
    "run_campaign",
    "LEMMA_IDS",
]

PSD_TOL = 1e-10
CHUNK = 8192


class NumericError(RuntimeError):
    """Raised when a numerical routine fails (non-finite input, eigensolve)."""


def thread_count() -> int:
    """Worker cap from FLOWLAB_THREADS; 0 or unset means auto (single worker
    is always a correct choice since aggregation is order-independent)."""
    raw = os.environ.get("FLOWLAB_THREADS", "0")
    try:
        v = int(raw)
    except ValueError:
        return 1
    if v <= 0:
        return min(4, os.cpu_count() or 1)
    return v


@dataclass(frozen=True)
class SymmetricMatrixValue:
    """Dense symmetric matrix, built symmetric entry by entry."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("matrix must be exactly symmetric")
        object.__setattr__(self, "entries", m)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


# --- matrix constructions ---------------------------------------------------

def build_D(lam: CurvatureVector, k: int, m: int) -> SymmetricMatrixValue:
    """(m+1)x(m+1) bordered matrix of sigma_k and its one- and two-index
    exclusions; semi-positive definite on the positive cone for m = n."""
    n = lam.n
    if not (1 <= k <= n):
        raise ValueError(f"k={k} outside 1..{n}")
    if not (1 <= m <= n):
        raise ValueError(f"m={m} outside 1..{n}")
    d = np.zeros((m + 1, m + 1))
    d[0, 0] = sigma(lam, k)
    for i in range(1, m + 1):
        si = sigma(lam, k, (i,))
        d[0, i] = d[i, 0] = si
        d[i, i] = si
        for j in range(i + 1, m + 1):
            sij = sigma(lam, k, (i, j))
            d[i, j] = d[j, i] = sij
    return SymmetricMatrixValue(d)


def build_A(lam: CurvatureVector, k: int) -> SymmetricMatrixValue:
    """n x n matrix with sigma_{k-1;i}/lambda_i on the diagonal and
    sigma_{k-2;ij} off it."""
    n = lam.n
    if not (1 <= k <= n):
        raise ValueError(f"k={k} outside 1..{n}")
    arr = lam.as_array()
    a = np.zeros((n, n))
    for i in range(1, n + 1):
        a[i - 1, i - 1] = sigma(lam, k - 1, (i,)) / arr[i - 1]
        for j in range(i + 1, n + 1):
            v = sigma(lam, k - 2, (i, j))
            a[i - 1, j - 1] = a[j - 1, i - 1] = v
    return SymmetricMatrixValue(a)


def psd_margin(M: SymmetricMatrixValue) -> float:
    """Minimum eigenvalue via a symmetric eigensolve.  The caller declares
    PSD when the margin is >= -PSD_TOL * frobenius(M)."""
    m = M.entries
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    try:
        return float(np.linalg.eigvalsh(m)[0])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolve failed: {exc}") from exc


def det_identity_residual(lam: CurvatureVector, k: int, m: int) -> float:
    """det(A~_m) - sigma_k^(m-1) det(D_m), where A~ is the congruent form of
    sigma_k A - xi xi^T restricted to the leading m indices."""
    n = lam.n
    if not (1 <= k <= n) or not (1 <= m <= n):
        raise ValueError(f"(k={k}, m={m}) outside 1..{n}")
    sk = sigma(lam, k)
    at = np.zeros((m, m))
    for i in range(1, m + 1):
        si = sigma(lam, k, (i,))
        at[i - 1, i - 1] = si * (sk - si)
        for j in range(i + 1, m + 1):
            v = sk * sigma(lam, k, (i, j)) - si * sigma(lam, k, (j,))
            at[i - 1, j - 1] = at[j - 1, i - 1] = v
    D = build_D(lam, k, m)
    return float(np.linalg.det(at) - sk ** (m - 1) * np.linalg.det(D.entries))


# --- pointwise margins ------------------------------------------------------

def key_inequality_margin(F: SpeedFunction, lam: CurvatureVector, y) -> float:
    """Quadratic form sum (1/lambda_i) dlogF_i y_i^2 + sum d2logF_ij y_i y_j;
    nonnegative exactly when log F is convex in logarithmic coordinates."""
    y = np.asarray(y, dtype=float)
    bun = eval_bundle(F, lam)
    if not bun.has_log:
        raise ValueError(f"F = {F} is not positive at {lam.values}")
    arr = lam.as_array()
    return float(np.sum(bun.log_gradient / arr * y ** 2) + y @ bun.log_hessian @ y)


def key_inequality_margin_qfm(lam: CurvatureVector, k: int, y) -> float:
    """The sigma_k-specific form of the same quadratic: exclusion ratios on
    the left, squared gradient term on the right."""
    y = np.asarray(y, dtype=float)
    arr = lam.as_array()
    n = lam.n
    sk = sigma(lam, k)
    s1 = np.array([sigma(lam, k - 1, (i,)) for i in range(1, n + 1)])
    total = float(np.sum(s1 / (arr * sk) * y ** 2))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                total += sigma(lam, k - 2, (i, j)) / sk * y[i - 1] * y[j - 1]
    total -= float(np.sum(s1 / sk * y)) ** 2
    return total


@dataclass(frozen=True)
class ConditionMargins:
    monotone: float      # min(F, min_i dF/dlambda_i)
    quotient: float      # min over pairs of (l_i F_i - l_j F_j)/(l_i - l_j)
    key: float           # key-inequality margin at y
    scaling_residual: float  # |F(t lam)/F(lam) - t^beta| spot check


def condition_margins(F: SpeedFunction, lam: CurvatureVector, y) -> ConditionMargins:
    """Signed margins of the positivity, quotient-monotonicity and
    key-inequality requirements; all nonnegative for admissible speeds."""
    bun = eval_bundle(F, lam)
    arr = lam.as_array()
    n = lam.n
    m_i = min(bun.value, float(np.min(bun.gradient)))
    thresh = 1e-8 * float(np.max(arr))
    m_iii = math.inf
    for p in range(n):
        for q in range(p + 1, n):
            gap = arr[p] - arr[q]
            if abs(gap) < thresh:
                v = bun.gradient[p] + arr[p] * (bun.hessian[p, p] - bun.hessian[p, q])
            else:
                v = (arr[p] * bun.gradient[p] - arr[q] * bun.gradient[q]) / gap
            m_iii = min(m_iii, float(v))
    if bun.value > 0:
        m_iv = key_inequality_margin(F, lam, y)
    else:
        m_iv = -math.inf
    t = 1.7
    scaled = eval_bundle(F, CurvatureVector(tuple(t * v for v in lam.values)))
    if bun.value != 0.0:
        res = abs(scaled.value / bun.value - t ** F.beta) / t ** F.beta
    else:
        res = abs(scaled.value)
    return ConditionMargins(m_i, m_iii, m_iv, float(res))


def lamij_margin(F: SpeedFunction, lam: CurvatureVector, i: int, j: int) -> float:
    """[F_i (l_i-l_1)^2 - F_j (l_j-l_1)^2] / [(l_i-l_1)(l_j-l_1)(l_i-l_j)],
    with the analytic limit when l_i = l_j.  Requires a strict gap at the
    bottom of the spectrum and i > j > 1 (1-based)."""
    arr = lam.as_array()
    n = lam.n
    if not (1 < j < i <= n):
        raise ValueError(f"need i > j > 1, got i={i}, j={j}")
    if not arr[0] < arr[1]:
        raise ValueError("lambda_1 must be strictly minimal")
    bun = eval_bundle(F, lam)
    l1 = arr[0]
    li, lj = arr[i - 1], arr[j - 1]
    gi, gj = bun.gradient[i - 1], bun.gradient[j - 1]
    thresh = 1e-8 * float(np.max(arr))
    if abs(li - lj) < thresh:
        # limit of the quotient as lambda_i -> lambda_j
        hii = bun.hessian[i - 1, i - 1]
        hij = bun.hessian[i - 1, j - 1]
        return float(hii - hij + 2.0 * gi / (li - l1))
    num = gi * (li - l1) ** 2 - gj * (lj - l1) ** 2
    den = (li - l1) * (lj - l1) * (li - lj)
    return float(num / den)


def rigidity_terms(F: SpeedFunction, lam: CurvatureVector, C: float):
    """The two rigidity scalars: the maximum-point term J1 and the trace-form
    term L1.  Both vanish exactly on constant curvature vectors."""
    bun = eval_bundle(F, lam)
    arr = lam.as_array()
    n = lam.n
    beta = F.beta
    l1 = arr[0]
    ratio = arr / l1 - 1.0
    J1 = float((beta - 1.0) / beta * np.sum(bun.gradient * ratio)
               - C * np.sum(bun.gradient * arr * ratio))
    trb = float(np.sum(1.0 / arr))
    L1 = float((beta - 1.0) * bun.value * trb
               - n * (beta - 1.0) / beta * np.sum(bun.gradient)
               + C * (n * beta * bun.value - trb * np.sum(bun.gradient * arr ** 2)))
    return J1, L1


def cs_margin(F: SpeedFunction, lam: CurvatureVector, h_col) -> float:
    """sum (1/lambda_i) dlogF_i h_i^2 - (1/beta) (sum dlogF_i h_i)^2;
    nonnegative by weighted Cauchy-Schwarz, zero when h is radial."""
    h = np.asarray(h_col, dtype=float)
    bun = eval_bundle(F, lam)
    if not bun.has_log:
        raise ValueError(f"F = {F} is not positive at {lam.values}")
    arr = lam.as_array()
    g = bun.log_gradient
    return float(np.sum(g / arr * h ** 2) - (np.sum(g * h)) ** 2 / F.beta)


def condmin_value(t, m_index: int, alpha: float, k: float) -> float:
    """Closed-form minimum of sum t_i y_i^2 - 4 alpha y_m on the plane
    sum y_i = 1, valid when sum 1/t_i = k:
    (1/k)(2 alpha / t_m - 1)^2 - 4 alpha^2 / t_m."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("weights t must be positive")
    if abs(float(np.sum(1.0 / t)) - k) > 1e-10:
        raise ValueError(f"constraint sum(1/t) = {k} violated: {np.sum(1.0 / t)}")
    if not (1 <= m_index <= t.size):
        raise ValueError(f"m_index {m_index} out of range")
    tm = t[m_index - 1]
    return float((2.0 * alpha / tm - 1.0) ** 2 / k - 4.0 * alpha ** 2 / tm)


def condmin_kkt_point(t, m_index: int, alpha: float, k: float) -> np.ndarray:
    """The minimizer from the Lagrange conditions:
    y_i = (1/t_i)(2 alpha delta_im - 2 alpha/(k t_m) + 1/k)."""
    t = np.asarray(t, dtype=float)
    tm = t[m_index - 1]
    y = (1.0 / t) * (1.0 / k - 2.0 * alpha / (k * tm))
    y[m_index - 1] += 2.0 * alpha / tm
    return y


def thm63_factor_margin(t: float, alpha: float, n: int, k: int) -> float:
    """The factored coefficient (2 alpha/t - 1)((2/(k t) - n - 1) alpha
    + (n-1)/k); nonnegative on t >= 1 for alpha in the admissible interval."""
    if t < 1.0:
        raise ValueError(f"t must be >= 1, got {t}")
    return float((2.0 * alpha / t - 1.0) * ((2.0 / (k * t) - n - 1.0) * alpha + (n - 1.0) / k))


def sk_loghess_margin(lam: CurvatureVector, k: int, h_col) -> float:
    """Log-Hessian quadratic of the power sum plus (1/k) of the squared
    log-gradient term; nonnegative by Cauchy-Schwarz."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    h = np.asarray(h_col, dtype=float)
    arr = lam.as_array()
    Sk = float(np.sum(arr ** k))
    g = k * arr ** (k - 1) / Sk
    gh = float(np.sum(g * h))
    quad = float(np.sum(k * (k - 1) * arr ** (k - 2) * h ** 2)) / Sk - gh ** 2
    return quad + gh ** 2 / k


# --- batched sigma tables ---------------------------------------------------

def esp_batch(vals: np.ndarray) -> np.ndarray:
    """Row-wise elementary symmetric functions: (B, m) -> (B, m+1)."""
    B, m = vals.shape
    e = np.zeros((B, m + 1))
    e[:, 0] = 1.0
    for j in range(m):
        v = vals[:, j]
        for k in range(j + 1, 0, -1):
            e[:, k] += v * e[:, k - 1]
    return e


class SigmaTables:
    """Full, single-exclusion and pair-exclusion esp tables for a batch of
    curvature vectors; indexable at any order k."""

    def __init__(self, lams: np.ndarray):
        self.lams = lams
        B, n = lams.shape
        self.n = n
        self.full = esp_batch(lams)  # (B, n+1)
        self.single = np.zeros((n, B, n))  # [i] -> esp of lams without col i
        cols = np.arange(n)
        for i in range(n):
            self.single[i] = esp_batch(lams[:, cols != i])
        self.pair = {}
        for i in range(n):
            for j in range(i + 1, n):
                keep = (cols != i) & (cols != j)
                self.pair[(i, j)] = esp_batch(lams[:, keep])

    def sig(self, k):
        if k == 0:
            return np.ones(self.lams.shape[0])
        if k < 0 or k > self.n:
            return np.zeros(self.lams.shape[0])
        return self.full[:, k]

    def sig_i(self, k, i):
        if k == 0:
            return np.ones(self.lams.shape[0])
        if k < 0 or k > self.n - 1:
            return np.zeros(self.lams.shape[0])
        return self.single[i][:, k]

    def sig_ij(self, k, i, j):
        if k == 0:
            return np.ones(self.lams.shape[0])
        if k < 0 or k > self.n - 2:
            return np.zeros(self.lams.shape[0])
        key = (i, j) if i < j else (j, i)
        return self.pair[key][:, k]

    def sig_i_all(self, k):
        """(B, n) array of single exclusions at order k."""
        return np.stack([self.sig_i(k, i) for i in range(self.n)], axis=1)


# --- campaign machinery -----------------------------------------------------

LEMMA_IDS = (
    "sigprop", "Dmk", "ak", "det-identity", "key-inequality", "condition",
    "lamij", "rigidity", "cs", "condmin", "thm63", "sk-loghess",
)

LOG_LAM_LO, LOG_LAM_HI = math.log(1e-3), math.log(1e3)
CLUSTER_FRACTION = 0.1


def _sample_lambdas(rng: np.random.Generator, samples: int, n: int) -> np.ndarray:
    """Log-uniform positive spectra with a clustered tail: 10% of the rows get
    one pair of entries set equal to 1e-10 relative, to exercise the
    divided-difference limits."""
    lams = np.exp(rng.uniform(LOG_LAM_LO, LOG_LAM_HI, size=(samples, n)))
    n_cluster = int(CLUSTER_FRACTION * samples)
    if n_cluster and n >= 2:
        rows = np.arange(samples - n_cluster, samples)
        i = rng.integers(0, n, size=n_cluster)
        j = (i + 1 + rng.integers(0, n - 1, size=n_cluster)) % n
        lams[rows, j] = lams[rows, i] * (1.0 + 1e-10)
    return np.sort(lams, axis=1)


def _sigma_log_tables(tab: SigmaTables, k: int):
    """(g, q) with g_i = sigma_{k-1;i}/sigma_k and q_ij = sigma_{k-2;ij}/sigma_k
    (zero diagonal), batched."""
    B, n = tab.lams.shape
    sk = tab.sig(k)
    g = tab.sig_i_all(k - 1) / sk[:, None]
    q = np.zeros((B, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = tab.sig_ij(k - 2, i, j) / sk
            q[:, i, j] = q[:, j, i] = v
    return g, q


def _key_margin_batch(lams, y, family: str, k: int, alpha: float,
                      tab: SigmaTables | None = None):
    """Vectorized key-inequality margins and scales for sigma_k^alpha or
    S_k^alpha."""
    if family == "sigma":
        if tab is None:
            tab = SigmaTables(lams)
        g, q = _sigma_log_tables(tab, k)
        base = (np.sum(g / lams * y ** 2, axis=1)
                + np.einsum("bi,bij,bj->b", y, q, y)
                - np.sum(g * y, axis=1) ** 2)
        margins = alpha * base
    else:
        Sk = np.sum(lams ** k, axis=1)
        t1 = np.sum(lams ** (k - 2) * y ** 2, axis=1) / Sk
        t2 = (np.sum(lams ** (k - 1) * y, axis=1) / Sk) ** 2
        margins = alpha * k * k * (t1 - t2)
    scales = np.sum(y ** 2, axis=1) / np.min(lams, axis=1) ** 2
    return margins, scales


def _resolve_speed(params: dict) -> SpeedFunction:
    if "F" in params and params["F"]:
        F = params["F"]
        return F if isinstance(F, SpeedFunction) else SpeedFunction.parse(F)
    k = int(params.get("k", 1))
    alpha = float(params.get("alpha", 1.0))
    family = params.get("family", "sigma")
    if family == "S":
        return SpeedFunction.power_sum_power(k, alpha)
    return SpeedFunction.sigma_power(k, alpha)


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of one randomized campaign."""

    lemma_id: str
    parameters: dict
    samples: int
    violations: int
    worst_margin: float
    worst_sample: dict
    seed: int
    tolerance: float

    def to_json(self) -> str:
        def default(o):
            if isinstance(o, np.ndarray):
                return o.tolist()
            if isinstance(o, (np.floating, np.integer)):
                return o.item()
            raise TypeError(f"not serializable: {type(o)}")
        payload = {
            "lemma_id": self.lemma_id,
            "parameters": self.parameters,
            "samples": self.samples,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "worst_sample": self.worst_sample,
            "seed": self.seed,
            "tolerance": self.tolerance,
        }
        return json.dumps(payload, sort_keys=True, default=default, indent=2)


def _campaign_sigprop(params, rng, samples):
    n = int(params.get("n", 4))
    lams = _sample_lambdas(rng, samples, n)
    tab = SigmaTables(lams)
    ks = [int(params["k"])] if params.get("k") is not None else list(range(0, n + 1))
    margins = np.full(samples, np.inf)
    for k in ks:
        sk = tab.sig(k)
        sk1 = tab.sig(k + 1)
        sk2 = tab.sig(k + 2)
        ski = tab.sig_i_all(k)
        sk1i = tab.sig_i_all(k + 1)
        r1 = np.max(np.abs(sk1[:, None] - (sk1i + lams * ski)), axis=1)
        s1 = np.abs(sk1) + np.max(np.abs(sk1i) + np.abs(lams * ski), axis=1)
        r2 = np.abs(np.sum(lams * ski, axis=1) - (k + 1) * sk1)
        s2 = np.sum(np.abs(lams * ski), axis=1) + (k + 1) * np.abs(sk1)
        r3 = np.abs(np.sum(ski, axis=1) - (n - k) * sk)
        s3 = np.sum(np.abs(ski), axis=1) + np.abs((n - k) * sk) + 1e-300
        r4 = np.abs(np.sum(lams ** 2 * ski, axis=1) - (tab.sig(1) * sk1 - (k + 2) * sk2))
        s4 = (np.sum(lams ** 2 * np.abs(ski), axis=1)
              + np.abs(tab.sig(1) * sk1) + np.abs((k + 2) * sk2))
        worst = np.minimum.reduce([
            -r1 / np.maximum(s1, 1e-300), -r2 / np.maximum(s2, 1e-300),
            -r3 / s3, -r4 / np.maximum(s4, 1e-300)])
        margins = np.minimum(margins, worst)
    return margins, np.ones(samples), {"lambda": lams}, 1e-12


def _campaign_psd(params, rng, samples, which):
    n = int(params.get("n", 4))
    lams = _sample_lambdas(rng, samples, n)
    tab = SigmaTables(lams)
    ks = [int(params["k"])] if params.get("k") is not None else list(range(1, n + 1))
    margins = np.full(samples, np.inf)
    scales = np.zeros(samples)
    for k in ks:
        if which == "Dmk":
            M = np.zeros((samples, n + 1, n + 1))
            M[:, 0, 0] = tab.sig(k)
            for i in range(n):
                si = tab.sig_i(k, i)
                M[:, 0, i + 1] = M[:, i + 1, 0] = si
                M[:, i + 1, i + 1] = si
                for j in range(i + 1, n):
                    sij = tab.sig_ij(k, i, j)
                    M[:, i + 1, j + 1] = M[:, j + 1, i + 1] = sij
        else:  # sigma_k A^(k) - xi xi^T
            sk = tab.sig(k)
            xi = tab.sig_i_all(k - 1)
            P = np.zeros((samples, n, n))
            for i in range(n):
                P[:, i, i] = sk * xi[:, i] / lams[:, i]
                for j in range(i + 1, n):
                    v = sk * tab.sig_ij(k - 2, i, j)
                    P[:, i, j] = P[:, j, i] = v
            Q = xi[:, :, None] * xi[:, None, :]
            M = P - Q
        eig = np.linalg.eigvalsh(M)[:, 0]
        fro = np.sqrt(np.sum(M ** 2, axis=(1, 2)))
        if which == "ak":
            # the two parts cancel exactly at k = n, so floating noise must be
            # measured against the pre-cancellation magnitude, not ||M||_F
            fro = np.maximum(fro, np.sqrt(np.sum(P ** 2, axis=(1, 2)))
                             + np.sqrt(np.sum(Q ** 2, axis=(1, 2))))
        keep = eig / np.maximum(fro, 1e-300) < margins / np.maximum(scales, 1e-300)
        margins = np.where(keep, eig, margins)
        scales = np.where(keep, fro, scales)
    return margins, np.maximum(scales, 1e-300), {"lambda": lams}, PSD_TOL


def _campaign_det_identity(params, rng, samples):
    n = int(params.get("n", 4))
    lams = _sample_lambdas(rng, samples, n)
    tab = SigmaTables(lams)
    ks = [int(params["k"])] if params.get("k") is not None else list(range(1, n + 1))
    ms = [int(params["m"])] if params.get("m") is not None else list(range(1, n + 1))
    margins = np.full(samples, np.inf)
    for k in ks:
        sk = tab.sig(k)
        for m in ms:
            at = np.zeros((samples, m, m))
            D = np.zeros((samples, m + 1, m + 1))
            D[:, 0, 0] = sk
            for i in range(m):
                si = tab.sig_i(k, i)
                at[:, i, i] = si * (sk - si)
                D[:, 0, i + 1] = D[:, i + 1, 0] = si
                D[:, i + 1, i + 1] = si
                for j in range(i + 1, m):
                    sij = tab.sig_ij(k, i, j)
                    v = sk * sij - si * tab.sig_i(k, j)
                    at[:, i, j] = at[:, j, i] = v
                    D[:, i + 1, j + 1] = D[:, j + 1, i + 1] = sij
            lhs = np.linalg.det(at)
            rhs = sk ** (m - 1) * np.linalg.det(D)
            # both determinants vanish identically at m = n (lambda spans the
            # kernel), so the residual is measured against the Hadamard bound
            # of each evaluation rather than |lhs| + |rhs|
            had_at = np.prod(np.sqrt(np.sum(at ** 2, axis=2)), axis=1)
            had_D = np.prod(np.sqrt(np.sum(D ** 2, axis=2)), axis=1)
            scale = np.maximum(np.abs(lhs) + np.abs(rhs),
                               np.maximum(had_at, sk ** (m - 1) * had_D) * 1e-4)
            res = np.abs(lhs - rhs) / np.maximum(scale, 1e-300)
            margins = np.minimum(margins, -res)
    return margins, np.ones(samples), {"lambda": lams}, 1e-8


def _campaign_key(params, rng, samples):
    n = int(params.get("n", 4))
    k = int(params.get("k", 2))
    alpha = float(params.get("alpha", 1.0))
    family = params.get("family", "sigma")
    lams = _sample_lambdas(rng, samples, n)
    y = rng.standard_normal((samples, n))
    margins, scales = _key_margin_batch(lams, y, family, k, alpha)
    return margins, scales, {"lambda": lams, "y": y}, 1e-12


def _campaign_condition(params, rng, samples):
    n = int(params.get("n", 4))
    F = _resolve_speed(params)
    lams = _sample_lambdas(rng, samples, n)
    ys = rng.standard_normal((samples, n))
    margins = np.zeros(samples)
    for b in range(samples):
        lam = CurvatureVector(tuple(lams[b]))
        cm = condition_margins(F, lam, ys[b])
        bun = eval_bundle(F, lam)
        scale_i = abs(bun.value) + float(np.max(np.abs(bun.gradient))) + 1e-300
        scale_iv = float(np.sum(ys[b] ** 2) / np.min(lams[b]) ** 2)
        margins[b] = min(cm.monotone / scale_i, cm.quotient / scale_i,
                         cm.key / scale_iv)
    return margins, np.ones(samples), {"lambda": lams, "y": ys}, 1e-12


def _campaign_lamij(params, rng, samples):
    n = int(params.get("n", 4))
    if n < 3:
        raise ValueError("lamij needs n >= 3")
    F = _resolve_speed(params)
    lams = _sample_lambdas(rng, samples, n)
    # enforce a strict gap at the bottom
    lams[:, 0] = lams[:, 1] * (1.0 - rng.uniform(0.05, 0.5, size=samples))
    ii = rng.integers(3, n + 1, size=samples)
    jj = np.array([int(rng.integers(2, i)) for i in ii])
    margins = np.zeros(samples)
    for b in range(samples):
        lam = CurvatureVector(tuple(lams[b]))
        v = lamij_margin(F, lam, int(ii[b]), int(jj[b]))
        bun = eval_bundle(F, lam)
        arr = lam.as_array()
        l1 = arr[0]
        li, lj = arr[ii[b] - 1], arr[jj[b] - 1]
        scale = ((abs(bun.gradient[ii[b] - 1]) * (li - l1) ** 2
                  + abs(bun.gradient[jj[b] - 1]) * (lj - l1) ** 2)
                 / ((li - l1) * (lj - l1) * max(abs(li - lj), 1e-8 * float(np.max(arr)))))
        margins[b] = v / max(scale, 1e-300)
    return margins, np.ones(samples), {"lambda": lams, "i": ii, "j": jj}, 1e-12


def _campaign_rigidity(params, rng, samples):
    n = int(params.get("n", 4))
    k = int(params.get("k", 2))
    alpha = float(params.get("alpha", 1.0))
    lams = _sample_lambdas(rng, samples, n)
    C = -np.exp(rng.uniform(math.log(1e-3), math.log(10.0), size=samples))
    if params.get("C") is not None:
        C = np.full(samples, float(params["C"]))
    tab = SigmaTables(lams)
    beta = k * alpha
    sk = tab.sig(k)
    grad = alpha * sk[:, None] ** (alpha - 1.0) * tab.sig_i_all(k - 1)
    val = sk ** alpha
    l1 = lams[:, 0]
    ratio = lams / l1[:, None] - 1.0
    j_terms = (beta - 1.0) / beta * grad * ratio
    j_terms2 = -C[:, None] * grad * lams * ratio
    J1 = np.sum(j_terms + j_terms2, axis=1)
    sJ = np.sum(np.abs(j_terms) + np.abs(j_terms2), axis=1)
    trb = np.sum(1.0 / lams, axis=1)
    tA = (beta - 1.0) * val * trb
    tB = -n * (beta - 1.0) / beta * np.sum(grad, axis=1)
    tC = C * (n * beta * val - trb * np.sum(grad * lams ** 2, axis=1))
    L1 = tA + tB + tC
    sL = np.abs(tA) + np.abs(tB) + np.abs(tC)
    margins = np.minimum(J1 / np.maximum(sJ, 1e-300), L1 / np.maximum(sL, 1e-300))
    return margins, np.ones(samples), {"lambda": lams, "C": C}, 1e-12


def _campaign_cs(params, rng, samples):
    n = int(params.get("n", 4))
    k = int(params.get("k", 2))
    alpha = float(params.get("alpha", 1.0))
    family = params.get("family", "sigma")
    beta = k * alpha
    lams = _sample_lambdas(rng, samples, n)
    h = rng.standard_normal((samples, n))
    if family == "sigma":
        tab = SigmaTables(lams)
        g = alpha * tab.sig_i_all(k - 1) / tab.sig(k)[:, None]
    else:
        g = alpha * k * lams ** (k - 1) / np.sum(lams ** k, axis=1)[:, None]
    left = np.sum(g / lams * h ** 2, axis=1)
    right = np.sum(g * h, axis=1) ** 2 / beta
    margins = left - right
    scales = np.sum(np.abs(g / lams * h ** 2), axis=1) + np.abs(right) + 1e-300
    return margins / scales, np.ones(samples), {"lambda": lams, "h": h}, 1e-12


def _campaign_condmin(params, rng, samples):
    n = int(params.get("n", 4))
    kcon = float(params.get("k", 2))
    raw = np.exp(rng.uniform(-2.0, 2.0, size=(samples, n)))
    inv = kcon * raw / np.sum(raw, axis=1)[:, None]
    t = 1.0 / inv
    alphas = rng.uniform(-1.0, 1.0, size=samples)
    ms = rng.integers(1, n + 1, size=samples)
    tm = t[np.arange(samples), ms - 1]
    formula = (2.0 * alphas / tm - 1.0) ** 2 / kcon - 4.0 * alphas ** 2 / tm
    # KKT point and its objective value
    y = (1.0 / t) * (1.0 / kcon - 2.0 * alphas / (kcon * tm))[:, None]
    y[np.arange(samples), ms - 1] += 2.0 * alphas / tm
    fval = np.sum(t * y ** 2, axis=1) - 4.0 * alphas * y[np.arange(samples), ms - 1]
    res = np.abs(formula - fval) / np.maximum(1.0, np.abs(formula))
    return -res, np.ones(samples), {"t": t, "alpha": alphas, "m": ms}, 1e-8


def _campaign_thm63(params, rng, samples):
    n = int(params.get("n", 4))
    k = int(params.get("k", 2))
    lo = (n - 1.0) / (k * (n + 1.0) - 2.0)
    t = np.exp(rng.uniform(0.0, math.log(100.0), size=samples))
    alphas = rng.uniform(lo, 0.5, size=samples)
    f1 = 2.0 * alphas / t - 1.0
    f2 = (2.0 / (k * t) - n - 1.0) * alphas + (n - 1.0) / k
    margins = f1 * f2
    scales = np.abs(f1 * f2) + np.abs(f1) + np.abs(f2) + 1e-300
    return margins / scales, np.ones(samples), {"t": t, "alpha": alphas}, 1e-12


def _campaign_sk_loghess(params, rng, samples):
    n = int(params.get("n", 4))
    k = int(params.get("k", 2))
    lams = _sample_lambdas(rng, samples, n)
    h = rng.standard_normal((samples, n))
    Sk = np.sum(lams ** k, axis=1)
    g = k * lams ** (k - 1) / Sk[:, None]
    gh = np.sum(g * h, axis=1)
    quad = np.sum(k * (k - 1) * lams ** (k - 2) * h ** 2, axis=1) / Sk - gh ** 2
    margins = quad + gh ** 2 / k
    scales = (np.sum(k * (k - 1) * lams ** (k - 2) * h ** 2, axis=1) / Sk
              + gh ** 2 + 1e-300)
    return margins / scales, np.ones(samples), {"lambda": lams, "h": h}, 1e-12


_CAMPAIGNS = {
    "sigprop": _campaign_sigprop,
    "Dmk": lambda p, r, s: _campaign_psd(p, r, s, "Dmk"),
    "ak": lambda p, r, s: _campaign_psd(p, r, s, "ak"),
    "det-identity": _campaign_det_identity,
    "key-inequality": _campaign_key,
    "condition": _campaign_condition,
    "lamij": _campaign_lamij,
    "rigidity": _campaign_rigidity,
    "cs": _campaign_cs,
    "condmin": _campaign_condmin,
    "thm63": _campaign_thm63,
    "sk-loghess": _campaign_sk_loghess,
}


def run_campaign(lemma_id: str, parameters: dict | None, samples: int,
                 seed: int) -> InequalityReport:
    """Draw `samples` inputs, evaluate the lemma's margin on each, and
    aggregate.  Deterministic given (lemma_id, parameters, samples, seed)."""
    if lemma_id not in _CAMPAIGNS:
        raise ValueError(f"unknown lemma_id {lemma_id!r}; known: {', '.join(LEMMA_IDS)}")
    parameters = dict(parameters or {})
    if "F" in parameters and parameters["F"]:
        F = parameters["F"]
        F = F if isinstance(F, SpeedFunction) else SpeedFunction.parse(F)
        if not F.condition_candidate and not parameters.get("allow_non_condition"):
            if lemma_id != "condition":
                raise ValueError(
                    f"speed {F} is flagged non-Condition; pass allow_non_condition "
                    "to use it outside the condition suite")
    evaluate = _CAMPAIGNS[lemma_id]

    def run_chunk(chunk_index: int, count: int):
        rng = np.random.Generator(np.random.Philox(key=seed, counter=chunk_index + 1))
        return evaluate(parameters, rng, count)

    n_chunks = max(1, math.ceil(samples / CHUNK))
    sizes = [CHUNK] * (samples // CHUNK) + ([samples % CHUNK] if samples % CHUNK else [])
    workers = thread_count()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, range(len(sizes)), sizes))
    else:
        results = [run_chunk(i, c) for i, c in enumerate(sizes)]

    tol = results[0][3]
    violations = 0
    worst = math.inf
    worst_sample: dict = {}
    total = 0
    for (margins, scales, payload, _t) in results:
        normalized = margins / scales
        bad = normalized < -tol
        violations += int(np.count_nonzero(bad))
        idx = int(np.argmin(normalized))
        if normalized[idx] < worst:
            worst = float(normalized[idx])
            worst_sample = {
                key: (np.asarray(v)[idx].tolist() if np.asarray(v).ndim else v)
                for key, v in payload.items()
            }
        total += margins.size
    params_out = {k: (str(v) if isinstance(v, SpeedFunction) else v)
                  for k, v in parameters.items()}
    return InequalityReport(
        lemma_id=lemma_id,
        parameters=params_out,
        samples=total,
        violations=violations,
        worst_margin=worst,
        worst_sample=worst_sample,
        seed=seed,
        tolerance=tol,
    )
