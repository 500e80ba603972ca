"""Exact-formula calculus for elementary symmetric functions and power sums.

Provides values, first and second derivatives of homogeneous symmetric speed
functions built from powers and products of sigma_k and S_k, evaluated on
vectors of positive principal curvatures.  Index arguments (excluded indices,
pair indices) follow the lambda_1..lambda_n convention, i.e. they are 1-based.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CurvatureVector",
    "SpeedFunction",
    "DerivativeBundle",
    "SpeedFunctionError",
    "elementary_all",
    "sigma",
    "power_sum",
    "sigma_identity_residuals",
    "eval_bundle",
    "second_derivative_form",
    "euler_residual",
    "eval_on_axisymmetric",
]


class SpeedFunctionError(ValueError):
    """Raised for malformed speed-function expressions or mixed degrees."""


def elementary_all(values: np.ndarray) -> np.ndarray:
    """All elementary symmetric functions e_0..e_m of `values` by the
    product recurrence (no subset enumeration)."""
    values = np.asarray(values, dtype=float)
    m = values.size
    e = np.zeros(m + 1)
    e[0] = 1.0
    for j in range(m):
        v = values[j]
        # update in place, highest order first
        for k in range(j + 1, 0, -1):
            e[k] += v * e[k - 1]
    return e


@dataclass(frozen=True)
class CurvatureVector:
    """A point in the positive cone: n strictly positive principal curvatures,
    stored sorted ascending."""

    values: tuple[float, ...]
    n: int = field(init=False)

    def __post_init__(self):
        vals = tuple(sorted(float(v) for v in self.values))
        if len(vals) < 2:
            raise ValueError("need dimension n >= 2")
        for v in vals:
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"curvature entries must be positive and finite, got {v}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "n", len(vals))

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


def _reduced(lam: CurvatureVector, excluded) -> np.ndarray:
    """Entries of lam with the given 1-based indices removed."""
    excluded = tuple(excluded)
    n = lam.n
    seen = set()
    for i in excluded:
        if not isinstance(i, (int, np.integer)) or not (1 <= i <= n):
            raise ValueError(f"excluded index {i} out of range 1..{n}")
        if i in seen:
            raise ValueError(f"excluded index {i} repeated")
        seen.add(i)
    arr = lam.as_array()
    keep = [j for j in range(n) if (j + 1) not in seen]
    return arr[keep]


def sigma(lam: CurvatureVector, k: int, excluded=()) -> float:
    """sigma_k of lam with the excluded (1-based) entries removed.

    k = 0 gives 1; k < 0 or k beyond the reduced size gives 0.  The reduced
    vector is re-expanded from scratch, never obtained by dividing out roots.
    """
    vals = _reduced(lam, excluded)
    m = vals.size
    if k == 0:
        return 1.0
    if k < 0 or k > m:
        return 0.0
    return float(elementary_all(vals)[k])


def power_sum(lam: CurvatureVector, k: int) -> float:
    """Power sum S_k = sum(lambda_i^k), k >= 1."""
    if k < 1:
        raise ValueError(f"power sum needs k >= 1, got {k}")
    return float(np.sum(lam.as_array() ** k))


def sigma_identity_residuals(lam: CurvatureVector, k: int):
    """Residuals (LHS - RHS) of the four classical sigma_k identities:

    1. sigma_{k+1} = sigma_{k+1;i} + lambda_i sigma_{k;i}   (max |.| over i)
    2. sum_i lambda_i sigma_{k;i} = (k+1) sigma_{k+1}
    3. sum_i sigma_{k;i} = (n-k) sigma_k
    4. sum_i lambda_i^2 sigma_{k;i} = sigma_1 sigma_{k+1} - (k+2) sigma_{k+2}
    """
    if not (0 <= k <= lam.n):
        raise ValueError(f"k={k} outside 0..{lam.n}")
    arr = lam.as_array()
    n = lam.n
    sig_k1 = sigma(lam, k + 1)
    sig_k2 = sigma(lam, k + 2)
    sig_k = sigma(lam, k)
    r1 = 0.0
    s2 = 0.0
    s3 = 0.0
    s4 = 0.0
    for i in range(1, n + 1):
        ski = sigma(lam, k, (i,))
        sk1i = sigma(lam, k + 1, (i,))
        li = arr[i - 1]
        r1 = max(r1, abs(sig_k1 - (sk1i + li * ski)))
        s2 += li * ski
        s3 += ski
        s4 += li * li * ski
    r2 = s2 - (k + 1) * sig_k1
    r3 = s3 - (n - k) * sig_k
    r4 = s4 - (sigma(lam, 1) * sig_k1 - (k + 2) * sig_k2)
    return (r1, r2, r3, r4)


# --- speed functions -------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    """One basis factor: sigma_k or S_k raised to a real exponent."""

    basis: str  # "sigma" or "S"
    k: int
    exponent: float = 1.0

    def __post_init__(self):
        if self.basis not in ("sigma", "S"):
            raise SpeedFunctionError(f"unknown basis {self.basis!r}")
        if self.k < 1:
            raise SpeedFunctionError(f"basis index must be >= 1, got {self.k}")

    @property
    def degree(self) -> float:
        return self.k * self.exponent

    def __str__(self):
        name = f"{self.basis}({self.k})"
        return name if self.exponent == 1.0 else f"{name}^{self.exponent:g}"


@dataclass(frozen=True)
class Term:
    coefficient: float
    factors: tuple[Factor, ...]

    @property
    def degree(self) -> float:
        return sum(f.degree for f in self.factors)

    def __str__(self):
        body = "*".join(str(f) for f in self.factors)
        return f"{self.coefficient:g}*{body}"


@dataclass(frozen=True)
class SpeedFunction:
    """A homogeneous symmetric speed: sum of coefficient * product of
    sigma_k / S_k powers, all terms of the same total degree beta."""

    terms: tuple[Term, ...]

    def __post_init__(self):
        if not self.terms:
            raise SpeedFunctionError("speed function needs at least one term")
        degs = [t.degree for t in self.terms]
        d0 = degs[0]
        bad = [str(t) for t, d in zip(self.terms, degs) if abs(d - d0) > 1e-12]
        if bad:
            raise SpeedFunctionError(
                "mixed homogeneity degrees: term(s) "
                + ", ".join(bad)
                + f" differ from degree {d0:g} of {self.terms[0]}"
            )
        if d0 <= 0:
            raise SpeedFunctionError(f"homogeneity degree must be positive, got {d0:g}")

    @property
    def beta(self) -> float:
        return self.terms[0].degree

    @property
    def condition_candidate(self) -> bool:
        """False for signed combinations, which are negative-test material and
        excluded from lemma campaigns unless requested explicitly."""
        return all(t.coefficient > 0 for t in self.terms)

    @classmethod
    def sigma_power(cls, k: int, alpha: float = 1.0) -> "SpeedFunction":
        return cls((Term(1.0, (Factor("sigma", k, alpha),)),))

    @classmethod
    def power_sum_power(cls, k: int, alpha: float = 1.0) -> "SpeedFunction":
        return cls((Term(1.0, (Factor("S", k, alpha),)),))

    @classmethod
    def parse(cls, text: str) -> "SpeedFunction":
        try:
            return _parse_speed(cls, text)
        except SpeedFunctionError:
            raise
        except (ValueError, TypeError, ZeroDivisionError, IndexError) as exc:
            raise SpeedFunctionError(f"cannot parse {text!r}: {exc}") from exc

    def value_at_ones(self, n: int) -> float:
        """F(1, ..., 1) for an n-vector; closed form via binomials."""
        total = 0.0
        for t in self.terms:
            prod = t.coefficient
            for f in t.factors:
                base = math.comb(n, f.k) if f.basis == "sigma" else float(n)
                prod *= base ** f.exponent
            total += prod
        return total

    def __str__(self):
        return " + ".join(str(t) for t in self.terms)


_TOKEN = re.compile(r"\s*(sigma|S\b|\d+\.?\d*(?:[eE][+-]?\d+)?|[()^*/+-])")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SpeedFunctionError(f"cannot parse {text!r} at position {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _parse_speed(cls, text: str):
    tokens = _tokenize(text)
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else None

    def take(expect=None):
        nonlocal idx
        if idx >= len(tokens):
            raise SpeedFunctionError(f"unexpected end of expression in {text!r}")
        tok = tokens[idx]
        if expect is not None and tok != expect:
            raise SpeedFunctionError(f"expected {expect!r} but found {tok!r} in {text!r}")
        idx += 1
        return tok

    def number():
        sign = 1.0
        while peek() in ("+", "-"):
            if take() == "-":
                sign = -sign
        val = float(take())
        if peek() == "/":
            take()
            val /= float(take())
        return sign * val

    def exponent():
        if peek() == "(":
            take("(")
            val = number()
            take(")")
            return val
        return number()

    def factor():
        basis = take()
        if basis not in ("sigma", "S"):
            raise SpeedFunctionError(f"expected sigma(...) or S(...), found {basis!r}")
        take("(")
        k = int(float(take()))
        take(")")
        exp = 1.0
        if peek() == "^":
            take("^")
            exp = exponent()
        return Factor(basis, k, exp)

    def term(sign):
        coeff = sign
        factors = []
        # optional leading numeric coefficient
        if peek() not in ("sigma", "S"):
            coeff *= number()
            if peek() == "*":
                take("*")
        while True:
            factors.append(factor())
            if peek() == "*":
                take("*")
                continue
            break
        return Term(coeff, tuple(factors))

    terms = []
    sign = 1.0
    while peek() in ("+", "-"):
        if take() == "-":
            sign = -sign
    terms.append(term(sign))
    while peek() is not None:
        op = take()
        if op not in ("+", "-"):
            raise SpeedFunctionError(f"expected '+' or '-' between terms, found {op!r}")
        terms.append(term(-1.0 if op == "-" else 1.0))
    return cls(tuple(terms))


# --- derivative bundles ----------------------------------------------------

@dataclass(frozen=True)
class DerivativeBundle:
    """Value, gradient and Hessian of F at lambda, plus the derivatives of
    log F when F > 0 there (None otherwise)."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    log_gradient: np.ndarray | None
    log_hessian: np.ndarray | None

    @property
    def has_log(self) -> bool:
        return self.log_gradient is not None


def _sigma_vgh(arr: np.ndarray, k: int):
    """(value, gradient, hessian) of sigma_k at arr, from the reduced-vector
    closed forms sigma_{k-1;i} and sigma_{k-2;ij}."""
    n = arr.size
    val = float(elementary_all(arr)[k]) if 0 <= k <= n else 0.0
    if k == 0:
        val = 1.0
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    for i in range(n):
        red = np.delete(arr, i)
        e_i = elementary_all(red)
        if 0 <= k - 1 <= n - 1:
            grad[i] = e_i[k - 1]
        for j in range(i + 1, n):
            red2 = np.delete(arr, (i, j))
            if 0 <= k - 2 <= n - 2:
                e_ij = elementary_all(red2)
                hess[i, j] = hess[j, i] = e_ij[k - 2]
    return val, grad, hess


def _power_sum_vgh(arr: np.ndarray, k: int):
    val = float(np.sum(arr ** k))
    grad = k * arr ** (k - 1)
    hess = np.diag(k * (k - 1) * arr ** (k - 2)) if k >= 2 else np.zeros((arr.size,) * 2)
    return val, grad, hess


def _pow_vgh(v, g, H, e):
    """(v, g, H) of B^e from those of B > 0."""
    pv = v ** e
    pg = e * v ** (e - 1) * g
    pH = e * (e - 1) * v ** (e - 2) * np.outer(g, g) + e * v ** (e - 1) * H
    return pv, pg, pH


def _mul_vgh(a, b):
    va, ga, Ha = a
    vb, gb, Hb = b
    v = va * vb
    g = va * gb + vb * ga
    H = va * Hb + vb * Ha + np.outer(ga, gb) + np.outer(gb, ga)
    return v, g, H


def eval_bundle(F: SpeedFunction, lam: CurvatureVector) -> DerivativeBundle:
    """Closed-form value, gradient and Hessian of F at lam, composed through
    products and powers; log derivatives from them when F > 0."""
    arr = lam.as_array()
    n = lam.n
    total_v = 0.0
    total_g = np.zeros(n)
    total_H = np.zeros((n, n))
    cache: dict[tuple[str, int], tuple] = {}
    for t in F.terms:
        acc = (1.0, np.zeros(n), np.zeros((n, n)))
        for f in t.factors:
            key = (f.basis, f.k)
            if key not in cache:
                cache[key] = (_sigma_vgh if f.basis == "sigma" else _power_sum_vgh)(arr, f.k)
            v, g, H = cache[key]
            acc = _mul_vgh(acc, _pow_vgh(v, g, H, f.exponent))
        total_v += t.coefficient * acc[0]
        total_g = total_g + t.coefficient * acc[1]
        total_H = total_H + t.coefficient * acc[2]
    if total_v > 0.0:
        lg = total_g / total_v
        lH = total_H / total_v - np.outer(lg, lg)
    else:
        lg = lH = None
    return DerivativeBundle(total_v, total_g, total_H, lg, lH)


def second_derivative_form(F: SpeedFunction, lam: CurvatureVector, B: np.ndarray):
    """First and second derivative of t -> F(eigenvalues(diag(lam) + t B))
    at t = 0, in the eigenvalue form with divided differences of the gradient
    on the off-diagonal part.

    The divided difference (F_p - F_q)/(lambda_p - lambda_q) is replaced by
    its analytic limit F_pp - F_pq when the eigenvalues nearly coincide.
    """
    B = np.asarray(B, dtype=float)
    n = lam.n
    if B.shape != (n, n) or not np.allclose(B, B.T):
        raise ValueError("B must be a symmetric n-by-n matrix")
    bun = eval_bundle(F, lam)
    arr = lam.as_array()
    d = np.diag(B)
    first = float(bun.gradient @ d)
    second = float(d @ bun.hessian @ d)
    thresh = 1e-8 * float(np.max(arr))
    for p in range(n):
        for q in range(p + 1, n):
            gap = arr[p] - arr[q]
            if abs(gap) < thresh:
                dd = bun.hessian[p, p] - bun.hessian[p, q]
            else:
                dd = (bun.gradient[p] - bun.gradient[q]) / gap
            second += 2.0 * dd * B[p, q] ** 2
    return first, second


def euler_residual(F: SpeedFunction, lam: CurvatureVector) -> float:
    """sum(lambda_i dF/dlambda_i) - beta F; zero for exact homogeneity."""
    bun = eval_bundle(F, lam)
    return float(lam.as_array() @ bun.gradient - F.beta * bun.value)


# --- axisymmetric grid evaluation ------------------------------------------

def _comb(m: int, j: int) -> float:
    return float(math.comb(m, j)) if 0 <= j <= m else 0.0


def eval_on_axisymmetric(F: SpeedFunction, lam_merid, lam_par, n: int):
    """Vectorized (value, dF/dlam_merid, dF/dlam_par) on spectra of the form
    (lam_merid, lam_par * (n-1)), as they arise on rotationally symmetric
    hypersurfaces.  dF/dlam_par is the derivative with respect to a single
    parallel entry.  All three outputs have the shape of the inputs."""
    lm = np.asarray(lam_merid, dtype=float)
    lp = np.asarray(lam_par, dtype=float)

    def _ipow(base, k):
        # integer powers without allocating for k in {0, 1}
        if k <= 0:
            return 1.0
        if k == 1:
            return base
        return base ** k

    def _basis(f):
        k = f.k
        if f.basis == "sigma":
            pk1 = _ipow(lp, k - 1)
            bv = _comb(n - 1, k) * _ipow(lp, k) + _comb(n - 1, k - 1) * lm * pk1
            bdm = _comb(n - 1, k - 1) * pk1
            bdp = _comb(n - 2, k - 1) * pk1
            if k >= 2:
                bdp = bdp + _comb(n - 2, k - 2) * lm * _ipow(lp, k - 2)
            if np.isscalar(bdm):
                bdm = np.full_like(lm, bdm)
            if np.isscalar(bdp):
                bdp = np.full_like(lm, bdp)
        else:
            bv = _ipow(lm, k) + (n - 1) * _ipow(lp, k)
            bdm = k * _ipow(lm, k - 1)
            bdp = k * _ipow(lp, k - 1)
            if np.isscalar(bdm):
                bdm = np.full_like(lm, bdm)
                bdp = np.full_like(lm, bdp)
        return bv, bdm, bdp

    # single power of a single basis is the common case on the flow's hot
    # path; avoid the generic product-rule scaffolding there
    if len(F.terms) == 1 and len(F.terms[0].factors) == 1:
        t = F.terms[0]
        f = t.factors[0]
        bv, bdm, bdp = _basis(f)
        e = f.exponent
        c = t.coefficient
        if e == 1.0:
            if c == 1.0:
                return bv, bdm, bdp
            return c * bv, c * bdm, c * bdp
        q = bv ** (e - 1.0)
        ce = c * e
        return c * (q * bv), ce * (q * bdm), ce * (q * bdp)

    total_v = 0.0
    total_dm = 0.0
    total_dp = 0.0
    for t in F.terms:
        v = np.ones_like(lm)
        dm = np.zeros_like(lm)
        dp = np.zeros_like(lm)
        for f in t.factors:
            bv, bdm, bdp = _basis(f)
            e = f.exponent
            fv = bv ** e
            scale = e * bv ** (e - 1.0)
            fdm = scale * bdm
            fdp = scale * bdp
            dm = v * fdm + fv * dm
            dp = v * fdp + fv * dp
            v = v * fv
        total_v = total_v + t.coefficient * v
        total_dm = total_dm + t.coefficient * dm
        total_dp = total_dp + t.coefficient * dp
    return total_v, total_dm, total_dp
