"""Envelope functions and their tail integral tests.

Everything is computed in the doubly-logarithmic variable u = lnln t, in
which dt/t = e^u du and every envelope in scope is an explicit function of
u.  With log-space evaluation of the integrand the machinery works far
beyond the largest representable t, which is what makes the divergence
thresholds sharp: the integrands are regularly varying in u, so the
fitted power of the integrand over the last stretch of the u grid
classifies convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from ._kernels import packing_count_many
from .errors import (
    InconclusiveError,
    NumericDomainError,
    ResolutionError,
    ValidationError,
)
from .sets import CompactSet1D

#: Sentinel for an infinite divergence exponent.  Never fed into arithmetic;
#: hdim_formula and callers test it with is_delta_infinite().
DELTA_INFINITE = math.inf


def is_delta_infinite(delta: float) -> bool:
    return math.isinf(delta) and delta > 0


_E = math.e
# exponent of exp() beyond which e^u (and hence t = e^{e^u}) overflows
_LOG_OVERFLOW = 709.0


class Envelope:
    """Non-decreasing H: R+ -> R+ with a closed form in u = lnln t.

    Below the loglog threshold ``u0`` the function is continued as the
    constant H(u0); divergence verdicts depend only on the tail, so any
    locally-bounded non-decreasing continuation gives the same answers.
    """

    def __init__(self, kind, *, rho=None, c=None, ts=None, hs=None):
        self.kind = kind
        self.rho = rho
        self.c = c
        if kind == "h_rho":
            if rho is None or math.isnan(rho):
                raise ValidationError("h_rho needs a rho value")
            self.u0 = _E
        elif kind == "sqrt_2c_loglog":
            if c is None or not (c > 0.0):
                raise ValidationError("sqrt_2c_loglog needs c > 0")
            self.u0 = 0.0
        elif kind == "tabulated":
            ts = np.asarray(ts, dtype=float)
            hs = np.asarray(hs, dtype=float)
            if ts.size < 1 or ts.shape != hs.shape:
                raise ValidationError("tabulated envelope needs matching breakpoints")
            if ts[0] <= 1.0 or np.any(np.diff(ts) <= 0.0):
                raise ValidationError("tabulated breakpoints must be increasing and > 1")
            if np.any(hs < 0.0) or np.any(np.diff(hs) < 0.0):
                raise ValidationError("tabulated values must be non-negative and non-decreasing")
            self.ts = ts
            self.hs = hs
            self.u0 = math.log(math.log(ts[0]))
        else:
            raise ValidationError(f"unknown envelope kind {kind!r}")
        self._check_monotone()

    # -- constructors --------------------------------------------------------

    @staticmethod
    def h_rho(rho: float) -> "Envelope":
        """sqrt(2 lnln t + 2 rho lnlnln t) above t0 = e^(e^e), constant below."""
        return Envelope("h_rho", rho=rho)

    @staticmethod
    def sqrt_2c_loglog(c: float) -> "Envelope":
        """sqrt(2 c lnln t) above t = e, zero below."""
        return Envelope("sqrt_2c_loglog", c=c)

    @staticmethod
    def tabulated(ts, hs) -> "Envelope":
        """Piecewise-linear table in t, constant beyond both ends."""
        return Envelope("tabulated", ts=ts, hs=hs)

    # -- evaluation ----------------------------------------------------------

    def value_loglog(self, u):
        """H at u = lnln t, valid for any real u (constant below u0)."""
        u = np.maximum(np.atleast_1d(np.asarray(u, dtype=float)), self.u0)
        if self.kind == "h_rho":
            arg = 2.0 * u + 2.0 * self.rho * np.log(u)
            if np.any(arg < 0.0):
                raise NumericDomainError("h_rho envelope negative under the root")
            return np.sqrt(arg)
        if self.kind == "sqrt_2c_loglog":
            return np.sqrt(2.0 * self.c * u)
        s = np.exp(np.minimum(u, _LOG_OVERFLOW))
        t = np.exp(np.minimum(s, _LOG_OVERFLOW))
        t[s >= _LOG_OVERFLOW] = np.inf
        return np.interp(t, self.ts, self.hs)

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(~np.isfinite(t)) or np.any(t <= 0.0):
            raise NumericDomainError("envelope evaluated outside (0, inf)")
        if self.kind == "tabulated":
            out = np.interp(t, self.ts, self.hs)
        else:
            u = np.full(t.shape, self.u0)
            t_thresh = math.exp(math.exp(self.u0))  # where lnln t crosses u0
            big = t > t_thresh
            u[big] = np.log(np.log(t[big]))
            out = self.value_loglog(u)
        return float(out[0]) if scalar else out

    @property
    def head_value(self) -> float:
        """Constant continuation value below the loglog threshold."""
        return float(self.value_loglog(np.array([self.u0]))[0])

    def _check_monotone(self):
        grid = np.concatenate([np.linspace(self.u0, self.u0 + 10.0, 64), np.geomspace(max(self.u0, 1.0) + 10.0, 1e6, 64)])
        vals = self.value_loglog(grid)
        if np.any(~np.isfinite(vals)) or np.any(np.diff(vals) < -1e-12):
            raise ValidationError("envelope is not non-decreasing on its domain")

    def describe(self) -> str:
        if self.kind == "h_rho":
            return f"hrho:{self.rho:g}"
        if self.kind == "sqrt_2c_loglog":
            return f"loglog:{self.c:g}"
        return f"tabulated[{self.ts.size}]"


@dataclass(frozen=True)
class IntegralDiagnostic:
    """Partial tail integral along a lnln-spaced horizon grid.

    ``T`` holds e^(e^u) where representable, +inf beyond; ``loglog_T``
    always carries the true grid.  ``fitted_log_slope`` is the growth
    exponent of the partial integral in lnln T (log-log regression over the
    last decade); ``integrand_index`` is the regular-variation index of the
    integrand driving the verdict.
    """

    loglog_T: np.ndarray
    T: np.ndarray
    partial: np.ndarray
    fitted_log_slope: float
    integrand_index: float
    verdict: str

    @property
    def value(self) -> float:
        return float(self.partial[-1])

    def to_json_dict(self, max_points: int = 129) -> dict:
        n = self.loglog_T.size
        step = max(1, n // max_points)
        sel = np.arange(0, n, step)
        if sel[-1] != n - 1:
            sel = np.append(sel, n - 1)
        def clean(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "T": [clean(t) for t in self.T[sel]],
            "partial": [clean(p) for p in self.partial[sel]],
            "loglogT": [clean(u) for u in self.loglog_T[sel]],
            "slope": clean(self.fitted_log_slope),
            "integrand_index": clean(self.integrand_index),
            "verdict": self.verdict,
        }


_DIVERGING_INDEX = 0.02  # |index| band separating the tri-state verdict


def _u_grid(u0: float, U: float, points: int) -> np.ndarray:
    if U <= u0:
        raise ValidationError("integration horizon below the envelope threshold")
    if u0 >= 0.9:
        return np.geomspace(u0, U, points)
    if U <= 1.0:
        return np.linspace(u0, U, points)
    head = np.linspace(u0, 1.0, 129)[:-1]
    return np.concatenate([head, np.geomspace(1.0, U, points)])


def _scan(envelope: Envelope, log_weight, U: float, points: int, fit_window: float) -> IntegralDiagnostic:
    """Cumulative integral of w(H(t)) dt/t out to lnln t = U.

    log_weight maps an array of H values to log w(H) (-inf allowed).
    The exact constant-head piece covers t in [1, t0]; the u grid covers
    the varying tail with composite trapezoid in u (dt/t = e^u du).
    """
    u0 = envelope.u0
    h0 = envelope.head_value
    lw0 = float(log_weight(np.array([h0]))[0])
    head_ln_t = math.exp(min(u0, _LOG_OVERFLOW))  # ln t0 = e^{u0}

    if U <= u0:
        # horizon inside the constant region: integral = w(H0) * ln T
        ln_T = math.exp(min(U, _LOG_OVERFLOW))
        total = math.exp(lw0) * ln_T if lw0 > -math.inf else 0.0
        u = np.array([U])
        partial = np.array([total])
        f_last = math.exp(lw0 + U) if lw0 > -math.inf else 0.0
        idx = -math.inf if f_last == 0.0 else math.inf
        verdict = "converging" if f_last == 0.0 else "diverging"
        return IntegralDiagnostic(u, _t_of_u(u), partial, 0.0, idx, verdict)

    u = _u_grid(u0, U, points)
    H = envelope.value_loglog(u)
    logf = log_weight(H) + u
    with np.errstate(over="ignore"):  # diverging tails may saturate to inf
        f = np.exp(logf)
    head = math.exp(lw0) * head_ln_t if lw0 > -math.inf else 0.0
    seg = 0.5 * (f[1:] + f[:-1]) * np.diff(u)
    partial = head + np.concatenate([[0.0], np.cumsum(seg)])

    if not np.any(f > 0.0):
        return IntegralDiagnostic(u, _t_of_u(u), partial, 0.0, -math.inf, "converging")

    index = _integrand_index(u, logf, U, fit_window)
    slope = _partial_slope(u, partial, U)
    if index > _DIVERGING_INDEX:
        verdict = "diverging"
    elif index < -_DIVERGING_INDEX:
        verdict = "converging"
    else:
        verdict = "inconclusive"
    return IntegralDiagnostic(u, _t_of_u(u), partial, slope, index, verdict)


def _t_of_u(u: np.ndarray) -> np.ndarray:
    s = np.exp(np.minimum(u, _LOG_OVERFLOW))
    out = np.full(u.shape, np.inf)
    ok = s < _LOG_OVERFLOW
    out[ok] = np.exp(s[ok])
    return out


def _integrand_index(u, logf, U, window) -> float:
    m = (u >= U / window) & (u > 0.0) & np.isfinite(logf)
    if np.count_nonzero(m) < 4:
        return math.nan
    return 1.0 + float(np.polyfit(np.log(u[m]), logf[m], 1)[0])


def _partial_slope(u, partial, U) -> float:
    m = (u >= U / 10.0) & (u > 0.0) & (partial > 0.0)
    if np.count_nonzero(m) < 4:
        return 0.0
    return float(np.polyfit(np.log(u[m]), np.log(partial[m]), 1)[0])


def _resolve_horizon(T, loglog_T):
    if (T is None) == (loglog_T is None):
        raise ValidationError("give exactly one of T or loglog_T")
    if loglog_T is not None:
        if not (loglog_T > 0.0):
            raise ValidationError("loglog_T must be positive")
        return float(loglog_T)
    if not (T > 1.0):
        raise ValidationError(f"T must exceed 1, got {T}")
    if not math.isfinite(T):
        raise ValidationError("pass loglog_T for horizons beyond float range")
    return math.log(math.log(T))


def j_zeta_partial(
    envelope: Envelope,
    zeta: float,
    T: float | None = None,
    quadrature_points: int = 3001,
    *,
    loglog_T: float | None = None,
    fit_window: float = _E,
) -> IntegralDiagnostic:
    """Partial integral of H^zeta(t) PhiBar(H(t)) dt/t over [1, T].

    Horizons beyond the largest representable float are addressed by their
    lnln value through ``loglog_T``.
    """
    if not (zeta > 0.0):
        raise ValidationError(f"zeta must be positive, got {zeta}")
    U = _resolve_horizon(T, loglog_T)

    def log_weight(h):
        with np.errstate(divide="ignore"):
            lw = zeta * np.log(h) + log_ndtr(-h)
        if np.any(np.isnan(lw)):
            raise NumericDomainError("non-finite envelope value in integrand")
        return lw

    return _scan(envelope, log_weight, U, quadrature_points, fit_window)


def psi_partial(
    envelope: Envelope,
    E: CompactSet1D,
    T: float | None = None,
    quadrature_points: int = 3001,
    *,
    loglog_T: float | None = None,
    fit_window: float = 27.0,
) -> IntegralDiagnostic:
    """Partial integral of H^2(t) K_E(1/H^2(t)) PhiBar(H(t)) dt/t over [1, T].

    The packing staircase K_E enters the integrand directly; the verdict
    fit window spans several of its ternary-scale periods by default so
    the log-periodic wiggle averages out.
    """
    U = _resolve_horizon(T, loglog_T)
    h_top = float(envelope.value_loglog(np.array([U]))[0])
    if h_top > 0.0 and E.resolution is not None and E.resolution > 1.0 / h_top**2:
        raise ResolutionError(
            f"set resolution {E.resolution:g} coarser than 1/H^2(T) = {1.0 / h_top**2:g}"
        )

    def log_weight(h):
        counts = np.ones_like(h)
        pos = h > 0.0
        if np.any(pos):
            out = np.empty(np.count_nonzero(pos), dtype=np.int64)
            packing_count_many(E.a, E.b, 1.0 / h[pos] ** 2, out)
            counts[pos] = out
        with np.errstate(divide="ignore"):
            lw = 2.0 * np.log(h) + np.log(counts) + log_ndtr(-h)
        return lw

    return _scan(envelope, log_weight, U, quadrature_points, fit_window)


def _effective_verdict(diag: IntegralDiagnostic) -> str:
    """Tri-state verdict with the integrand index as the inconclusive tie-break."""
    if diag.verdict != "inconclusive":
        return diag.verdict
    if math.isnan(diag.integrand_index):
        return "inconclusive"
    return "diverging" if diag.integrand_index > 0.0 else "converging"


def delta_of_H(
    envelope: Envelope,
    zeta_lo: float = 0.25,
    zeta_hi: float = 8.0,
    tol: float = 0.05,
    *,
    loglog_T: float = 3000.0,
    quadrature_points: int = 3001,
) -> float:
    """Divergence threshold of zeta -> integral of H^zeta PhiBar(H) dt/t.

    Bisection on the integral verdict.  Returns 0.0 when zeta_lo already
    diverges and the DELTA_INFINITE sentinel when zeta_hi still converges.
    """
    if not (zeta_lo < zeta_hi):
        raise ValidationError("need zeta_lo < zeta_hi")
    if not (tol > 0.0):
        raise ValidationError("tol must be positive")

    def verdict(z):
        return _effective_verdict(
            j_zeta_partial(envelope, z, loglog_T=loglog_T, quadrature_points=quadrature_points)
        )

    v_lo = verdict(zeta_lo)
    v_hi = verdict(zeta_hi)
    if v_lo == "inconclusive" and v_hi == "inconclusive":
        raise InconclusiveError(
            "no usable verdict at either zeta bracket",
            diagnostics=(
                j_zeta_partial(envelope, zeta_lo, loglog_T=loglog_T),
                j_zeta_partial(envelope, zeta_hi, loglog_T=loglog_T),
            ),
        )
    if v_lo == "diverging":
        return 0.0
    if v_hi == "converging":
        return DELTA_INFINITE
    lo, hi = zeta_lo, zeta_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if verdict(mid) == "diverging":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def psi_rho_threshold(
    E: CompactSet1D,
    rho_lo: float = 0.5,
    rho_hi: float = 4.5,
    tol: float = 0.04,
    *,
    loglog_T: float = 1e5,
    quadrature_points: int = 3001,
) -> float:
    """rho at which psi for the h_rho family flips from diverging to converging."""
    if not (rho_lo < rho_hi):
        raise ValidationError("need rho_lo < rho_hi")

    def verdict(rho):
        return _effective_verdict(
            psi_partial(
                Envelope.h_rho(rho), E, loglog_T=loglog_T, quadrature_points=quadrature_points
            )
        )

    lo, hi = rho_lo, rho_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if verdict(mid) == "diverging":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hdim_formula(delta: float) -> float:
    """min(1, (4 - delta)/2); negative values flag an empty exceedance set.

    The DELTA_INFINITE sentinel maps to -inf ("empty").
    """
    if is_delta_infinite(delta):
        return -math.inf
    if delta < 0.0 or math.isnan(delta):
        raise ValidationError(f"delta must be >= 0 or the sentinel, got {delta}")
    return min(1.0, (4.0 - delta) / 2.0)


def erdos_sequence(n: int) -> int:
    """floor(exp(n / max(1, ln n))), the subexponential test sequence."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    expo = n / max(1.0, math.log(n))
    if expo > _LOG_OVERFLOW:
        raise OverflowError(f"erdos_sequence({n}) exceeds the representable range")
    return int(math.floor(math.exp(expo)))


def parse_envelope(spec: str) -> Envelope:
    """Parse the CLI grammar: hrho:RHO | loglog:C"""
    if spec.startswith("hrho:"):
        try:
            return Envelope.h_rho(float(spec[len("hrho:"):]))
        except ValueError as exc:
            raise ValidationError(f"bad envelope spec {spec!r}") from exc
    if spec.startswith("loglog:"):
        try:
            return Envelope.sqrt_2c_loglog(float(spec[len("loglog:"):]))
        except ValueError as exc:
            raise ValidationError(f"bad envelope spec {spec!r}") from exc
    raise ValidationError(f"unknown envelope spec {spec!r}")
