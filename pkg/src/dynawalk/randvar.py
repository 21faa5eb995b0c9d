"""Increment distributions and Gaussian special functions.

The normal sampler goes through the inverse CDF (one uniform per draw), so
the number of raw uniforms consumed per sample is deterministic and replay
under counter-based streams is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erfc, ndtr, ndtri

from .errors import NumericDomainError, ValidationError
from .streams import RngStream

_SQRT2 = math.sqrt(2.0)


def phi_bar(z):
    """Upper tail P{N(0,1) >= z} via the complementary error function.

    Accurate to ~1e-16 relative in the bulk and deep into the tail
    (erfc carries the asymptotic continuation internally).
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)):
        raise NumericDomainError("phi_bar: NaN input")
    out = 0.5 * erfc(z / _SQRT2)
    return float(out) if out.ndim == 0 else out


def bivariate_upper(z1: float, z2: float, rho: float) -> float:
    """P{Z1 >= z1, Z2 >= z2} for standard bivariate normal, correlation rho.

    Quadrature of the single-integral representation
    d/drho P{Z1>=z1, Z2>=z2} = binormal density, integrated from the
    independent case with the substitution r = sin(theta) (removes the
    1/sqrt(1-r^2) endpoint singularity).  Absolute error <= 1e-10.
    """
    if math.isnan(z1) or math.isnan(z2) or math.isnan(rho):
        raise NumericDomainError("bivariate_upper: NaN input")
    if abs(rho) > 1.0:
        raise ValidationError(f"correlation {rho} outside [-1, 1]")
    if rho == 1.0:
        return phi_bar(max(z1, z2))
    if rho == -1.0:
        # Z2 = -Z1: event is z1 <= Z1 <= -z2
        return max(0.0, float(ndtr(-z2) - ndtr(z1)))

    def integrand(theta):
        s = math.sin(theta)
        c2 = math.cos(theta) ** 2
        return math.exp(-(z1 * z1 - 2.0 * s * z1 * z2 + z2 * z2) / (2.0 * c2)) / (2.0 * math.pi)

    v, _ = integrate.quad(integrand, 0.0, math.asin(rho), epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(phi_bar(z1) * phi_bar(z2) + v)


@dataclass(frozen=True)
class IncrementDistribution:
    """The common law of the walk increments.

    kind is one of "standard_normal", "rademacher", "lattice_pmf".
    For lattice pmfs, ``support``/``probs`` hold the integer atoms and their
    masses; mean/variance/gcd are derived once at construction.
    """

    kind: str
    support: tuple = ()
    probs: tuple = ()
    mean: float = field(default=0.0, compare=False)
    variance: float = field(default=1.0, compare=False)

    @staticmethod
    def standard_normal() -> "IncrementDistribution":
        return IncrementDistribution(kind="standard_normal")

    @staticmethod
    def rademacher() -> "IncrementDistribution":
        return IncrementDistribution(
            kind="rademacher", support=(-1, 1), probs=(0.5, 0.5), mean=0.0, variance=1.0
        )

    @staticmethod
    def lattice(pmf: dict) -> "IncrementDistribution":
        """Finite-support integer pmf, e.g. {-1: 0.25, 0: 0.5, 1: 0.25}."""
        if not pmf:
            raise ValidationError("empty pmf")
        support = tuple(sorted(int(v) for v in pmf))
        if len(support) != len(pmf):
            raise ValidationError("duplicate atoms in pmf")
        probs = tuple(float(pmf[v]) for v in support)
        if any(p < 0.0 for p in probs):
            raise ValidationError("negative probability in pmf")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"pmf mass {total} != 1 beyond 1e-12")
        mean = math.fsum(v * p for v, p in zip(support, probs))
        var = math.fsum(v * v * p for v, p in zip(support, probs)) - mean * mean
        return IncrementDistribution(
            kind="lattice_pmf", support=support, probs=probs, mean=mean, variance=var
        )

    # -- derived properties -------------------------------------------------

    @property
    def is_lattice(self) -> bool:
        return self.kind in ("rademacher", "lattice_pmf")

    @property
    def is_normalized(self) -> bool:
        """Mean 0 within 1e-12 and unit variance within 1e-9."""
        return abs(self.mean) <= 1e-12 and abs(self.variance - 1.0) <= 1e-9

    def require_centered(self):
        if abs(self.mean) > 1e-12:
            raise ValidationError(f"distribution mean {self.mean} != 0")

    def group_gcd(self) -> int:
        """gcd of the support atoms: the walk lives on g*Z."""
        if not self.is_lattice:
            raise ValidationError("group_gcd defined for lattice distributions only")
        g = 0
        for v in self.support:
            g = math.gcd(g, abs(v))
        return max(g, 1)

    # -- sampling -----------------------------------------------------------

    def sample(self, gen: np.random.Generator, size=None):
        """Draw from the law using exactly one uniform per sample."""
        u = gen.random(size)
        if self.kind == "standard_normal":
            return ndtri(u)
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return np.asarray(self.support, dtype=float)[idx]


def sample_increment(dist: IncrementDistribution, rng: RngStream, size=None):
    """Draw from ``dist`` on the stream ``rng``."""
    return dist.sample(rng.generator(), size)


def sample_symmetric_stable(alpha: float, rng_or_gen, size=None):
    """Standard symmetric alpha-stable draw(s), characteristic exponent exp(-|theta|^alpha).

    Exact method from a uniform angle and a unit exponential; two uniforms
    per draw, alpha restricted to (0, 1).
    """
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha {alpha} outside (0, 1)")
    gen = rng_or_gen.generator() if isinstance(rng_or_gen, RngStream) else rng_or_gen
    theta = (gen.random(size) - 0.5) * math.pi
    w = -np.log1p(-gen.random(size))
    out = (np.sin(alpha * theta) / np.cos(theta) ** (1.0 / alpha)) * (
        np.cos((1.0 - alpha) * theta) / w
    ) ** ((1.0 - alpha) / alpha)
    return float(out) if np.ndim(out) == 0 else out


def parse_distribution(spec: str) -> IncrementDistribution:
    """Parse the CLI grammar: normal | rademacher | pmf:v1:p1;v2:p2;..."""
    if spec == "normal":
        return IncrementDistribution.standard_normal()
    if spec == "rademacher":
        return IncrementDistribution.rademacher()
    if spec.startswith("pmf:"):
        body = spec[len("pmf:"):]
        pmf = {}
        for item in body.split(";"):
            if not item:
                continue
            try:
                v, p = item.split(":")
                pmf[int(v)] = float(p)
            except ValueError as exc:
                raise ValidationError(f"bad pmf item {item!r}") from exc
        return IncrementDistribution.lattice(pmf)
    raise ValidationError(f"unknown distribution spec {spec!r}")
