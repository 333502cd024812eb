"""Noise models: the convolution factor h of the mixture X = Y + eps.

Each model carries closed forms for the density h, the transform h~ (in
the package convention F(t) = int exp(-i t x) f(x) dx), a high-frequency
envelope with recorded constants, the zero-set geometry where h~
vanishes, and an exact sampler.  Multivariate models are products of one
identical 1-d factor per axis.

Three decay families:
  * super-smooth: |h~(t)| ~ exp(-alpha |t|^k)   (Gaussian, Cauchy)
  * smooth:       |h~(t)| ~ |t|^{-beta}          (exponential, Laplace)
  * oscillatory:  |h~(t)| ~ |sin(t/lam)|^mu |t|^{-beta} with periodic
    zeros at j*pi*lam (m-fold self-convolved uniforms, mu = beta = m)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError, UnsupportedVariantError

SUPER_SMOOTH = "super_smooth"
SMOOTH = "smooth"
OSCILLATORY = "oscillatory"


@dataclass(frozen=True)
class ZeroSet:
    """Roots of h~ inside the symmetric band [-band, band], sorted."""

    band: float
    roots: tuple
    separation: float

    @property
    def count(self) -> int:
        return len(self.roots)


class _ProductNoise:
    """Shared plumbing: d-fold product of one 1-d factor."""

    d: int = 1

    # -- 1-d pieces supplied by each model ---------------------------------

    def htilde1d(self, t):
        raise NotImplementedError

    def density1d(self, x):
        raise NotImplementedError

    def envelope1d(self, t):
        raise NotImplementedError

    def sample1d(self, n: int, rng) -> np.ndarray:
        raise NotImplementedError

    # -- products -----------------------------------------------------------

    def htilde(self, *t):
        if len(t) != self.d:
            raise DomainError(f"expected {self.d} frequency arguments, got {len(t)}")
        out = self.htilde1d(np.asarray(t[0], dtype=float))
        for ta in t[1:]:
            out = out * self.htilde1d(np.asarray(ta, dtype=float))
        return out

    def density(self, *x):
        if len(x) != self.d:
            raise DomainError(f"expected {self.d} coordinate arguments, got {len(x)}")
        out = self.density1d(np.asarray(x[0], dtype=float))
        for xa in x[1:]:
            out = out * self.density1d(np.asarray(xa, dtype=float))
        return out

    def sample(self, n: int, rng) -> np.ndarray:
        if n < 1:
            raise DomainError("sample size must be >= 1")
        cols = [self.sample1d(n, rng) for _ in range(self.d)]
        return cols[0] if self.d == 1 else np.column_stack(cols)


@dataclass(frozen=True)
class GaussianNoise(_ProductNoise):
    """Standard normal noise; h~(t) = exp(-t^2/2) per axis."""

    d: int = 1
    variant = SUPER_SMOOTH
    alpha = 0.5
    k = 2.0
    env_c1 = 1.0
    env_c2 = 1.0
    env_onset = 0.0

    def htilde1d(self, t):
        return np.exp(-0.5 * np.asarray(t, dtype=float) ** 2) + 0j

    def density1d(self, x):
        return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2) / np.sqrt(2.0 * np.pi)

    def envelope1d(self, t):
        return np.exp(-self.alpha * np.abs(t) ** self.k)

    def sample1d(self, n, rng):
        return rng.standard_normal(n)

    def support_radius(self, eps: float = 1e-12) -> float:
        return math.sqrt(2.0 * math.log(1.0 / eps))

    def htilde1d_mp(self, t):
        """Scalar h~ in extended precision, for bands where float64 underflows."""
        import mpmath as mp

        return mp.e ** (-mp.mpf(float(t)) ** 2 / 2)


@dataclass(frozen=True)
class CauchyNoise(_ProductNoise):
    """Standard Cauchy noise; h~(t) = exp(-|t|) per axis."""

    d: int = 1
    variant = SUPER_SMOOTH
    alpha = 1.0
    k = 1.0
    env_c1 = 1.0
    env_c2 = 1.0
    env_onset = 0.0

    def htilde1d(self, t):
        return np.exp(-np.abs(np.asarray(t, dtype=float))) + 0j

    def density1d(self, x):
        return 1.0 / (np.pi * (1.0 + np.asarray(x, dtype=float) ** 2))

    def envelope1d(self, t):
        return np.exp(-np.abs(t))

    def sample1d(self, n, rng):
        return rng.standard_cauchy(n)

    def support_radius(self, eps: float = 1e-6) -> float:
        # P(|X| > R) ~ 2/(pi R)
        return 2.0 / (np.pi * eps)

    def htilde1d_mp(self, t):
        """Scalar h~ in extended precision, for bands where float64 underflows."""
        import mpmath as mp

        return mp.e ** (-abs(mp.mpf(float(t))))


@dataclass(frozen=True)
class ExponentialNoise(_ProductNoise):
    """Unit exponential noise on [0, inf); h~(t) = 1/(1 + i t) per axis.

    |h~(t)| = (1+t^2)^{-1/2}, a smooth model with beta = 1.
    """

    d: int = 1
    variant = SMOOTH
    beta = 1.0
    env_c1 = 1.0 / math.sqrt(2.0)
    env_c2 = 1.0
    env_onset = 1.0

    def htilde1d(self, t):
        return 1.0 / (1.0 + 1j * np.asarray(t, dtype=float))

    def density1d(self, x):
        x = np.asarray(x, dtype=float)
        # midpoint value at the jump keeps Riemann sums trapezoid-accurate
        return np.where(x > 0.0, np.exp(-np.maximum(x, 0.0)), np.where(x == 0.0, 0.5, 0.0))

    def envelope1d(self, t):
        return np.abs(np.asarray(t, dtype=float)) ** (-self.beta)

    def sample1d(self, n, rng):
        return rng.exponential(size=n)

    def support_radius(self, eps: float = 1e-12) -> float:
        return math.log(1.0 / eps)


@dataclass(frozen=True)
class LaplaceNoise(_ProductNoise):
    """Standard Laplace noise; h~(t) = 1/(1 + t^2), a smooth model beta = 2."""

    d: int = 1
    variant = SMOOTH
    beta = 2.0
    env_c1 = 0.5
    env_c2 = 1.0
    env_onset = 1.0

    def htilde1d(self, t):
        return 1.0 / (1.0 + np.asarray(t, dtype=float) ** 2) + 0j

    def density1d(self, x):
        return 0.5 * np.exp(-np.abs(np.asarray(x, dtype=float)))

    def envelope1d(self, t):
        return np.abs(np.asarray(t, dtype=float)) ** (-self.beta)

    def sample1d(self, n, rng):
        return rng.laplace(size=n)

    def support_radius(self, eps: float = 1e-12) -> float:
        return math.log(1.0 / eps) + math.log(2.0)


def _irwin_hall_density(y, m: int):
    """Density of the sum of m iid Uniform[0,1] variables."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for k in range(m + 1):
        out += (-1.0) ** k * comb(m, k) * np.maximum(y - k, 0.0) ** (m - 1)
    out /= math.factorial(m - 1)
    return np.where((y > 0.0) & (y < m), out, 0.0)


@dataclass(frozen=True)
class UniformConvNoise(_ProductNoise):
    """m-fold self-convolved uniform noise with h~(t) = (sin(t/lam)/(t/lam))^m.

    The base uniform lives on [-1/lam, 1/lam]; the transform's zeros sit
    exactly at t = j*pi*lam, each of order mu = m, and the algebraic
    envelope exponent is beta = m.
    """

    m: int = 1
    lam: float = 1.0
    d: int = 1
    variant = OSCILLATORY

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("fold count m must be >= 1")
        if self.lam <= 0.0:
            raise DomainError("zero period lam must be positive")

    @property
    def mu(self) -> int:
        return self.m

    @property
    def beta(self) -> float:
        return float(self.m)

    @property
    def env_c1(self) -> float:
        return self.lam**self.m

    @property
    def env_c2(self) -> float:
        return self.lam**self.m

    @property
    def env_onset(self) -> float:
        return 0.0

    @property
    def t_star(self) -> float:
        """Threshold below which h~ is guaranteed nonzero (half the first root)."""
        return 0.5 * np.pi * self.lam

    def htilde1d(self, t):
        u = np.asarray(t, dtype=float) / self.lam
        small = np.abs(u) < 1e-8
        us = np.where(small, 1.0, u)
        s = np.where(small, 1.0 - u**2 / 6.0, np.sin(us) / us)
        return s**self.m + 0j

    def density1d(self, x):
        a = 1.0 / self.lam
        x = np.asarray(x, dtype=float)
        if self.m == 1:
            inside = np.abs(x) < a
            edge = np.abs(x) == a
            return np.where(inside, 0.5 / a, np.where(edge, 0.25 / a, 0.0))
        y = x / (2.0 * a) + self.m / 2.0
        return _irwin_hall_density(y, self.m) / (2.0 * a)

    def envelope1d(self, t):
        t = np.asarray(t, dtype=float)
        return np.abs(np.sin(t / self.lam)) ** self.m * np.abs(t) ** (-self.beta)

    def sample1d(self, n, rng):
        a = 1.0 / self.lam
        return rng.uniform(-a, a, size=(n, self.m)).sum(axis=1)

    def support_radius(self, eps: float = 0.0) -> float:
        return self.m / self.lam

    def root_slope(self, j: int) -> float:
        """Local coefficient c_j in |h~(r_j + u)| ~ c_j |u|^mu near root j."""
        if j == 0:
            raise DomainError("root index must be nonzero")
        r = abs(j) * np.pi * self.lam
        return float((1.0 / r) ** self.m)


# ----------------------------------------------------------------------
# module-level operations


def htilde(model, *t):
    """Transform h~ of the noise model at frequency coordinates (one per axis)."""
    return model.htilde(*t)


def h_density(model, *x):
    """Noise density h at spatial coordinates (one per axis)."""
    return model.density(*x)


def envelope_inf(model, band: float) -> float:
    """inf of |h~| over the centered box of half-width ``band``, closed form.

    Valid only for zero-free models; the monotone per-axis envelope puts
    the infimum at the band edge.
    """
    if model.variant == OSCILLATORY:
        raise UnsupportedVariantError(
            "oscillatory transforms vanish inside any band containing a root; "
            "use the regularized transfer instead"
        )
    if band < 0.0:
        raise DomainError("band half-width must be nonnegative")
    edge = float(np.abs(model.htilde1d(band)))
    return edge**model.d


def zeros_in_band(model, band: float) -> ZeroSet:
    """All roots of h~ with |root| <= band, for oscillatory models."""
    if model.variant != OSCILLATORY:
        raise UnsupportedVariantError("only oscillatory transforms have roots")
    if band <= 0.0:
        raise DomainError("band limit must be positive")
    step = np.pi * model.lam
    jmax = int(np.floor(band / step))
    roots = [j * step for j in range(-jmax, jmax + 1) if j != 0]
    return ZeroSet(band=float(band), roots=tuple(roots), separation=step)


def sample_noise(model, n: int, rng) -> np.ndarray:
    """n i.i.d. draws from h; shape (n,) for d=1, (n, d) otherwise."""
    return model.sample(n, rng)


_MODEL_FACTORIES = {
    "gaussian": GaussianNoise,
    "cauchy": CauchyNoise,
    "exponential": ExponentialNoise,
    "laplace": LaplaceNoise,
    "uniform": UniformConvNoise,
}


def parse_model(spec: str, d: int = 1):
    """Build a noise model from a spec string like ``gaussian`` or ``uniform(m=2)``."""
    text = spec.strip().lower()
    match = re.fullmatch(r"([a-z_]+)(?:\((.*)\))?", text)
    if not match:
        raise DomainError(f"unparseable model spec {spec!r}")
    name, argtext = match.group(1), match.group(2)
    if name not in _MODEL_FACTORIES:
        raise DomainError(f"unknown noise model {name!r}; known: {sorted(_MODEL_FACTORIES)}")
    kwargs = {"d": d}
    if argtext:
        for piece in argtext.split(","):
            if not piece.strip():
                continue
            if "=" not in piece:
                raise DomainError(f"model parameters must be key=value, got {piece!r}")
            key, val = (s.strip() for s in piece.split("=", 1))
            kwargs[key] = int(val) if re.fullmatch(r"[+-]?\d+", val) else float(val)
    try:
        return _MODEL_FACTORIES[name](**kwargs)
    except TypeError as exc:
        raise DomainError(f"bad parameters for model {name!r}: {exc}") from None
