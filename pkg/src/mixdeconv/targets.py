"""Ground-truth mixing densities with controlled Holder smoothness.

Families:
  * ``bump``      — C-infinity compactly supported exponential bump
                    (effectively unlimited smoothness order)
  * ``spline``    — bump modulated by a |y - y0|^{q~} singular factor so
                    the Holder order is exactly q~ at one interior point
  * ``twobump``   — bimodal mixture of two overlapping bumps

Each density knows its support, its derivatives (symbolically generated),
and a smoothness descriptor (q, gamma, L) with q~ = q + gamma.  The
module also provides the forward mixture f_p = h * p and the observation
sampler X = Y + eps.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import DomainError
from .grids import GridBox, GridFunction, apply_transfer, grid_from_callable
from .noise import sample_noise


@dataclass(frozen=True)
class SmoothnessClass:
    """Holder class descriptor: q derivatives, q-th has modulus L*delta^gamma."""

    q: int
    gamma: float
    L: float

    def __post_init__(self):
        if self.q < 0:
            raise DomainError("derivative count q must be nonnegative")
        if not (0.0 < self.gamma <= 1.0):
            raise DomainError("Holder exponent gamma must lie in (0, 1]")
        if self.L <= 0.0:
            raise DomainError("modulus constant L must be positive")

    @property
    def qtilde(self) -> float:
        return self.q + self.gamma


@dataclass(frozen=True)
class MixingDensity:
    """A 1-d mixing density with derivatives and a smoothness certificate."""

    family: str
    support: tuple
    smoothness: SmoothnessClass
    _evaluators: tuple  # (p, p', p'', ...) vectorized callables

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return self._evaluators[0](y)

    def derivative(self, order: int):
        """Evaluator of p^{(order)}; available for order <= q."""
        if order < 0:
            raise DomainError("derivative order must be nonnegative")
        if order >= len(self._evaluators):
            raise DomainError(
                f"derivative order {order} exceeds the family's budget "
                f"{len(self._evaluators) - 1}"
            )
        fn = self._evaluators[order]
        return lambda y: fn(np.asarray(y, dtype=float))

    @property
    def center(self) -> float:
        lo, hi = self.support
        return 0.5 * (lo + hi)

    def mean(self, nodes: int = 2**16) -> float:
        lo, hi = self.support
        y = np.linspace(lo, hi, nodes)
        w = self.pdf(y)
        return float(np.trapezoid(w * y, y))


def _lambdify_chain(expr, y, orders: int):
    """Vectorized evaluators of expr and its first ``orders`` derivatives."""
    fns = []
    current = expr
    for k in range(orders + 1):
        if k > 0:
            current = sp.diff(current, y)
        fn = sp.lambdify(y, current, modules="numpy")

        def wrapped(v, _fn=fn):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                out = np.asarray(_fn(v), dtype=float)
            return np.where(np.isfinite(out), out, 0.0)

        fns.append(wrapped)
    return tuple(fns)


def _normalizer(fns, lo: float, hi: float) -> float:
    y = np.linspace(lo, hi, 2**16 + 1)
    mass = float(np.trapezoid(fns[0](y), y))
    if not (mass > 0.0 and np.isfinite(mass)):
        raise DomainError("target parameters give a non-normalizable density")
    return mass


def _measure_modulus(fns, q: int, gamma: float, lo: float, hi: float) -> float:
    """Empirical Holder constant of the q-th derivative."""
    y = np.linspace(lo, hi, 2049)
    dq = fns[q](y)
    L = 0.0
    for step in (1, 2, 4, 8, 32, 128):
        delta = (y[step] - y[0])
        L = max(L, float(np.max(np.abs(dq[step:] - dq[:-step])) / delta**gamma))
    return max(L, 1e-12)


def _bump_expr(y, lo: float, hi: float, center: float, width: float):
    u = (y - center) / width
    return sp.Piecewise((sp.exp(-1 / (1 - u**2)), sp.Abs(u) < 1), (0, True))


def smooth_bump(lo: float = -1.0, hi: float = 1.0, orders: int = 4) -> MixingDensity:
    """C-infinity bump supported on [lo, hi]; all derivatives vanish at the ends."""
    if not lo < hi:
        raise DomainError("need lo < hi")
    y = sp.symbols("y", real=True)
    center, width = 0.5 * (lo + hi), 0.5 * (hi - lo)
    fns = _lambdify_chain(_bump_expr(y, lo, hi, center, width), y, orders)
    mass = _normalizer(fns, lo, hi)
    scaled = tuple((lambda v, _f=f: _f(v) / mass) for f in fns)
    # infinitely smooth: record a generous class measured at q = 2
    L = _measure_modulus(scaled, 2, 1.0, lo, hi)
    cls = SmoothnessClass(q=2, gamma=1.0, L=L)
    return MixingDensity("bump", (float(lo), float(hi)), cls, scaled)


def spline_holder(qtilde: float, lo: float = -1.0, hi: float = 1.0) -> MixingDensity:
    """Density of exact Holder order q~ = q + gamma at one interior point.

    A C-infinity bump is modulated by 1 + c*sing((y - y0)/w) where sing is
    |u|^{q~} for fractional q~ and sign(u)|u|^{q~} for even integer q~ (the
    plain power would be a polynomial there); the window keeps positivity
    and boundary vanishing.
    """
    if qtilde <= 0.0:
        raise DomainError("qtilde must be positive")
    if not lo < hi:
        raise DomainError("need lo < hi")
    q = int(math.ceil(qtilde)) - 1
    gamma = qtilde - q
    y = sp.symbols("y", real=True)
    center, width = 0.5 * (lo + hi), 0.5 * (hi - lo)
    # off-center singular point so the density is not symmetric there;
    # the narrow scale and the Gaussian damping of the singular factor make
    # the Holder-q~ behaviour dominate the smoothing error already at
    # moderate bandwidths, while |u|^{q~} e^{-3u^2} stays small enough for
    # positivity of 1 + (3/2)*sing
    y0 = center + 0.25 * width
    u = (y - y0) / (0.35 * width)
    # piecewise power instead of Abs/sign keeps the symbolic derivatives
    # free of distributional terms; even integer powers need the odd
    # continuation or the factor would be a plain polynomial
    even_integer = abs(qtilde - round(qtilde)) < 1e-12 and round(qtilde) % 2 == 0
    lower = -((-u) ** qtilde) if even_integer else (-u) ** qtilde
    sing = sp.Piecewise((u**qtilde, u >= 0), (lower, True)) * sp.exp(-3 * u**2)
    expr = _bump_expr(y, lo, hi, center, width) * (1 + sp.Rational(3, 2) * sing)
    fns = _lambdify_chain(expr, y, q)
    mass = _normalizer(fns, lo, hi)
    scaled = tuple((lambda v, _f=f: _f(v) / mass) for f in fns)
    L = _measure_modulus(scaled, q, gamma, lo, hi)
    cls = SmoothnessClass(q=q, gamma=gamma, L=L)
    return MixingDensity(f"spline(qtilde={qtilde})", (float(lo), float(hi)), cls, scaled)


def two_bump(lo: float = -1.0, hi: float = 1.0, orders: int = 4) -> MixingDensity:
    """Bimodal mixture of two overlapping bumps; the inter-mode dip stays positive."""
    if not lo < hi:
        raise DomainError("need lo < hi")
    y = sp.symbols("y", real=True)
    center, width = 0.5 * (lo + hi), 0.5 * (hi - lo)
    # component bumps overlap slightly: modes stay separated and the dip
    # between them stays strictly positive
    expr = _bump_expr(y, lo, hi, center - 0.45 * width, 0.5 * width) + _bump_expr(
        y, lo, hi, center + 0.45 * width, 0.5 * width
    )
    fns = _lambdify_chain(expr, y, orders)
    mass = _normalizer(fns, lo, hi)
    scaled = tuple((lambda v, _f=f: _f(v) / mass) for f in fns)
    L = _measure_modulus(scaled, 2, 1.0, lo, hi)
    cls = SmoothnessClass(q=2, gamma=1.0, L=L)
    return MixingDensity("twobump", (float(lo), float(hi)), cls, scaled)


def make_target(family: str, **params) -> MixingDensity:
    if family == "bump":
        return smooth_bump(**params)
    if family == "spline":
        return spline_holder(**params)
    if family == "twobump":
        return two_bump(**params)
    raise DomainError(f"unknown target family {family!r}; known: bump, spline, twobump")


def parse_target(spec: str) -> MixingDensity:
    """Build a target from a spec string like ``bump`` or ``spline(qtilde=2.0)``."""
    text = spec.strip().lower()
    match = re.fullmatch(r"([a-z_]+)(?:\((.*)\))?", text)
    if not match:
        raise DomainError(f"unparseable target spec {spec!r}")
    family, argtext = match.group(1), match.group(2)
    params = {}
    if argtext:
        for piece in argtext.split(","):
            if not piece.strip():
                continue
            if "=" not in piece:
                raise DomainError(f"target parameters must be key=value, got {piece!r}")
            key, val = (s.strip() for s in piece.split("=", 1))
            params[key] = float(val)
    return make_target(family, **params)


# ----------------------------------------------------------------------
# forward model


def default_forward_box(p: MixingDensity, model, nodes: int = 2**14) -> GridBox:
    """Grid box wide enough for supp(p) + (effective) supp(h), padded."""
    lo, hi = p.support
    pad = min(model.support_radius(1e-9), 64.0)
    half = max(abs(lo), abs(hi)) + pad + 1.0
    return GridBox((-half,), (half,), (int(nodes),))


def forward_density(p: MixingDensity, model, box: GridBox | None = None) -> GridFunction:
    """The observed mixture f_p = h * p sampled on a grid.

    The convolution is applied spectrally with the closed-form transform
    of h, so f_p's transform equals h~ * p~ exactly on the grid.
    """
    if model.d != 1:
        raise DomainError("forward_density is one-dimensional; build products explicitly")
    if box is None:
        box = default_forward_box(p, model)
    pg = grid_from_callable(box, p.pdf)
    out = apply_transfer(pg, model.htilde)
    return out.real_part()


def sample_mixture(p: MixingDensity, model, n: int, seed) -> np.ndarray:
    """n draws of X = Y + eps, Y ~ p by inverse-CDF, eps ~ h; deterministic in seed."""
    if n < 1:
        raise DomainError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = p.support
    y = np.linspace(lo, hi, 2**16 + 1)
    pdf = p.pdf(y)
    cdf = np.concatenate(([0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(y))))
    cdf /= cdf[-1]
    u = rng.uniform(size=n)
    draws_y = np.interp(u, cdf, y)
    eps = sample_noise(model, n, rng)
    return draws_y + eps
