"""Mixture-density estimates f_hat of the observed density f_p = h * p.

Two routes produce the assumed object "f_hat = h * p_hat with error a_n":

* ``fit_minimum_distance`` — a real estimator: p_hat is a sieve of
  nonnegative smooth-bump atoms whose weights minimize the L2 distance
  between the model characteristic function and the empirical one over a
  fixed frequency window (a convex quadratic program, solved by projected
  gradient on the simplex).

* ``oracle_inject`` — a synthetic estimator: p_hat = p + A * eta with a
  zero-mass, (approximately) band-limited perturbation eta, where the
  amplitude A is calibrated so that ||f_hat - f_p||_u hits a prescribed
  a_n exactly.  This isolates the deconvolution analysis from the
  estimation noise.

Both emit f_hat = h * p_hat spectrally on the grid, so the convolution
form holds to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError
from .grids import GridBox, GridFunction, apply_transfer, grid_from_callable, lp_distance, lp_norm


def _bump(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(np.abs(u) < 1.0, np.exp(-1.0 / np.maximum(1.0 - u**2, 1e-300)), 0.0)
    return out


_BUMP_MASS = None


def _bump_mass() -> float:
    global _BUMP_MASS
    if _BUMP_MASS is None:
        x = np.linspace(-1.0, 1.0, 2**14 + 1)
        _BUMP_MASS = float(np.trapezoid(_bump(x), x))
    return _BUMP_MASS


@dataclass(frozen=True)
class SieveMixing:
    """p_hat = sum_i w_i * atom((y - c_i)/width), atoms normalized to unit mass."""

    centers: tuple
    weights: np.ndarray
    atom_width: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0.0):
            raise DomainError("sieve weights must be nonnegative")

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        scale = self.atom_width * _bump_mass()
        out = np.zeros_like(y, dtype=float)
        for c, w in zip(self.centers, self.weights):
            if w > 0.0:
                out += w * _bump((y - c) / self.atom_width) / scale
        return out

    def mass(self) -> float:
        return float(np.sum(self.weights))

    def atom_transform(self, t):
        """Transform of one unit-mass atom at frequencies t (numeric quadrature)."""
        x = np.linspace(-self.atom_width, self.atom_width, 2049)
        vals = _bump(x / self.atom_width) / (self.atom_width * _bump_mass())
        t = np.asarray(t, dtype=float)
        phases = np.exp(-1j * np.outer(t, x))
        return np.trapezoid(phases * vals, x, axis=1)


@dataclass(frozen=True)
class EstimateQuality:
    """Recorded error level of a mixture estimate in the u-norm."""

    u: float
    a_n: float
    mode: str  # "measured" or "injected"

    def __post_init__(self):
        if self.a_n < 0.0:
            raise DomainError("error level a_n must be nonnegative")


def _project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    srt = np.sort(w)[::-1]
    css = np.cumsum(srt) - 1.0
    idx = np.arange(1, len(w) + 1)
    cond = srt - css / idx > 0
    rho = idx[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(w - theta, 0.0)


def empirical_characteristic(samples: np.ndarray, t: np.ndarray) -> np.ndarray:
    """ECF(t) = mean of exp(-i t X_j) (package transform convention)."""
    return np.exp(-1j * np.outer(t, samples)).mean(axis=1)


def fit_minimum_distance(
    samples,
    model,
    support: tuple,
    nodes: int = 40,
    atom_width: float | None = None,
    band: float = 4.0,
    box: GridBox | None = None,
    max_iter: int = 20000,
    tol: float = 1e-10,
):
    """Sieve minimum-distance fit of the mixing density from samples of X.

    Minimizes  int_{|t|<=band} |sum_i w_i atom~(t) e^{-i t c_i} h~(t) - ECF(t)|^2 dt
    over the simplex {w >= 0, sum w = 1}, by projected gradient with step
    1/L (L the largest eigenvalue of the quadratic form).  Returns the
    sieve p_hat and f_hat = h * p_hat sampled on ``box``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise DomainError("need at least one sample")
    if nodes < 2:
        raise DomainError("sieve needs at least two nodes")
    lo, hi = support
    if not lo < hi:
        raise DomainError("invalid support bounds")
    centers = np.linspace(lo, hi, nodes)
    if atom_width is None:
        atom_width = 1.5 * (hi - lo) / (nodes - 1)

    nt = 512
    t = np.linspace(-band, band, nt)
    dt = t[1] - t[0]
    sieve0 = SieveMixing(tuple(centers), np.full(nodes, 1.0 / nodes), atom_width)
    atom_t = sieve0.atom_transform(t)
    design = atom_t[:, None] * np.exp(-1j * np.outer(t, centers)) * model.htilde1d(t)[:, None]
    target = empirical_characteristic(samples, t)

    gram = np.real(design.conj().T @ design) * dt
    rhs = np.real(design.conj().T @ target) * dt
    step = 1.0 / max(np.linalg.eigvalsh(gram).max(), 1e-12)

    def objective(v):
        return float(v @ gram @ v - 2.0 * rhs @ v)

    # monotone accelerated projected gradient: try the momentum candidate,
    # fall back to the plain step whenever it would not decrease the objective
    w = np.full(nodes, 1.0 / nodes)
    obj = objective(w)
    z, momentum = w.copy(), 1.0
    for _ in range(max_iter):
        cand = _project_simplex(z - step * (2.0 * (gram @ z - rhs)))
        cand_obj = objective(cand)
        if cand_obj > obj:
            cand = _project_simplex(w - step * (2.0 * (gram @ w - rhs)))
            cand_obj = objective(cand)
            momentum = 1.0
            if cand_obj > obj + 1e-14:
                raise NonConvergenceError(
                    "projected gradient objective increased", last_iterate=w, objective=obj
                )
        momentum_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum**2))
        z = cand + ((momentum - 1.0) / momentum_new) * (cand - w)
        momentum = momentum_new
        w, done = cand, obj - cand_obj < tol
        obj = cand_obj
        if done:
            break
    else:
        raise NonConvergenceError(
            "projected gradient hit the iteration cap", last_iterate=w, objective=obj
        )

    sieve = SieveMixing(tuple(centers), w, atom_width)
    if box is None:
        pad = min(model.support_radius(1e-9), 64.0)
        half = max(abs(lo), abs(hi)) + atom_width + pad + 1.0
        box = GridBox((-half,), (half,), (2**14,))
    p_hat = grid_from_callable(box, sieve.pdf)
    f_hat = apply_transfer(p_hat, model.htilde).real_part()
    return sieve, p_hat, f_hat


# ----------------------------------------------------------------------
# oracle injection


def _perturbation(p: GridFunction, shape: str, omega: float, seed) -> np.ndarray:
    """Zero-mass oscillation supported strictly inside supp(p)."""
    x = p.box.axis_nodes(0)
    pv = np.real(p.values)
    thresh = 1e-8 * np.max(pv)
    inside = np.where(pv > thresh)[0]
    if inside.size < 8:
        raise DomainError("target support too thin to perturb")
    lo, hi = x[inside[0]], x[inside[-1]]
    c, w = 0.5 * (lo + hi), 0.35 * (hi - lo)
    window = _bump((x - c) / w)

    if shape == "bandlimited_bump":
        osc = np.cos(omega * (x - c))
    elif shape == "random_phase":
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=8)
        freqs = omega * rng.uniform(0.5, 1.0, size=8)
        osc = sum(np.cos(f * (x - c) + ph) for f, ph in zip(freqs, phases)) / np.sqrt(8.0)
    else:
        raise DomainError(f"unknown perturbation shape {shape!r}")

    eta = osc * window
    # restore zero mass with a window-shaped correction, still inside supp(p)
    eta -= (np.sum(eta) / np.sum(window)) * window
    return eta


def oracle_inject(
    p: GridFunction,
    model,
    a_n: float,
    u: float = 2.0,
    shape: str = "bandlimited_bump",
    omega: float = 3.0,
    seed=0,
    max_steps: int = 60,
):
    """Manufacture (p_hat, f_hat) with ||f_hat - f_p||_u = a_n to 1e-6.

    p_hat = p + A*eta with eta zero-mass and supported inside supp(p); A is
    found by bisection on the monotone amplitude -> norm map, capped by
    the largest amplitude keeping p_hat nonnegative.
    """
    if a_n <= 0.0:
        raise DomainError("a_n must be positive")
    eta = _perturbation(p, shape, omega, seed)
    pv = np.real(p.values)
    neg = eta < 0.0
    cap = float(np.min(pv[neg] / -eta[neg])) if np.any(neg) else np.inf

    h_eta = np.real(apply_transfer(GridFunction(p.box, eta), model.htilde).values)
    norm_unit = lp_norm(GridFunction(p.box, h_eta), u)
    feasible = cap * norm_unit
    if a_n > feasible:
        raise DomainError(
            f"a_n={a_n:g} infeasible under nonnegativity; max feasible a_n is {feasible:g}"
        )

    lo_a, hi_a = 0.0, cap
    A = 0.5 * cap
    for _ in range(max_steps):
        A = 0.5 * (lo_a + hi_a)
        if A * norm_unit < a_n:
            lo_a = A
        else:
            hi_a = A
        if abs(A * norm_unit - a_n) <= 1e-9 * a_n:
            break
    A = a_n / norm_unit  # the map is exactly linear; bisection brackets it

    p_hat = GridFunction(p.box, pv + A * eta)
    f_hat = apply_transfer(p_hat, model.htilde).real_part()
    return p_hat, f_hat


def measure_quality(f_hat: GridFunction, f_p: GridFunction, u) -> EstimateQuality:
    """Measured error level of the mixture estimate (assumption bookkeeping)."""
    return EstimateQuality(u=float(u), a_n=lp_distance(f_hat, f_p, u), mode="measured")
