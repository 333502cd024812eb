"""Uniform grids on R^d, continuous Fourier transforms, convolution, norms.

Transform convention (fixed once, everything downstream inherits it):

    F(t) = int exp(-i t.x) f(x) dx,
    f(x) = (2 pi)^{-d} int exp(+i t.x) F(t) dt.

Grid transforms reconstruct the continuous transform from the FFT with
explicit spacing and phase factors, so that F sampled on the frequency
grid approximates the continuous integral (spectrally accurately for
smooth, decaying integrands).

Grids are closed-open: the nodes of an axis with bounds [lo, hi) and
count n are lo + k*(hi-lo)/n, k = 0..n-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StructuralError

# Default tolerance for "this grid function is a probability density".
EPS_MASS = 1e-3

SPATIAL = "spatial"
FREQUENCY = "frequency"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridBox:
    """Axis-aligned box with a uniform closed-open grid on each axis."""

    lo: tuple
    hi: tuple
    n: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)
        if not (len(lo) == len(hi) == len(n)):
            raise StructuralError("lo, hi, n must have the same length")
        for a, b in zip(lo, hi):
            if not a < b:
                raise DomainError(f"need lo < hi per axis, got [{a}, {b})")
        for k in n:
            if k < 16 or not _is_power_of_two(k):
                raise DomainError(f"point count must be a power of two >= 16, got {k}")

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.n)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_nodes(self, axis: int) -> np.ndarray:
        return self.lo[axis] + self.spacing[axis] * np.arange(self.n[axis])

    def nodes(self):
        """Meshgrid ('ij') of node coordinates, one array per axis."""
        return np.meshgrid(*[self.axis_nodes(a) for a in range(self.dim)], indexing="ij")

    def frequency_box(self) -> "GridBox":
        """The box carrying this box's FFT frequencies, in ascending order."""
        dt = 2.0 * np.pi / (np.asarray(self.n) * self.spacing)
        half = dt * np.asarray(self.n) / 2.0
        return GridBox(tuple(-half), tuple(half), self.n)

    def same_geometry(self, other: "GridBox", rtol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and np.allclose(self.lo, other.lo, rtol=rtol, atol=1e-12)
            and np.allclose(self.hi, other.hi, rtol=rtol, atol=1e-12)
        )


@dataclass(frozen=True)
class GridFunction:
    """Sampled function on a GridBox.  Immutable; operations are pure."""

    box: GridBox
    values: np.ndarray
    domain: str = SPATIAL

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != tuple(self.box.n):
            raise StructuralError(
                f"value shape {vals.shape} does not match box counts {self.box.n}"
            )
        if self.domain not in (SPATIAL, FREQUENCY):
            raise DomainError(f"unknown domain tag {self.domain!r}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def real_part(self) -> "GridFunction":
        return GridFunction(self.box, np.real(self.values), self.domain)

    def mass(self) -> float:
        """Quadrature mass (Riemann sum; trapezoid when the tails vanish)."""
        return float(np.real(np.sum(self.values)) * self.box.cell_volume)

    def is_density(self, eps_mass: float = EPS_MASS) -> bool:
        if np.min(np.real(self.values)) < -eps_mass:
            return False
        return abs(self.mass() - 1.0) <= eps_mass


def grid_from_callable(box: GridBox, func, domain: str = SPATIAL) -> GridFunction:
    """Sample ``func`` on the nodes of ``box``.

    ``func`` receives one coordinate array per axis.
    """
    return GridFunction(box, func(*box.nodes()), domain)


def _check_same_grid(f: GridFunction, g: GridFunction):
    if f.domain != g.domain:
        raise StructuralError("domain tags differ")
    if not f.box.same_geometry(g.box):
        raise StructuralError("grid boxes differ")


def lp_distance(f: GridFunction, g: GridFunction, u) -> float:
    """L_u distance on the grid; u is a real >= 1 or numpy.inf."""
    _check_same_grid(f, g)
    u = float(u)
    if u < 1.0:
        raise DomainError(f"norm order must satisfy u >= 1, got {u}")
    diff = np.abs(f.values - g.values)
    if np.isinf(u):
        return float(np.max(diff))
    return float((np.sum(diff**u) * f.box.cell_volume) ** (1.0 / u))


def lp_norm(f: GridFunction, u) -> float:
    zero = GridFunction(f.box, np.zeros(f.box.n), f.domain)
    return lp_distance(f, zero, u)


def hellinger(p1: GridFunction, p2: GridFunction, eps_mass: float = EPS_MASS) -> float:
    """Hellinger distance between two nonnegative densities on one grid."""
    _check_same_grid(p1, p2)
    a = np.real(p1.values)
    b = np.real(p2.values)
    if np.min(a) < -eps_mass or np.min(b) < -eps_mass:
        raise DomainError("density samples below -eps_mass")
    a = np.clip(a, 0.0, None)
    b = np.clip(b, 0.0, None)
    return float(np.sqrt(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2) * p1.box.cell_volume))


def _alternating_sign(shape):
    sign = np.ones(shape)
    for axis, n in enumerate(shape):
        idx = [None] * len(shape)
        idx[axis] = slice(None)
        sign = sign * ((-1.0) ** np.arange(n))[tuple(idx)]
    return sign


def _axis_phase(n: int, lo: float, dx: float, sign: float):
    """exp(sign * i * t_j * lo) for t_j = (2 pi / (n dx)) * (j - n/2).

    The argument t_j * lo equals 2 pi * (lo/dx) * (j - n/2) / n.  When
    lo/dx is an integer (symmetric boxes, grid-aligned origins) the
    reduction mod 2 pi is done in exact integer arithmetic, which keeps
    the phase accurate even when |t_j * lo| is of order 1e4 or more.
    """
    m0 = lo / dx
    j = np.arange(n)
    if abs(m0 - round(m0)) <= 1e-9 * max(1.0, abs(m0)):
        k = (int(round(m0)) * (j - n // 2)) % n
        theta = (2.0 * np.pi / n) * k
    else:
        theta = (2.0 * np.pi * m0 / n) * (j - n / 2.0)
    return np.exp(sign * 1j * theta)


def fourier(f: GridFunction) -> GridFunction:
    """Continuous Fourier transform sampled on the FFT frequency grid."""
    if f.domain != SPATIAL:
        raise StructuralError("fourier expects a spatial grid function")
    box = f.box
    fbox = box.frequency_box()
    sign = _alternating_sign(box.n)
    vals = np.fft.fftn(np.asarray(f.values) * sign)
    phase = np.ones(box.n, dtype=complex)
    for axis in range(box.dim):
        ph = _axis_phase(box.n[axis], box.lo[axis], box.spacing[axis], -1.0)
        idx = [None] * box.dim
        idx[axis] = slice(None)
        phase = phase * ph[tuple(idx)]
    vals = vals * phase * box.cell_volume
    return GridFunction(fbox, vals, FREQUENCY)


def inverse_fourier(F: GridFunction, spatial_lo=None) -> GridFunction:
    """Inverse of :func:`fourier`; exact round trip up to FFT roundoff.

    ``spatial_lo`` fixes the lower corner of the reconstructed spatial box;
    default is the symmetric box centred at the origin.
    """
    if F.domain != FREQUENCY:
        raise StructuralError("inverse_fourier expects a frequency grid function")
    fbox = F.box
    n = np.asarray(fbox.n)
    dt = fbox.spacing
    dx = 2.0 * np.pi / (n * dt)
    if spatial_lo is None:
        spatial_lo = tuple(-n * dx / 2.0)
    spatial_lo = tuple(float(v) for v in np.atleast_1d(spatial_lo))
    box = GridBox(spatial_lo, tuple(np.asarray(spatial_lo) + n * dx), tuple(int(k) for k in n))
    phase = np.ones(fbox.n, dtype=complex)
    for axis in range(fbox.dim):
        ph = _axis_phase(fbox.n[axis], spatial_lo[axis], dx[axis], 1.0)
        idx = [None] * fbox.dim
        idx[axis] = slice(None)
        phase = phase * ph[tuple(idx)]
    vals = np.fft.ifftn(np.asarray(F.values) * phase) / box.cell_volume
    vals = vals * _alternating_sign(fbox.n)
    return GridFunction(box, vals, SPATIAL)


def apply_transfer(f: GridFunction, multiplier) -> GridFunction:
    """Multiply f's Fourier transform by ``multiplier(t...)`` and invert.

    This is convolution by the kernel whose transform is ``multiplier``,
    exact on the periodic grid (convolution theorem on the grid).
    """
    F = fourier(f)
    mult = multiplier(*F.box.nodes())
    G = GridFunction(F.box, np.asarray(F.values) * mult, FREQUENCY)
    out = inverse_fourier(G, spatial_lo=f.box.lo)
    if f.is_real:
        out = out.real_part()
    return out


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """Linear (zero-padded, non-circular) convolution of two spatial grids.

    The output box covers the Minkowski sum of the input boxes; supports
    stay inside the closure of the sum of supports, and the output mass is
    the product of the input masses.
    """
    if f.domain != SPATIAL or g.domain != SPATIAL:
        raise StructuralError("convolve expects spatial grid functions")
    if f.box.dim != g.box.dim:
        raise StructuralError("dimension mismatch")
    if not np.allclose(f.box.spacing, g.box.spacing, rtol=1e-12):
        raise StructuralError("spacing mismatch between convolution inputs")
    dx = f.box.spacing
    nf = np.asarray(f.box.n)
    ng = np.asarray(g.box.n)
    nout = 2 ** np.ceil(np.log2(nf + ng)).astype(int)
    fv = np.zeros(nout, dtype=complex if not (f.is_real and g.is_real) else float)
    gv = np.zeros_like(fv)
    fv[tuple(slice(0, k) for k in nf)] = f.values
    gv[tuple(slice(0, k) for k in ng)] = g.values
    cv = np.fft.ifftn(np.fft.fftn(fv) * np.fft.fftn(gv))
    if f.is_real and g.is_real:
        cv = np.real(cv)
    cv = cv * f.box.cell_volume
    lo = np.asarray(f.box.lo) + np.asarray(g.box.lo)
    box = GridBox(tuple(lo), tuple(lo + nout * dx), tuple(int(k) for k in nout))
    return GridFunction(box, cv, SPATIAL)


def restrict(f: GridFunction, box: GridBox) -> GridFunction:
    """Restrict f to a sub-box whose nodes are a subset of f's nodes."""
    if f.box.dim != box.dim:
        raise StructuralError("dimension mismatch")
    if not np.allclose(f.box.spacing, box.spacing, rtol=1e-12):
        raise StructuralError("spacing mismatch")
    start = np.rint((np.asarray(box.lo) - np.asarray(f.box.lo)) / f.box.spacing).astype(int)
    if np.any(start < 0) or np.any(start + np.asarray(box.n) > np.asarray(f.box.n)):
        raise StructuralError("target box is not contained in the source box")
    off = np.asarray(box.lo) - (np.asarray(f.box.lo) + start * f.box.spacing)
    if not np.allclose(off, 0.0, atol=1e-9):
        raise StructuralError("target box nodes are not aligned with the source grid")
    sl = tuple(slice(s, s + k) for s, k in zip(start, box.n))
    return GridFunction(box, np.asarray(f.values)[sl], f.domain)


def write_grid_csv(f: GridFunction, path):
    """CSV serialization: axis columns then value_re,value_im, row-major."""
    d = f.box.dim
    header = ",".join(f"axis{a}" for a in range(d)) + ",value_re,value_im"
    coords = [c.ravel() for c in f.box.nodes()]
    vals = np.asarray(f.values).ravel()
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i in range(vals.size):
            row = [format(c[i], ".17g") for c in coords]
            row.append(format(float(np.real(vals[i])), ".17g"))
            row.append(format(float(np.imag(vals[i])), ".17g"))
            fh.write(",".join(row) + "\n")
