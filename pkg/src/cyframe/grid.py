"""Spectral calculus on flat even-dimensional tori.

Everything downstream lives on the torus :math:`T^{2n} = \\mathbb{R}^{2n} /
(L_0\\mathbb{Z} \\times \\dots \\times L_{2n-1}\\mathbb{Z})` with :math:`n`
the complex dimension (1 or 2) and a uniform collocation grid of :math:`N`
points per axis, :math:`x_k = k\\,L/N`.  Scenario data are truncated Fourier
series, so Fourier collocation differentiates them exactly (up to rounding)
and the trapezoid rule -- which on a periodic uniform grid is just the mean
times the volume -- integrates every resolved mode exactly.

Fields carry their component slots explicitly so that frame indices
(holomorphic/antiholomorphic, up/down) and coordinate indices (vector /
covector) cannot be confused silently; the heavy tensor algebra in the other
modules works on the raw arrays and re-wraps at module boundaries.

Conventions
-----------
* grid axes are always the *trailing* axes of an array; component axes lead,
* derivative multipliers zero the Nyquist mode so that differentiating a real
  field returns a real field (scenario data are validated to stay strictly
  below Nyquist, so nothing representable is lost),
* ``solve_poisson`` inverts the flat Laplacian on the mean-zero subspace and
  reports the magnitude of the mean it had to project away, which downstream
  callers use as a discretization diagnostic of compatibility conditions.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from cyframe import accel

__all__ = [
    "GridSpec",
    "PeriodicField",
    "PoissonResult",
    "partial_derivative",
    "coordinate_gradient",
    "coordinate_hessian",
    "integrate",
    "grid_mean",
    "solve_poisson",
    "refinement_order",
    "sup_norm",
    "normalized_residual",
    "trig_field",
    "REFINEMENT_ORDER_CAP",
]

REFINEMENT_ORDER_CAP = 50.0

#: component slot codes -> human meaning; 'x' slots have dimension 2n,
#: frame slots ('h' holomorphic, 'a' antiholomorphic) have dimension n.
SLOT_KINDS = {
    "x+": "coordinate vector",
    "x-": "coordinate covector",
    "h+": "frame holomorphic, upper",
    "h-": "frame holomorphic, lower",
    "a+": "frame antiholomorphic, upper",
    "a-": "frame antiholomorphic, lower",
}


def _fft_workers() -> int:
    """Optional thread-count hint; defaults to a single worker."""
    raw = os.environ.get("CYFRAME_THREADS", "")
    try:
        w = int(raw)
    except ValueError:
        return 1
    return w if w >= 1 else 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform collocation grid on a flat torus of real dimension ``2n``.

    Parameters
    ----------
    n : int
        Complex dimension, 1 or 2.
    N : int
        Points per axis; a power of two, at least 8.
    periods : tuple of float, optional
        Axis periods :math:`L_a > 0`; defaults to :math:`2\\pi` on every axis.
    """

    n: int
    N: int
    periods: tuple = None

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"complex dimension n must be 1 or 2, got {self.n}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.periods is None:
            object.__setattr__(self, "periods", (2.0 * math.pi,) * (2 * self.n))
        else:
            periods = tuple(float(L) for L in self.periods)
            if len(periods) != 2 * self.n:
                raise ValueError(
                    f"expected {2 * self.n} periods, got {len(periods)}"
                )
            if any(L <= 0.0 for L in periods):
                raise ValueError("periods must be positive")
            object.__setattr__(self, "periods", periods)

    @property
    def dim(self) -> int:
        """Real dimension ``2n``."""
        return 2 * self.n

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.dim

    @property
    def npoints(self) -> int:
        return self.N ** self.dim

    @property
    def cell_volume(self) -> float:
        return math.prod(L / self.N for L in self.periods)

    @property
    def volume(self) -> float:
        return math.prod(self.periods)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """1-D coordinate values along ``axis`` (length ``N``)."""
        L = self.periods[axis]
        return np.arange(self.N) * (L / self.N)

    def coordinates(self) -> list:
        """Meshes ``x_a`` (each of grid shape) for all ``2n`` axes."""
        axes = [self.axis_coordinates(a) for a in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Angular wavenumbers for ``axis``, Nyquist entry zeroed.

        With period :math:`L` these are :math:`2\\pi k / L` for the FFT
        ordering of :math:`k`; the (unpaired) Nyquist mode gets multiplier 0
        so real fields have real derivatives.
        """
        L = self.periods[axis]
        k = 2.0 * math.pi * _fft.fftfreq(self.N, d=L / self.N) * 1.0
        k = k.copy()
        k[self.N // 2] = 0.0
        return k

    def refined(self, factor: int = 2) -> "GridSpec":
        """The same torus sampled ``factor`` times finer per axis."""
        return GridSpec(self.n, self.N * factor, self.periods)


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class PeriodicField:
    """A tensor field sampled on a :class:`GridSpec`.

    ``slots`` tags every leading component axis with one of the codes in
    :data:`SLOT_KINDS`; coordinate slots have dimension ``2n`` and frame
    slots dimension ``n``.  Values must be finite.
    """

    grid: GridSpec
    data: np.ndarray
    slots: tuple = ()

    def __post_init__(self):
        data = np.asarray(self.data)
        slots = tuple(self.slots)
        for s in slots:
            if s not in SLOT_KINDS:
                raise ValueError(f"unknown slot code {s!r}")
        expected = tuple(
            self.grid.dim if s[0] == "x" else self.grid.n for s in slots
        ) + self.grid.shape
        if data.shape != expected:
            raise ValueError(
                f"field shape {data.shape} does not match slots {slots} on "
                f"grid {self.grid.shape}; expected {expected}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "slots", slots)

    @property
    def ncomp_axes(self) -> int:
        return len(self.slots)

    def conjugate(self) -> "PeriodicField":
        """Complex conjugate; holomorphic slots become antiholomorphic."""
        flip = {"h": "a", "a": "h", "x": "x"}
        slots = tuple(flip[s[0]] + s[1] for s in self.slots)
        return PeriodicField(self.grid, np.conj(self.data), slots)


def _as_data(f):
    if isinstance(f, PeriodicField):
        return f.data, f.grid
    raise TypeError("expected a PeriodicField (or use the array helpers)")


# ---------------------------------------------------------------------------
# spectral derivatives

def _grid_axes(data: np.ndarray, grid: GridSpec) -> tuple:
    return tuple(range(data.ndim - grid.dim, data.ndim))


def spectral_derivative(data: np.ndarray, grid: GridSpec, axis: int,
                        order: int = 1) -> np.ndarray:
    """``order``-th derivative along grid ``axis`` by Fourier collocation.

    Exact (to rounding) for trigonometric polynomials resolved by the grid.
    Real input yields real output.
    """
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis must be in [0, {grid.dim}), got {axis}")
    if order < 1:
        raise ValueError("order must be >= 1")
    arr = np.asarray(data)
    gaxes = _grid_axes(arr, grid)
    target = gaxes[axis]
    spec = _fft.fft(arr, axis=target, workers=_fft_workers())
    k = grid.wavenumbers(axis)
    mult = (1j * k) ** order
    shape = [1] * arr.ndim
    shape[target] = grid.N
    spec *= mult.reshape(shape)
    out = _fft.ifft(spec, axis=target, workers=_fft_workers())
    if np.isrealobj(arr):
        return np.ascontiguousarray(out.real)
    return out


def coordinate_gradient(data: np.ndarray, grid: GridSpec) -> np.ndarray:
    """All first derivatives, stacked on a new leading axis of size ``2n``.

    Each derivative only transforms its own axis (a first derivative never
    needs the spectrum of the other axes), which is considerably cheaper
    than sharing one full transform.
    """
    arr = np.asarray(data)
    out = np.empty((grid.dim,) + arr.shape,
                   dtype=float if np.isrealobj(arr) else complex)
    for a in range(grid.dim):
        out[a] = spectral_derivative(arr, grid, axis=a)
    return out


def coordinate_hessian(data: np.ndarray, grid: GridSpec) -> np.ndarray:
    """All second derivatives ``(2n, 2n) + shape``, symmetric by construction."""
    arr = np.asarray(data)
    gaxes = _grid_axes(arr, grid)
    spec = _fft.fftn(arr, axes=gaxes, workers=_fft_workers())
    d = grid.dim
    out = np.empty((d, d) + arr.shape, dtype=complex)
    for a in range(d):
        ka = grid.wavenumbers(a)
        sa = [1] * arr.ndim
        sa[gaxes[a]] = grid.N
        for b in range(a, d):
            kb = grid.wavenumbers(b)
            sb = [1] * arr.ndim
            sb[gaxes[b]] = grid.N
            mult = (1j * ka).reshape(sa) * (1j * kb).reshape(sb)
            out[a, b] = _fft.ifftn(spec * mult, axes=gaxes,
                                   workers=_fft_workers())
            if b != a:
                out[b, a] = out[a, b]
    if np.isrealobj(arr):
        return np.ascontiguousarray(out.real)
    return out


def partial_derivative(f: PeriodicField, axis: int, order: int = 1
                       ) -> PeriodicField:
    """Spectral partial derivative of a field along a coordinate axis."""
    data, grid = _as_data(f)
    return PeriodicField(grid, spectral_derivative(data, grid, axis, order),
                         f.slots)


# ---------------------------------------------------------------------------
# integration

def integrate(f, grid: GridSpec = None):
    """Integral over the torus: cell volume times the sum of samples.

    Accepts a :class:`PeriodicField` (scalar: no component slots) or a raw
    array whose trailing axes are the grid.
    """
    if isinstance(f, PeriodicField):
        if f.slots:
            raise ValueError("integrate expects a scalar field")
        data, grid = f.data, f.grid
    else:
        if grid is None:
            raise ValueError("integrate needs a GridSpec for raw arrays")
        data = np.asarray(f)
    gaxes = _grid_axes(data, grid)
    total = data.sum(axis=gaxes)
    return total * grid.cell_volume


def grid_mean(f, grid: GridSpec = None):
    """Average value over the torus."""
    if isinstance(f, PeriodicField):
        grid = f.grid
    return integrate(f, grid) / grid.volume


# ---------------------------------------------------------------------------
# Poisson inversion

@dataclass(frozen=True)
class PoissonResult:
    """Solution of the flat Poisson problem plus the removed-mean diagnostic.

    ``projection`` is ``|mean(rhs)|``: the part of the right side that lies
    outside the range of the flat Laplacian and was projected away.  For
    right sides that are exact Laplacians it is a rounding-level number; for
    right sides built from continuum identities it measures how well the
    discretization honors the corresponding compatibility condition.
    """

    solution: np.ndarray
    projection: float


def solve_poisson(rhs, grid: GridSpec = None) -> PoissonResult:
    """Solve :math:`\\Delta_0 \\psi = \\rho - \\overline{\\rho}` spectrally.

    The flat Laplacian :math:`\\Delta_0 = \\sum_a \\partial_a^2` is inverted
    by Fourier division; the zero mode of :math:`\\psi` is set to zero and
    the magnitude of the removed mean of :math:`\\rho` is reported.
    """
    if isinstance(rhs, PeriodicField):
        if rhs.slots:
            raise ValueError("solve_poisson expects a scalar field")
        data, grid = rhs.data, rhs.grid
    else:
        if grid is None:
            raise ValueError("solve_poisson needs a GridSpec for raw arrays")
        data = np.asarray(rhs)
    if data.shape != grid.shape:
        raise ValueError(f"rhs shape {data.shape} != grid shape {grid.shape}")
    gaxes = tuple(range(data.ndim))
    spec = _fft.fftn(data, axes=gaxes, workers=_fft_workers())
    projection = float(abs(spec[(0,) * grid.dim]) / grid.npoints)
    kk = np.zeros(grid.shape)
    for a in range(grid.dim):
        k = grid.wavenumbers(a)
        shape = [1] * grid.dim
        shape[a] = grid.N
        kk = kk + (k ** 2).reshape(shape)
    # the zero mode and the (unpaired, multiplier-zeroed) pure-Nyquist modes
    # lie outside the invertible symbol; they are projected away
    null = kk == 0.0
    kk[null] = 1.0
    spec = spec / (-kk)
    spec[null] = 0.0
    sol = _fft.ifftn(spec, axes=gaxes, workers=_fft_workers())
    if np.isrealobj(data):
        sol = np.ascontiguousarray(sol.real)
    return PoissonResult(solution=sol, projection=projection)


# ---------------------------------------------------------------------------
# residual bookkeeping

def sup_norm(arr) -> float:
    """Maximum absolute value over all components and grid points."""
    arr = np.asarray(arr)
    if arr.size == 0:
        return 0.0
    return float(accel.max_abs(arr))


def normalized_residual(delta, scale: float) -> float:
    """Sup-norm of ``delta`` normalized by the largest-term magnitude.

    ``scale`` is the maximum sup-norm among the individual terms of the
    identity being tested.  An identically zero identity (all terms zero)
    has residual 0 by convention.
    """
    s = sup_norm(delta)
    if scale == 0.0:
        return 0.0 if s == 0.0 else math.inf
    return s / scale


def refinement_order(r_coarse: float, r_fine: float) -> float:
    """Observed convergence order between a grid and its 2x refinement.

    Returns :math:`\\log_2(r_N / r_{2N})`, capped at
    :data:`REFINEMENT_ORDER_CAP` (spectrally convergent residuals underflow
    to rounding noise, which would otherwise produce spurious infinities).
    A vanishing fine-grid residual also yields the cap; equal residuals give
    order 0.
    """
    if not (math.isfinite(r_coarse) and math.isfinite(r_fine)):
        raise ValueError("residuals must be finite")
    if r_coarse < 0.0 or r_fine < 0.0:
        raise ValueError("residuals must be non-negative")
    if r_fine == 0.0:
        return REFINEMENT_ORDER_CAP
    if r_coarse == 0.0:
        return -REFINEMENT_ORDER_CAP
    order = math.log2(r_coarse / r_fine)
    return float(min(max(order, -REFINEMENT_ORDER_CAP), REFINEMENT_ORDER_CAP))


# ---------------------------------------------------------------------------
# truncated Fourier data

def trig_field(grid: GridSpec, modes) -> np.ndarray:
    """Evaluate a real truncated Fourier series on the grid.

    Parameters
    ----------
    grid : GridSpec
    modes : sequence of (kvec, amplitude, kind)
        ``kvec`` has one integer per axis, ``kind`` is ``"cos"`` or
        ``"sin"``; the term is ``amplitude * kind(sum_a k_a x_a)``.  Every
        ``|k_a|`` must stay strictly below the Nyquist index ``N/2``.
    """
    out = np.zeros(grid.shape)
    xs = grid.coordinates()
    for kvec, amp, kind in modes:
        kvec = tuple(int(k) for k in kvec)
        if len(kvec) != grid.dim:
            raise ValueError(
                f"mode vector {kvec} has {len(kvec)} entries, expected {grid.dim}"
            )
        if any(abs(k) >= grid.N // 2 for k in kvec):
            raise ValueError(
                f"mode vector {kvec} reaches the Nyquist index {grid.N // 2} "
                f"of an N={grid.N} grid"
            )
        phase = np.zeros(grid.shape)
        for a, k in enumerate(kvec):
            if k:
                phase = phase + (2.0 * math.pi * k / grid.periods[a]) * xs[a]
        if kind == "cos":
            out += float(amp) * np.cos(phase)
        elif kind == "sin":
            out += float(amp) * np.sin(phase)
        else:
            raise ValueError(f"unknown mode kind {kind!r}")
    return out
