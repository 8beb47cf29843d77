"""Uniform Cartesian grids, sampled wave functions, and state I/O.

Axes are endpoint-exclusive: an axis (lo, hi, num) samples lo + j*(hi-lo)/num
for j = 0..num-1, the natural convention for FFT-based spectral operators.
States are expected to decay well inside the box; :func:`check_resolved`
enforces that before any quadrature trusts the samples.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import ResolutionError

TAIL_TOL = 1e-10
SPECTRAL_TOL = 1e-10
SUPPORT_CUT = 1e-12


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    num: int

    def __post_init__(self):
        if self.num < 8 or self.num % 2:
            raise ValueError("axis needs an even number of points, at least 8")
        if not self.hi > self.lo:
            raise ValueError("axis upper bound must exceed lower bound")

    @property
    def delta(self) -> float:
        return (self.hi - self.lo) / self.num

    @property
    def points(self) -> np.ndarray:
        return self.lo + self.delta * np.arange(self.num)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.num, d=self.delta)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def shifted(self, offset: float) -> "Axis":
        return Axis(self.lo + offset, self.hi + offset, self.num)


@dataclass(frozen=True, eq=False)
class GridState:
    """Complex wave function sampled on a uniform Cartesian grid."""

    axes: tuple[Axis, ...]
    psi: np.ndarray
    t: float
    hbar: float = 1.0

    def __post_init__(self):
        shape = tuple(ax.num for ax in self.axes)
        if self.psi.shape != shape:
            raise ValueError(f"psi shape {self.psi.shape} does not match grid {shape}")
        if self.psi.dtype != np.complex128:
            object.__setattr__(self, "psi", self.psi.astype(np.complex128))
        if not np.all(np.isfinite(self.psi.view(np.float64))):
            raise ValueError("psi contains non-finite amplitudes")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        self.psi.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def weight(self) -> float:
        """Quadrature weight of one grid cell (trapezoid on a periodic box)."""
        w = 1.0
        for ax in self.axes:
            w *= ax.delta
        return w

    def grids(self, sparse: bool = True) -> list[np.ndarray]:
        return list(np.meshgrid(*(ax.points for ax in self.axes),
                                indexing="ij", sparse=sparse))

    def with_psi(self, psi: np.ndarray, t: float | None = None) -> "GridState":
        return GridState(self.axes, psi, self.t if t is None else t, self.hbar)

    def at_time(self, t: float) -> "GridState":
        return replace(self, t=t)


def momentum_apply(state: GridState, axis: int) -> np.ndarray:
    """Apply the momentum operator -i*hbar*d/dx_axis spectrally."""
    k = state.axes[axis].wavenumbers
    shape = [1] * state.n
    shape[axis] = state.axes[axis].num
    spec = np.fft.fft(state.psi, axis=axis)
    spec *= (state.hbar * k).reshape(shape)
    return np.fft.ifft(spec, axis=axis)


def boundary_tail_fraction(state: GridState) -> float:
    """Largest per-hyperface mass fraction sitting on the outermost grid plane."""
    dens = np.abs(state.psi) ** 2
    total = float(dens.sum())
    if total == 0.0:
        return 0.0
    worst = 0.0
    for a in range(state.n):
        for idx in (0, -1):
            worst = max(worst, float(dens.take(idx, axis=a).sum()) / total)
    return worst


def spectral_tail_fraction(state: GridState) -> float:
    """Spectral mass fraction beyond 3/4 of the Nyquist band (aliasing guard)."""
    spec = np.abs(np.fft.fftn(state.psi)) ** 2
    total = float(spec.sum())
    if total == 0.0:
        return 0.0
    inner = np.ones(state.psi.shape, dtype=bool)
    for a, ax in enumerate(state.axes):
        k = np.abs(ax.wavenumbers)
        shape = [1] * state.n
        shape[a] = ax.num
        inner &= (k < 0.75 * k.max()).reshape(shape)
    return 1.0 - float(spec[inner].sum()) / total


def check_resolved(state: GridState, tail_tol: float = TAIL_TOL,
                   spectral_tol: float = SPECTRAL_TOL) -> None:
    tail = boundary_tail_fraction(state)
    if tail >= tail_tol:
        raise ResolutionError(
            f"boundary tail mass fraction {tail:.3e} exceeds {tail_tol:.1e}")
    alias = spectral_tail_fraction(state)
    if alias >= spectral_tol:
        raise ResolutionError(
            f"spectral tail fraction {alias:.3e} exceeds {spectral_tol:.1e}")


def support_radius(state: GridState, center: np.ndarray,
                   cut: float = SUPPORT_CUT) -> float:
    """Radius around ``center`` containing all samples above cut*max|psi|."""
    dens = np.abs(state.psi)
    mask = dens > cut * dens.max()
    pts = state.grids(sparse=False)
    r2 = np.zeros(state.psi.shape)
    for a in range(state.n):
        r2 += (pts[a] - center[a]) ** 2
    return float(np.sqrt(r2[mask].max()))


def inner(bra: GridState, ket: GridState) -> complex:
    if bra.axes != ket.axes:
        raise ValueError("states live on different grids")
    return complex(bra.weight * np.vdot(bra.psi, ket.psi))


def l2_norm(state: GridState) -> float:
    return float(np.sqrt(state.weight * np.sum(np.abs(state.psi) ** 2)))


def l2_distance(s1: GridState, s2: GridState) -> float:
    if s1.axes != s2.axes:
        raise ValueError("states live on different grids")
    return float(np.sqrt(s1.weight * np.sum(np.abs(s1.psi - s2.psi) ** 2)))


def gaussian_packet(axes: tuple[Axis, ...], hbar: float,
                    x0, p0, alpha, t: float = 0.0) -> GridState:
    """Normalized Gaussian packet exp(-alpha_a dx_a^2/(2 hbar) + i p0.dx/hbar).

    ``alpha`` sets per-axis inverse width; alpha = m*Omega gives the ground
    state of an oscillator with that frequency.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), x0.shape)
    pts = np.meshgrid(*(ax.points for ax in axes), indexing="ij", sparse=True)
    psi = np.ones(tuple(ax.num for ax in axes), dtype=np.complex128)
    for a in range(len(axes)):
        dx = pts[a] - x0[a]
        psi = psi * np.exp(-alpha[a] * dx ** 2 / (2.0 * hbar)
                           + 1j * p0[a] * dx / hbar)
        psi *= (alpha[a] / (np.pi * hbar)) ** 0.25
    return GridState(tuple(axes), psi, t, hbar)


def save_state(state: GridState, path) -> None:
    """Binary dump; round-trips bit-exactly through :func:`load_state`."""
    np.savez(path,
             psi=state.psi,
             t=np.float64(state.t),
             hbar=np.float64(state.hbar),
             lo=np.array([ax.lo for ax in state.axes], dtype=np.float64),
             hi=np.array([ax.hi for ax in state.axes], dtype=np.float64),
             num=np.array([ax.num for ax in state.axes], dtype=np.int64))


def load_state(path) -> GridState:
    with np.load(path) as data:
        axes = tuple(Axis(float(lo), float(hi), int(num))
                     for lo, hi, num in zip(data["lo"], data["hi"], data["num"]))
        return GridState(axes, data["psi"], float(data["t"]), float(data["hbar"]))


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def dump_state_csv(state: GridState, path) -> None:
    """CSV dump: coordinate columns, then interleaved (Re, Im)."""
    pts = state.grids(sparse=False)
    flat = [p.ravel() for p in pts]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{a}" for a in range(state.n)] + ["re", "im"])
        for i in range(state.psi.size):
            row = [_fmt(flat[a][i]) for a in range(state.n)]
            row += [_fmt(state.psi.ravel()[i].real), _fmt(state.psi.ravel()[i].imag)]
            writer.writerow(row)
