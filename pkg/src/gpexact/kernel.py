"""Gaussian propagator of the moment-linearized equation.

The kernel is assembled from the endpoint moments, the matriciant blocks
l1..l4 of A(t, s), and the accumulated phase action:

    G(x, y) = det(-2*pi*i*hbar*l3)^(-1/2)
              * exp{ (i/hbar) [ dS + <P(t), dx> - <P(s), dy>
                                - <dy, l1 l3^(-1) dy>/2
                                + <dx, l3^(-1) dy>
                                - <dx, l3^(-1) l4 dx>/2 ] }

with dx = x - X(t), dy = y - X(s).  The square-root branch is propagated
continuously in time from the short-time asymptote; every interior zero of
det l3 (a conjugate point) advances the determinant phase by pi per zero
order, in the direction of the time path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ehrenfest import (Matriciant, MomentTrajectory, matriciant_blocks,
                        symplectic_inverse)
from .errors import CausticError, IntegrationError
from .model import QuadraticModel


@dataclass(frozen=True)
class ActionValue:
    """Accumulated phase action S(t) - S(s) along the moment trajectory."""

    S: float


def action_integral(model: QuadraticModel, kappa_tilde: float,
                    traj: MomentTrajectory, s: float, t: float) -> ActionValue:
    """Action difference read from the trajectory's built-in quadrature,
    which is integrated at the same tolerance as the moments themselves."""
    if traj.model is not model or traj.kappa_tilde != kappa_tilde:
        raise ValueError("trajectory was built for a different model/coupling")
    return ActionValue(traj.action(t) - traj.action(s))


def caustic_tolerance(model: QuadraticModel, dt: float,
                      factor: float = 1.0) -> float:
    """Scale-aware lower bound on |det l3| (free-particle magnitude scaled
    down by 1e-8)."""
    n = model.n
    return factor * 1e-8 * max(abs(dt), 1e-6) ** n / model.mass ** n


@dataclass(frozen=True)
class KernelContext:
    """Everything needed to evaluate the propagator between two fixed times."""

    model: QuadraticModel
    kappa_tilde: float
    s: float
    t: float
    P_s: np.ndarray
    X_s: np.ndarray
    P_t: np.ndarray
    X_t: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray
    l4: np.ndarray
    action_diff: float
    prefactor: complex
    det_l3: float
    m_xx: np.ndarray  # l3^(-1) l4
    m_xy: np.ndarray  # l3^(-1)
    m_yy: np.ndarray  # l1 l3^(-1)

    @property
    def n(self) -> int:
        return self.model.n


def _refine_dip(dfun, lo: float, hi: float, scale: float,
                passes: int = 8) -> int:
    """Resolve a same-sign dip of |d| on (lo, hi) into phase units: sign
    changes found under refinement count 1 each, a confirmed even-order touch
    counts 2, a dip that stalls above threshold counts 0."""
    prev_min = np.inf
    for _ in range(passes):
        taus = np.linspace(lo, hi, 26)[1:-1]
        vals = np.array([dfun(tau) for tau in taus])
        flips = int(np.sum(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0))
        if flips:
            return flips
        k = int(np.argmin(np.abs(vals)))
        vmin = abs(vals[k])
        if vmin < 1e-8 * scale:
            return 2
        if vmin > 0.9 * prev_min:
            return 0  # stalled well above zero: a genuine nonzero dip
        prev_min = vmin
        lo, hi = taus[max(0, k - 1)], taus[min(len(taus) - 1, k + 1)]
    return 0


def _caustic_phase_units(dfun, a: float, b: float) -> tuple[int, float, float]:
    """Count pi-units of determinant phase accumulated by zeros of the real
    function d(tau) = det l3(tau, a) along the path a -> b.

    Returns (units, d_first, d_last).  Simple sign changes count 1; confirmed
    even-order touch points count 2.
    """
    u = np.concatenate([np.geomspace(1e-6, 0.04, 12, endpoint=False),
                        np.linspace(0.04, 1.0, 200)])
    taus = a + (b - a) * u
    d = np.array([dfun(tau) for tau in taus])
    scale = float(np.max(np.abs(d)))
    if scale == 0.0 or not np.all(np.isfinite(d)):
        raise CausticError("variational determinant vanishes along the path")

    tiny = 1e-12 * scale
    units = 0
    solid = np.where(np.abs(d) > tiny)[0]
    if solid.size < 2:
        raise CausticError("variational determinant vanishes along the path")
    sgn = np.sign(d)
    for i, j in zip(solid[:-1], solid[1:]):
        if sgn[i] != sgn[j]:
            units += 1
        elif j > i + 1:
            units += 2  # zero run between same-sign samples: even-order touch
    # even-order touch candidates: same-sign local minima of |d| strictly
    # between adjacent solid samples (cannot overlap a counted crossing)
    for idx in range(1, solid.size - 1):
        h, i, j = solid[idx - 1], solid[idx], solid[idx + 1]
        if j != i + 1 or i != h + 1:
            continue
        if sgn[h] == sgn[i] == sgn[j] and abs(d[i]) < 0.2 * scale and \
                abs(d[i]) <= abs(d[h]) and abs(d[i]) <= abs(d[j]):
            units += _refine_dip(dfun, taus[h], taus[j], scale)
    return units, float(d[solid[0]]), float(d[-1])


def build_kernel_context(model: QuadraticModel, kappa_tilde: float,
                         traj: MomentTrajectory, var: Matriciant,
                         a: float, b: float,
                         caustic_tol: float | None = None) -> KernelContext:
    """Assemble the propagator context for the leg a -> b of a trajectory."""
    n = model.n
    hbar = model.hbar
    if caustic_tol is None:
        caustic_tol = caustic_tolerance(model, b - a)

    A = var.between(a, b)
    l1, l2, l3, l4 = matriciant_blocks(A)
    det_l3 = float(np.linalg.det(l3))
    if abs(det_l3) <= caustic_tol:
        raise CausticError(
            f"|det l3| = {abs(det_l3):.3e} at dt = {b - a:.4g}: conjugate "
            "point; split the interval via the group property")

    Ma_inv = symplectic_inverse(var(a))

    def dfun(tau: float) -> float:
        blk = (var(tau) @ Ma_inv)[n:, :n]
        return float(np.linalg.det(-blk.T))

    units, d_first, d_last = _caustic_phase_units(dfun, a, b)

    # continuous phase of D = det(-2*pi*i*hbar*l3): theta tracks the real
    # determinant's phase from its short-time asymptote, zeros add pi each.
    hpp = model.momentum_block(a) + kappa_tilde * model.Wzz[:n, :n]
    det_hpp = float(np.linalg.det(hpp))
    arg0 = 0.0 if det_hpp > 0 else math.pi
    forward = b > a
    theta_start = (n * math.pi if forward else 0.0) + arg0
    if math.copysign(1.0, math.cos(theta_start)) != math.copysign(1.0, d_first):
        raise IntegrationError("branch anchor inconsistent with determinant sign")
    direction = 1.0 if forward else -1.0
    theta_end = theta_start + math.pi * units * direction
    if math.copysign(1.0, math.cos(theta_end)) != math.copysign(1.0, d_last):
        raise IntegrationError(
            "caustic count parity mismatch; increase branch sampling")
    arg_D = -n * math.pi / 2.0 + theta_end
    prefactor = complex(
        ((2.0 * math.pi * hbar) ** n * abs(det_l3)) ** -0.5
        * np.exp(-0.5j * arg_D))

    inv_l3 = np.linalg.inv(l3)
    dS = traj.action(b) - traj.action(a)
    return KernelContext(
        model=model, kappa_tilde=kappa_tilde, s=a, t=b,
        P_s=traj.momentum(a), X_s=traj.position(a),
        P_t=traj.momentum(b), X_t=traj.position(b),
        l1=l1, l2=l2, l3=l3, l4=l4,
        action_diff=dS, prefactor=prefactor, det_l3=det_l3,
        m_xx=inv_l3 @ l4, m_xy=inv_l3, m_yy=l1 @ inv_l3)


def _coords(arr, n: int) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if n == 1:
        if arr.ndim == 0 or arr.shape[-1] != 1:
            arr = arr[..., None]
        return arr
    if arr.ndim == 0 or arr.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return arr


def green_function(ctx: KernelContext, x, y) -> np.ndarray | complex:
    """Evaluate the propagator at points x (time t) and y (time s);
    broadcasting over leading dimensions."""
    n = ctx.n
    scalar = np.asarray(x).ndim == 0 and np.asarray(y).ndim == 0
    dx = _coords(x, n) - ctx.X_t
    dy = _coords(y, n) - ctx.X_s
    dx, dy = np.broadcast_arrays(dx, dy)
    phase = (ctx.action_diff
             + dx @ ctx.P_t - dy @ ctx.P_s
             - 0.5 * np.einsum("...i,ij,...j->...", dy, ctx.m_yy, dy)
             + np.einsum("...i,ij,...j->...", dx, ctx.m_xy, dy)
             - 0.5 * np.einsum("...i,ij,...j->...", dx, ctx.m_xx, dx))
    out = ctx.prefactor * np.exp(1j * phase / ctx.model.hbar)
    return complex(out) if scalar else out


def oscillator_kernel_factor(dx, dy, tau: float, p_t: float, p_s: float,
                             m: float, hbar: float, omega: float,
                             omega_h: float = 0.0) -> np.ndarray:
    """One-axis oscillator propagator factor in closed form.

    The branch carries a quarter-turn per conjugate point: the winding index
    floor(|omega*tau|/pi) advances the determinant phase by pi in the
    direction of the path.
    """
    sin_wt = math.sin(omega * tau)
    if abs(sin_wt) < 1e-12:
        raise CausticError(f"sin(omega*dt) ~ 0 at dt = {tau:.4g}")
    nu = math.floor(abs(omega * tau) / math.pi) * math.copysign(1.0, tau)
    arg_d = math.pi / 2.0 + math.pi * nu
    pref = (m * omega / (2.0 * math.pi * hbar * abs(sin_wt))) ** 0.5 \
        * np.exp(-0.5j * arg_d)
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    phase = (p_t * dx - p_s * dy
             + (omega * m / (2.0 * sin_wt))
             * (math.cos(omega * tau) * (dx ** 2 + dy ** 2)
                - 2.0 * math.cos(omega_h * tau / 2.0) * dx * dy))
    return pref * np.exp(1j * phase / hbar)


def closed_form_kernel_1d(params, kappa_tilde: float, traj: MomentTrajectory,
                          x, y, t: float, s: float) -> np.ndarray | complex:
    """Driven-oscillator propagator for the 1D setup, assembled from the
    closed-form factor and the trajectory action."""
    hbar = traj.model.hbar
    omega = params.Omega(kappa_tilde)
    tau = t - s
    dx = np.asarray(x, dtype=float) - traj.position(t)[0]
    dy = np.asarray(y, dtype=float) - traj.position(s)[0]
    fac = oscillator_kernel_factor(dx, dy, tau,
                                   traj.momentum(t)[0], traj.momentum(s)[0],
                                   params.m, hbar, omega)
    dS = traj.action(t) - traj.action(s)
    out = fac * np.exp(1j * dS / hbar)
    return complex(out) if np.asarray(x).ndim == 0 and np.asarray(y).ndim == 0 \
        else out


def closed_form_kernel_3d(params, kappa_tilde: float, traj: MomentTrajectory,
                          x, y, t: float, s: float) -> np.ndarray | complex:
    """Magnetic-trap propagator for the 3D setup: two in-plane factors at
    omega_1, an axial factor at omega_2, and the magnetic cross term."""
    hbar = traj.model.hbar
    w1, w2 = params.frequencies(kappa_tilde)
    wh = params.omega_H
    tau = t - s
    scalar = np.asarray(x).ndim == 1 and np.asarray(y).ndim == 1
    dx = _coords(x, 3) - traj.position(t)
    dy = _coords(y, 3) - traj.position(s)
    dx, dy = np.broadcast_arrays(dx, dy)
    P_t, P_s = traj.momentum(t), traj.momentum(s)
    out = oscillator_kernel_factor(dx[..., 0], dy[..., 0], tau,
                                   P_t[0], P_s[0], params.m, hbar, w1, wh)
    out = out * oscillator_kernel_factor(dx[..., 1], dy[..., 1], tau,
                                         P_t[1], P_s[1], params.m, hbar, w1, wh)
    out = out * oscillator_kernel_factor(dx[..., 2], dy[..., 2], tau,
                                         P_t[2], P_s[2], params.m, hbar, w2)
    sin_w1 = math.sin(w1 * tau)
    cross = (-params.m * w1 * math.sin(wh * tau / 2.0) / sin_w1) \
        * (dx[..., 0] * dy[..., 1] - dx[..., 1] * dy[..., 0])
    dS = traj.action(t) - traj.action(s)
    out = out * np.exp(1j * (cross + dS) / hbar)
    return complex(out) if scalar else out


def dump_kernel_csv(ctx: KernelContext, xs, ys, path) -> None:
    """Debug dump of pointwise kernel samples (1D contexts)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "re", "im"])
        for xv in xs:
            g = green_function(ctx, np.full_like(ys, xv), ys)
            for yv, gv in zip(ys, np.atleast_1d(g)):
                writer.writerow([f"{xv:.16e}", f"{yv:.16e}",
                                 f"{gv.real:.16e}", f"{gv.imag:.16e}"])
