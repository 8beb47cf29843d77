"""Independent split-step spectral reference integrator and residual checks.

Strang splitting: half kinetic step (spectral multiplier), full potential
step, half kinetic step.  The nonlocal quadratic coupling collapses exactly
to a time-dependent quadratic potential built from the instantaneous position
moments of the state, so no convolution is needed.  Second order in dt; used
only to certify the kernel propagator, never the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError, StabilityError
from .model import QuadraticModel
from .moments import constants_of_motion
from .state import GridState, check_resolved, momentum_apply


@dataclass(frozen=True)
class OracleConfig:
    dt: float = 1e-4
    norm_drift_tol: float = 1e-6
    tail_tol: float = 1e-9
    spectral_tol: float = 1e-8
    phase_step_bound: float = 0.5  # max |V| dt / hbar per potential step


def _position_blocks(model: QuadraticModel):
    """The oracle needs a pure kinetic + position-potential split."""
    n = model.n
    hzz0 = model.Hzz(0.0)
    if np.max(np.abs(hzz0[:n, n:])) > 1e-14:
        raise ModelError("split-step oracle requires vanishing momentum-"
                         "position coupling in Hzz")
    if np.max(np.abs(hzz0[:n, :n] - np.eye(n) / model.mass)) > 1e-12:
        raise ModelError("split-step oracle requires Hpp = I/m")
    for name, W in (("Wzz", model.Wzz), ("Wzw", model.Wzw), ("Www", model.Www)):
        if np.max(np.abs(W[:n, :])) > 0.0 or np.max(np.abs(W[:, :n])) > 0.0:
            raise ModelError(f"{name} must couple positions only")
    return model.Wzz[n:, n:], model.Wzw[n:, n:], model.Www[n:, n:]


def _mean_and_cov(psi: np.ndarray, pts, w: float):
    dens = np.abs(psi) ** 2
    nrm = float(w * dens.sum())
    n = len(pts)
    mean = np.array([float(w * np.sum(dens * pts[a])) / nrm for a in range(n)])
    cov = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            cov[a, b] = cov[b, a] = float(
                w * np.sum(dens * (pts[a] - mean[a]) * (pts[b] - mean[b]))) / nrm
    return mean, cov


def split_step_evolve(model: QuadraticModel, psi: GridState, t: float,
                      cfg: OracleConfig | None = None) -> GridState:
    """Propagate from the state's time label to t with Strang splitting."""
    cfg = cfg or OracleConfig()
    check_resolved(psi, cfg.tail_tol, cfg.spectral_tol)
    s = psi.t
    if t == s:
        return psi
    n = model.n
    hbar = model.hbar
    Wa, Wb, Wc = _position_blocks(model)
    kt = constants_of_motion(model, psi).kappa_tilde

    steps = max(1, round(abs(t - s) / cfg.dt))
    dt = (t - s) / steps

    axes = psi.axes
    w = psi.weight
    pts = psi.grids()
    k2 = np.zeros(tuple(ax.num for ax in axes))
    for a, ax in enumerate(axes):
        shape = [1] * n
        shape[a] = ax.num
        k2 = k2 + (ax.wavenumbers ** 2).reshape(shape)
    kin_half = np.exp(-1j * hbar * k2 * dt / (4.0 * model.mass))

    def quad_potential(tau: float) -> np.ndarray:
        hxx = model.Hzz(tau)[n:, n:] + kt * Wa
        out = np.zeros(tuple(ax.num for ax in axes))
        for a in range(n):
            for b in range(n):
                if hxx[a, b] != 0.0:
                    out = out + 0.5 * hxx[a, b] * pts[a] * pts[b]
        return out

    arr = np.array(psi.psi)
    norm0 = float(w * np.sum(np.abs(arr) ** 2))
    for step in range(steps):
        tau_mid = s + (step + 0.5) * dt
        arr = np.fft.ifftn(kin_half * np.fft.fftn(arr))
        mean, cov = _mean_and_cov(arr, pts, w)
        lin = model.Hz(tau_mid)[n:] + kt * (Wb @ mean)
        scal = 0.5 * kt * (float(mean @ Wc @ mean) + float(np.trace(Wc @ cov)))
        v = quad_potential(tau_mid) + scal
        for a in range(n):
            if lin[a] != 0.0:
                v = v + lin[a] * pts[a]
        if float(np.max(np.abs(v))) * abs(dt) / hbar >= cfg.phase_step_bound:
            raise StabilityError(
                f"potential phase step exceeds {cfg.phase_step_bound} rad "
                f"at t = {tau_mid:.4g}; reduce dt")
        arr = arr * np.exp(-1j * dt * v / hbar)
        arr = np.fft.ifftn(kin_half * np.fft.fftn(arr))

    norm1 = float(w * np.sum(np.abs(arr) ** 2))
    if abs(norm1 - norm0) > cfg.norm_drift_tol * norm0:
        raise StabilityError(
            f"norm drifted by {abs(norm1 - norm0) / norm0:.3e} over the run")
    return GridState(axes, arr, t, hbar)


def apply_effective_hamiltonian(model: QuadraticModel, state: GridState,
                                validate: bool = True) -> np.ndarray:
    """Act with the full mean-field Hamiltonian on the state, the moment
    record taken from the state itself (spectral momentum operators, Weyl
    ordering for the mixed terms)."""
    n = state.n
    cons = constants_of_motion(model, state, validate=validate)
    kt = cons.kappa_tilde
    z = cons.point.z
    Delta = cons.point.Delta
    t = state.t
    hzz = model.Hzz(t) + kt * model.Wzz
    hz = model.Hz(t) + (model.Hzz(t) + kt * (model.Wzz + model.Wzw)) @ z
    M = model.Hzz(t) + kt * (model.Wzz + 2.0 * model.Wzw + model.Www)
    scal = 0.5 * float(z @ M @ z) + float(model.Hz(t) @ z) \
        + 0.5 * kt * float(np.trace(model.Www @ Delta))

    psi = state.psi
    pts = state.grids()
    dx = [pts[a] - z[n + a] for a in range(n)]
    dpsi = [momentum_apply(state, a) - z[a] * psi for a in range(n)]

    out = scal * psi.astype(np.complex128)
    for a in range(n):
        out = out + hz[a] * dpsi[a] + hz[n + a] * (dx[a] * psi)
    # second momentum derivatives, computed pairwise
    for a in range(n):
        da = GridState(state.axes, dpsi[a], state.t, state.hbar)
        for b in range(n):
            hpp = hzz[a, b]
            if hpp != 0.0:
                dd = momentum_apply(da, b) - z[b] * dpsi[a]
                out = out + 0.5 * hpp * dd
            hpx = hzz[a, n + b]
            if hpx != 0.0:
                # Weyl ordering: (dp dx + dx dp)/2
                mixed = GridState(state.axes, dx[b] * psi, state.t, state.hbar)
                term = momentum_apply(mixed, a) - z[a] * (dx[b] * psi)
                out = out + 0.5 * hpx * (term + dx[b] * dpsi[a])
    for a in range(n):
        for b in range(n):
            hxx = hzz[n + a, n + b]
            if hxx != 0.0:
                out = out + 0.5 * hxx * (dx[a] * dx[b] * psi)
    return out


def gpe_residual(model: QuadraticModel, snapshots, dt: float) -> float:
    """L2 residual of the equation on three consecutive snapshots, time
    derivative by central difference, spatial operators spectral.

    A diagnostic: it stays evaluatable on deliberately imperfect states, so
    no resolution gate is applied here.
    """
    before, mid, after = snapshots
    if before.axes != mid.axes or mid.axes != after.axes:
        raise ValueError("snapshots must share one grid")
    if not math.isclose(after.t - mid.t, dt, rel_tol=1e-9) or \
            not math.isclose(mid.t - before.t, dt, rel_tol=1e-9):
        raise ValueError("snapshots must be uniformly spaced by dt")
    dpsi_dt = (after.psi - before.psi) / (2.0 * dt)
    resid = -1j * model.hbar * dpsi_dt \
        + apply_effective_hamiltonian(model, mid, validate=False)
    return float(np.sqrt(mid.weight * np.sum(np.abs(resid) ** 2)))
