"""Norms and symmetrized phase-space moments of grid states.

Means follow the normalized convention <A> = <psi|A|psi>/|psi|^2, also for
unnormalized inputs.  Momentum operators act spectrally; position moments use
the trapezoid rule, which is spectrally accurate for states that decay inside
the box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ehrenfest import MomentPoint
from .errors import ResolutionError
from .model import QuadraticModel
from .state import GridState, check_resolved, momentum_apply


def norm_squared(state: GridState, validate: bool = True) -> float:
    if validate:
        check_resolved(state)
    return float(state.weight * np.sum(np.abs(state.psi) ** 2))


def first_moments(state: GridState, validate: bool = True) -> np.ndarray:
    """Return (<p_1..p_n>, <x_1..x_n>), normalized by the squared norm."""
    if validate:
        check_resolved(state)
    n = state.n
    w = state.weight
    dens = np.abs(state.psi) ** 2
    nrm = float(w * dens.sum())
    if nrm == 0.0:
        raise ResolutionError("zero-norm state has no moments")
    z = np.empty(2 * n)
    pts = state.grids()
    for a in range(n):
        z[n + a] = float(w * np.sum(dens * pts[a])) / nrm
        pa = momentum_apply(state, a)
        z[a] = float(np.real(w * np.vdot(state.psi, pa))) / nrm
    return z


def second_moments(state: GridState, z: np.ndarray | None = None,
                   validate: bool = True) -> np.ndarray:
    """Centered, symmetrized second moments as the 2n x 2n block matrix
    [[sigma_pp, sigma_px], [sigma_xp, sigma_xx]]."""
    if z is None:
        z = first_moments(state, validate=validate)
    elif validate:
        check_resolved(state)
    n = state.n
    w = state.weight
    psi = state.psi
    dens = np.abs(psi) ** 2
    nrm = float(w * dens.sum())
    if nrm == 0.0:
        raise ResolutionError("zero-norm state has no moments")
    pts = state.grids()
    dx = [pts[a] - z[n + a] for a in range(n)]
    # (p_a - <p_a>) psi, computed once per axis
    dpsi = [momentum_apply(state, a) - z[a] * psi for a in range(n)]

    spp = np.empty((n, n))
    spx = np.empty((n, n))
    sxx = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            spp[a, b] = spp[b, a] = float(
                np.real(w * np.vdot(dpsi[a], dpsi[b]))) / nrm
            sxx[a, b] = sxx[b, a] = float(
                w * np.sum(dens * dx[a] * dx[b])) / nrm
        for b in range(n):
            spx[a, b] = float(
                np.real(w * np.vdot(psi, dx[b] * dpsi[a]))) / nrm
    out = np.block([[spp, spx], [spx.T, sxx]])
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class StateConstants:
    """Moment record of an initial state: the invariants that parametrize
    its exact evolution."""

    point: MomentPoint
    norm_sq: float
    kappa_tilde: float


def effective_coupling(model: QuadraticModel, state: GridState,
                       validate: bool = True) -> float:
    """kappa_tilde = kappa * |psi|^2, recomputed from the actual state."""
    return model.kappa * norm_squared(state, validate=validate)


def constants_of_motion(model: QuadraticModel, state: GridState,
                        validate: bool = True) -> StateConstants:
    if validate:
        check_resolved(state)
    nrm = norm_squared(state, validate=False)
    if nrm <= 0.0:
        raise ResolutionError("zero-norm state has no moment record")
    z = first_moments(state, validate=False)
    Delta = second_moments(state, z, validate=False)
    return StateConstants(MomentPoint(z, Delta), nrm, model.kappa * nrm)
