"""Transport of first/second moments and the variational fundamental matrix.

The first moments follow the classical drift of the mean-field Hamiltonian;
centered second moments are transported congruently by the fundamental matrix
(matriciant) A(t,s) of the variational system dA/dt = J h_zz(t) A.  The phase
action accumulated along the trajectory is integrated alongside so the
propagator can read it at matching accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationError
from .model import (QuadraticModel, action_hamiltonian, effective_hessian,
                    mean_drift_hessian, symplectic_unit)

RTOL_DEFAULT = 1e-10
ATOL_DEFAULT = 1e-12


@dataclass(frozen=True)
class MomentPoint:
    """Phase-space mean z = (<p>, <x>) and centered second-moment matrix."""

    z: np.ndarray
    Delta: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        D = np.asarray(self.Delta, dtype=float)
        d = z.shape[0]
        if D.shape != (d, d):
            raise ValueError("Delta must be square of the same phase-space size")
        if np.max(np.abs(D - D.T)) > 1e-10 * max(1.0, np.max(np.abs(D))):
            raise ValueError("Delta must be symmetric")
        n = d // 2
        sxx = 0.5 * (D[n:, n:] + D[n:, n:].T)
        if np.linalg.eigvalsh(sxx).min() < -1e-10 * max(1.0, np.max(np.abs(sxx))):
            raise ValueError("position block of Delta must be positive semidefinite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "Delta", 0.5 * (D + D.T))

    @property
    def n(self) -> int:
        return self.z.shape[0] // 2


class MomentTrajectory:
    """Dense-in-time solution of the moment system plus the phase action."""

    def __init__(self, model: QuadraticModel, kappa_tilde: float,
                 sol, s: float, t: float):
        self.model = model
        self.kappa_tilde = kappa_tilde
        self._sol = sol
        self.s = s
        self.t = t
        self.n = model.n

    def _check(self, tau: float) -> None:
        lo, hi = min(self.s, self.t), max(self.s, self.t)
        if tau < lo - 1e-12 or tau > hi + 1e-12:
            raise ValueError(f"time {tau} outside trajectory range [{lo}, {hi}]")

    def z(self, tau: float) -> np.ndarray:
        self._check(tau)
        return self._sol.sol(tau)[: 2 * self.n]

    def Delta(self, tau: float) -> np.ndarray:
        self._check(tau)
        d = 2 * self.n
        D = self._sol.sol(tau)[d: d + d * d].reshape(d, d)
        return 0.5 * (D + D.T)

    def action(self, tau: float) -> float:
        self._check(tau)
        d = 2 * self.n
        return float(self._sol.sol(tau)[d + d * d])

    def point(self, tau: float) -> MomentPoint:
        return MomentPoint(self.z(tau), self.Delta(tau))

    def momentum(self, tau: float) -> np.ndarray:
        return self.z(tau)[: self.n]

    def position(self, tau: float) -> np.ndarray:
        return self.z(tau)[self.n:]


def integrate_moments(model: QuadraticModel, kappa_tilde: float,
                      g0: MomentPoint, s: float, t: float,
                      rtol: float = RTOL_DEFAULT,
                      atol: float = ATOL_DEFAULT) -> MomentTrajectory:
    """Integrate means, centered second moments, and the phase action over
    [s, t] (backward if t < s)."""
    n = model.n
    d = 2 * n
    J = symplectic_unit(n)

    def rhs(tau, y):
        z = y[:d]
        D = y[d: d + d * d].reshape(d, d)
        D = 0.5 * (D + D.T)
        zdot = J @ (model.Hz(tau) + mean_drift_hessian(model, kappa_tilde, tau) @ z)
        B = J @ effective_hessian(model, kappa_tilde, tau)
        Ddot = B @ D + D @ B.T
        sdot = float(z[:n] @ zdot[n:]) - action_hamiltonian(
            model, kappa_tilde, tau, z, D)
        return np.concatenate([zdot, Ddot.ravel(), [sdot]])

    y0 = np.concatenate([g0.z, g0.Delta.ravel(), [0.0]])
    if t == s:
        class _Const:
            def sol(self, tau):
                return y0
        return MomentTrajectory(model, kappa_tilde, _Const(), s, t)

    sol = solve_ivp(rhs, (s, t), y0, method="DOP853", dense_output=True,
                    rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise IntegrationError(f"moment integration failed: {sol.message}")
    traj = MomentTrajectory(model, kappa_tilde, sol, s, t)

    # cheap endpoint residual guard against silent integrator trouble
    yt = np.concatenate([traj.z(t), traj.Delta(t).ravel(), [traj.action(t)]])
    resid = rhs(t, yt)
    if not np.all(np.isfinite(resid)):
        raise IntegrationError("moment system right-hand side is non-finite")
    return traj


class Matriciant:
    """Fundamental matrix A(tau, s) of the variational system."""

    def __init__(self, model: QuadraticModel, kappa_tilde: float,
                 sol, s: float, t: float):
        self.model = model
        self.kappa_tilde = kappa_tilde
        self._sol = sol
        self.s = s
        self.t = t
        self.n = model.n

    def __call__(self, tau: float) -> np.ndarray:
        d = 2 * self.n
        if tau == self.s:
            return np.eye(d)
        return self._sol.sol(tau).reshape(d, d)

    def between(self, a: float, b: float) -> np.ndarray:
        """A(b, a) through the group property, using the exact symplectic
        inverse of A(a, s)."""
        return self(b) @ symplectic_inverse(self(a))

    @property
    def at_end(self) -> np.ndarray:
        return self(self.t)


def symplectic_inverse(A: np.ndarray) -> np.ndarray:
    n = A.shape[0] // 2
    J = symplectic_unit(n)
    return -J @ A.T @ J


def integrate_variations(model: QuadraticModel, kappa_tilde: float,
                         s: float, t: float,
                         rtol: float = RTOL_DEFAULT,
                         atol: float = ATOL_DEFAULT) -> Matriciant:
    """Integrate dA/dt = J h_zz(t) A with A(s, s) = I (backward allowed)."""
    n = model.n
    d = 2 * n
    J = symplectic_unit(n)

    def rhs(tau, y):
        A = y.reshape(d, d)
        return (J @ effective_hessian(model, kappa_tilde, tau) @ A).ravel()

    y0 = np.eye(d).ravel()
    if t == s:
        class _Id:
            def sol(self, tau):
                return y0
        return Matriciant(model, kappa_tilde, _Id(), s, t)

    sol = solve_ivp(rhs, (s, t), y0, method="DOP853", dense_output=True,
                    rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise IntegrationError(f"variational integration failed: {sol.message}")
    return Matriciant(model, kappa_tilde, sol, s, t)


def matriciant_blocks(A: np.ndarray):
    """Split A = [[l4^T, -l2^T], [-l3^T, l1^T]] into (l1, l2, l3, l4)."""
    d = A.shape[0]
    n = d // 2
    l4 = A[:n, :n].T.copy()
    l2 = -A[:n, n:].T.copy()
    l3 = -A[n:, :n].T.copy()
    l1 = A[n:, n:].T.copy()
    return l1, l2, l3, l4


def blocks_to_matriciant(l1, l2, l3, l4) -> np.ndarray:
    n = l1.shape[0]
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = l4.T
    A[:n, n:] = -l2.T
    A[n:, :n] = -l3.T
    A[n:, n:] = l1.T
    return A


def symplectic_defect(A: np.ndarray) -> float:
    n = A.shape[0] // 2
    J = symplectic_unit(n)
    return float(np.max(np.abs(A.T @ J @ A - J)))


def trajectory_to_csv(traj: MomentTrajectory, times, path) -> None:
    """CSV export: t, mean vector, upper triangle of Delta."""
    d = 2 * traj.n
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t"] + [f"z{i}" for i in range(d)]
        header += [f"Delta{i}{j}" for i, j in pairs]
        writer.writerow(header)
        for tau in times:
            z = traj.z(tau)
            D = traj.Delta(tau)
            row = [f"{tau:.16e}"] + [f"{v:.16e}" for v in z]
            row += [f"{D[i, j]:.16e}" for i, j in pairs]
            writer.writerow(row)
