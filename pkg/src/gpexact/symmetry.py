"""Solution-to-solution maps built by conjugating grid operators with the
evolution operator, plus the ladder hierarchy and quasi-energies of the 1D
driven example.

All maps here act within one coupling family at fixed kappa_tilde, which by
default is the model's coupling times unit norm.  At fixed kappa_tilde the
evolution is homogeneous in amplitude, so scaled family members (such as the
unnormalized ladder images sqrt(n+1) psi_{n+1}) transform exactly and the
ladder coefficients come out sharp.  Pass ``kappa_tilde`` through the options
to act within a different family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import eval_hermite, gammaln

from .ehrenfest import MomentPoint, integrate_moments
from .errors import ModelError, ResonanceError
from .evolution import EvolveOptions, evolve, evolve_inverse
from .model import Example1DParams, QuadraticModel
from .moments import constants_of_motion, first_moments, norm_squared
from .state import Axis, GridState, momentum_apply

ANNIHILATED_CUT = 1e-9


@dataclass(frozen=True)
class IntertwinedOperator:
    """Polynomial of degree <= 2 in the centered operators (dp, dx), applied
    at the pullback time.  ``terms`` maps operator words to complex
    coefficients; letters act right to left, e.g. "xp" is dx*(dp psi).
    Centers default to the pulled-back state's own first moments."""

    terms: tuple[tuple[complex, str], ...]
    center: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        for _, word in self.terms:
            if len(word) > 2 or any(ch not in "xp" for ch in word):
                raise ModelError(f"unsupported operator word {word!r}")


def apply_polynomial(op: IntertwinedOperator, state: GridState,
                     center=None) -> GridState:
    if center is None:
        center = op.center
    if center is None:
        z = first_moments(state)
        n = state.n
        center = (z[:n], z[n:])
    p0, x0 = np.atleast_1d(center[0]), np.atleast_1d(center[1])
    if state.n != 1:
        raise ModelError("polynomial grid operators are implemented in 1D")
    x = state.axes[0].points
    dx = x - x0[0]

    def letter(ch, arr):
        st = state.with_psi(arr)
        if ch == "x":
            return dx * arr
        return momentum_apply(st, 0) - p0[0] * arr

    out = np.zeros_like(state.psi)
    for coeff, word in op.terms:
        cur = np.array(state.psi)
        for ch in reversed(word):
            cur = letter(ch, cur)
        out = out + coeff * cur
    return state.with_psi(out)


def family_coupling(model: QuadraticModel, Psi: GridState) -> float:
    """Coupling of the solution family Psi belongs to."""
    return model.kappa * norm_squared(Psi)


def apply_symmetry(model: QuadraticModel, a_op: IntertwinedOperator,
                   Psi: GridState, s: float = 0.0,
                   opts: EvolveOptions | None = None) -> GridState:
    """Map a solution at time t to another solution: pull back to s, apply
    the operator, re-evolve with refreshed moment constants."""
    opts = opts or EvolveOptions()
    kt = model.kappa if opts.kappa_tilde is None else opts.kappa_tilde
    fam = _with_kt(opts, kt)
    psi0 = evolve_inverse(model, Psi, s, fam)
    phi0 = apply_polynomial(a_op, psi0)
    nrm = norm_squared(phi0, validate=False)
    if nrm <= (ANNIHILATED_CUT * norm_squared(psi0, validate=False)):
        return phi0.at_time(Psi.t)  # annihilated: U maps 0 to 0
    return evolve(model, phi0, Psi.t, fam)


def _with_kt(opts: EvolveOptions, kt: float) -> EvolveOptions:
    return replace(opts, kappa_tilde=kt)


def one_parameter_family(model: QuadraticModel, generator, alpha: float,
                         Psi: GridState, s: float = 0.0,
                         opts: EvolveOptions | None = None) -> GridState:
    """exp(alpha * i(u dx + v dp + w)) conjugated with the evolution operator.

    ``generator`` is the real triple (u, v, w); the exponential acts in
    closed form as a boost, a translation, and scalar phases (Weyl ordering
    supplies the alpha^2 cross phase).
    """
    opts = opts or EvolveOptions()
    u, v, w0 = (float(g) for g in generator)
    if alpha == 0.0:
        return Psi
    if Psi.n != 1:
        raise ModelError("closed-form generator exponentials are 1D")
    kt = model.kappa if opts.kappa_tilde is None else opts.kappa_tilde
    fam = _with_kt(opts, kt)
    psi0 = evolve_inverse(model, Psi, s, fam)
    z = first_moments(psi0)
    p0, x0 = z[0], z[1]
    hbar = psi0.hbar
    x = psi0.axes[0].points
    # exp(i a u dx) exp(i a v dp) with the central commutator phase
    spec = np.fft.fft(psi0.psi)
    k = psi0.axes[0].wavenumbers
    spec *= np.exp(1j * alpha * v * hbar * k)  # translation by alpha*v*hbar
    arr = np.fft.ifft(spec)
    arr = arr * np.exp(-1j * alpha * v * p0)
    arr = arr * np.exp(1j * alpha * u * (x - x0))
    arr = arr * np.exp(1j * (alpha * w0 + 0.5 * hbar * alpha ** 2 * u * v))
    phi0 = psi0.with_psi(arr)
    return evolve(model, phi0, Psi.t, fam)


def ladder_operators(model: QuadraticModel, kappa_tilde: float,
                     center: tuple[float, float]) -> tuple[IntertwinedOperator,
                                                           IntertwinedOperator]:
    """Lowering/raising pair (dp -+ i m Omega dx)/sqrt(2 hbar m Omega) about
    a fixed phase-space center."""
    params = _params_1d(model)
    m = params.m
    Om = params.Omega(kappa_tilde)
    norm = 1.0 / math.sqrt(2.0 * model.hbar * m * Om)
    p0 = np.atleast_1d(center[0])
    x0 = np.atleast_1d(center[1])
    lower = IntertwinedOperator(((norm, "p"), (-1j * m * Om * norm, "x")),
                                center=(p0, x0))
    raise_ = IntertwinedOperator(((norm, "p"), (1j * m * Om * norm, "x")),
                                 center=(p0, x0))
    return lower, raise_


def _params_1d(model: QuadraticModel) -> Example1DParams:
    if not isinstance(model.example, Example1DParams):
        raise ModelError("this operation needs a model built from "
                         "Example1DParams")
    return model.example


def ladder_apply(model: QuadraticModel, sign: int, Psi: GridState,
                 s: float = 0.0,
                 opts: EvolveOptions | None = None) -> GridState:
    """Apply the raising (+1) or lowering (-1) solution map; on the n-th
    basis solution this yields sqrt(n+1) or sqrt(n) times its neighbor."""
    opts = opts or EvolveOptions()
    kt = model.kappa if opts.kappa_tilde is None else opts.kappa_tilde
    fam = _with_kt(opts, kt)
    psi0 = evolve_inverse(model, Psi, s, fam)
    z = first_moments(psi0)
    lower, raise_ = ladder_operators(model, kt, (z[0], z[1]))
    op = raise_ if sign > 0 else lower
    phi0 = apply_polynomial(op, psi0)
    nrm = norm_squared(phi0, validate=False)
    if nrm <= ANNIHILATED_CUT * norm_squared(psi0, validate=False):
        return phi0.at_time(Psi.t)
    return evolve(model, phi0, Psi.t, fam)


@dataclass(frozen=True)
class FockSolution:
    """Closed-form n-th basis solution riding the steady forced orbit."""

    model: QuadraticModel
    n_index: int
    kappa_tilde: float

    @property
    def params(self) -> Example1DParams:
        return _params_1d(self.model)

    def initial_constants(self) -> MomentPoint:
        p = self.params
        kt = self.kappa_tilde
        Om = p.Omega(kt)
        hbar = self.model.hbar
        x0 = p.steady_center(kt)
        sig = hbar * (2 * self.n_index + 1) / (2.0 * p.m * Om)
        Delta = np.array([[(p.m * Om) ** 2 * sig, 0.0], [0.0, sig]])
        return MomentPoint(np.array([0.0, x0]), Delta)

    def evaluate(self, x: np.ndarray, t: float,
                 rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
        p = self.params
        kt = self.kappa_tilde
        hbar = self.model.hbar
        Om = p.Omega(kt)
        nq = self.n_index
        traj = integrate_moments(self.model, kt, self.initial_constants(),
                                 0.0, t, rtol=rtol, atol=atol)
        S = traj.action(t)
        P = traj.momentum(t)[0]
        X = traj.position(t)[0]
        dx = np.asarray(x, dtype=float) - X
        xi = np.sqrt(p.m * Om / hbar) * dx
        log_norm = -0.5 * (nq * math.log(2.0) + float(gammaln(nq + 1)))
        herm = eval_hermite(nq, xi) * np.exp(log_norm)
        gauss = (p.m * Om / (math.pi * hbar)) ** 0.25 \
            * np.exp(1j * (S + P * dx) / hbar - p.m * Om * dx ** 2 / (2 * hbar))
        phase = (1j) ** nq * np.exp(-1j * (nq + 0.5) * Om * t)
        return phase * herm * gauss


def fock_state(model: QuadraticModel, n: int, t: float,
               axis: Axis | None = None,
               kappa_tilde: float | None = None) -> GridState:
    """Sample the n-th closed-form solution on a grid at time t.

    The family coupling defaults to model.kappa, i.e. unit-norm members.
    """
    if n < 0:
        raise ValueError("quantum number must be nonnegative")
    kt = model.kappa if kappa_tilde is None else kappa_tilde
    sol = FockSolution(model, n, kt)
    if axis is None:
        p = sol.params
        x0 = p.steady_center(kt)
        axis = Axis(x0 - 12.0, x0 + 12.0, 2048)
    psi = sol.evaluate(axis.points, t)
    return GridState((axis,), psi.astype(np.complex128), t, model.hbar)


def quasi_energy(model: QuadraticModel, n: int,
                 kappa_tilde: float | None = None) -> float:
    """Phase rate of the n-th solution over one drive period."""
    p = _params_1d(model)
    kt = model.kappa if kappa_tilde is None else kappa_tilde
    hbar = model.hbar
    Om = p.Omega(kt)
    Oms_t = p.OmegaTilde_sq(kt)
    denom = Oms_t - p.omega ** 2
    if abs(denom) < 1e-12:
        raise ResonanceError("quasi-energies are undefined at resonance")
    eE = p.e * p.E
    term1 = -eE ** 2 / (2.0 * p.m * denom)
    shift = p.omega ** 2 - p.omega0_sq - kt * (p.a + 2 * p.b + p.c) / p.m
    term2 = -eE ** 2 * shift / (4.0 * p.m * denom ** 2)
    term3 = hbar * (Om + kt * p.c / (2.0 * p.m * Om)) * (n + 0.5)
    return term1 + term2 + term3
