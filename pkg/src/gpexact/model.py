"""Quadratic external/interaction models in momentum-first phase-space ordering.

Every 2n x 2n matrix in this package uses the ordering z = (p_1..p_n,
x_1..x_n), with symplectic unit J = [[0, -I], [I, 0]].  The external
Hamiltonian is (1/2) <z, Hzz(t) z> + <Hz(t), z>; the two-body potential is
(1/2) <z, Wzz z> + <z, Wzw w> + (1/2) <w, Www w>, integrated against the
density of the second argument.  All interaction effects enter the dynamics
through the state-norm-scaled coupling kappa_tilde = kappa * |psi|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModelError, ResonanceError

SYMMETRY_TOL = 1e-12


def symplectic_unit(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def _symmetrized(name: str, mat: np.ndarray, tol: float = SYMMETRY_TOL) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    skew = np.max(np.abs(mat - mat.T))
    scale = max(1.0, np.max(np.abs(mat)))
    if skew > tol * scale:
        raise ModelError(f"{name} is asymmetric beyond tolerance ({skew:.3e})")
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True)
class Example1DParams:
    """Driven anharmonic-free 1D setup: kinetic + k x^2/2 - e E x cos(wt),
    two-body potential (a x^2 + 2 b x y + c y^2)/2."""

    m: float = 1.0
    k: float = 1.0
    e: float = 1.0
    E: float = 0.1
    omega: float = 0.5
    a: float = 0.2
    b: float = 0.1
    c: float = 0.3

    @property
    def omega0_sq(self) -> float:
        return self.k / self.m

    def Omega_sq(self, kappa_tilde: float) -> float:
        return self.omega0_sq + kappa_tilde * self.a / self.m

    def Omega(self, kappa_tilde: float) -> float:
        val = self.Omega_sq(kappa_tilde)
        if val <= 0.0:
            raise ModelError(f"effective frequency squared {val:.3e} <= 0")
        return math.sqrt(val)

    def OmegaTilde_sq(self, kappa_tilde: float) -> float:
        return self.omega0_sq + kappa_tilde * (self.a + self.b) / self.m

    def steady_center(self, kappa_tilde: float) -> float:
        """Center of the periodic orbit the drive settles onto."""
        denom = self.OmegaTilde_sq(kappa_tilde) - self.omega ** 2
        if abs(denom) < 1e-12:
            raise ResonanceError("drive resonates with the mean-motion frequency")
        return self.e * self.E / (self.m * denom)


@dataclass(frozen=True)
class Example3DParams:
    """Isotropic trap + rotating electric drive + uniform magnetic field along
    x3, with a Gaussian-shaped two-body potential truncated at second order."""

    m: float = 1.0
    e: float = 1.0
    c_light: float = 1.0
    H_field: float = 0.2
    E_field: float = 0.1
    omega: float = 0.5
    k: float = 1.0
    V0: float = 0.3
    gamma: float = 1.5

    @property
    def omega_H(self) -> float:
        return self.e * self.H_field / (self.m * self.c_light)

    @property
    def omega0_sq(self) -> float:
        return self.k / self.m

    @property
    def eta(self) -> float:
        return self.V0 / self.gamma ** 2

    def omega1_sq(self, kappa_tilde: float) -> float:
        return self.omega0_sq + (self.omega_H / 2.0) ** 2 - kappa_tilde * self.eta / self.m

    def omega2_sq(self, kappa_tilde: float) -> float:
        return self.omega0_sq - kappa_tilde * self.eta / self.m

    def frequencies(self, kappa_tilde: float) -> tuple[float, float]:
        w1s, w2s = self.omega1_sq(kappa_tilde), self.omega2_sq(kappa_tilde)
        if w1s <= 0.0 or w2s <= 0.0:
            raise ModelError("effective trap frequencies must stay positive")
        return math.sqrt(w1s), math.sqrt(w2s)


@dataclass(frozen=True)
class QuadraticModel:
    n: int
    hbar: float
    mass: float
    kappa: float
    Hzz: Callable[[float], np.ndarray]
    Hz: Callable[[float], np.ndarray]
    Wzz: np.ndarray
    Wzw: np.ndarray
    Www: np.ndarray
    example: object = None
    spec: dict = field(default=None, repr=False)

    def momentum_block(self, t: float) -> np.ndarray:
        return self.Hzz(t)[: self.n, : self.n]


def make_model(n: int, hbar: float, mass: float, kappa: float,
               Hzz, Hz, Wzz=None, Wzw=None, Www=None,
               example=None, spec=None) -> QuadraticModel:
    """Validate and assemble a model; matrix arguments may be constants or
    callables of time."""
    if n not in (1, 2, 3):
        raise ModelError("spatial dimension must be 1, 2 or 3")
    if hbar <= 0 or mass <= 0:
        raise ModelError("hbar and mass must be positive")
    d = 2 * n

    zeros = np.zeros((d, d))
    Wzz = zeros if Wzz is None else np.asarray(Wzz, dtype=float)
    Wzw = zeros if Wzw is None else np.asarray(Wzw, dtype=float)
    Www = zeros if Www is None else np.asarray(Www, dtype=float)
    for name, mat in (("Wzz", Wzz), ("Wzw", Wzw), ("Www", Www)):
        if mat.shape != (d, d):
            raise ModelError(f"{name} must be {d}x{d}, got {mat.shape}")
    Wzz = _freeze(_symmetrized("Wzz", Wzz))
    Www = _freeze(_symmetrized("Www", Www))
    Wzw = _freeze(Wzw)

    if callable(Hzz):
        hzz_raw = Hzz
    else:
        const_hzz = _freeze(_symmetrized("Hzz", np.asarray(Hzz, dtype=float)))
        if const_hzz.shape != (d, d):
            raise ModelError(f"Hzz must be {d}x{d}, got {const_hzz.shape}")
        hzz_raw = lambda t, _m=const_hzz: _m

    def hzz(t: float) -> np.ndarray:
        mat = np.asarray(hzz_raw(t), dtype=float)
        if mat.shape != (d, d):
            raise ModelError(f"Hzz(t) must be {d}x{d}, got {mat.shape}")
        return _symmetrized("Hzz(t)", mat)

    if callable(Hz):
        hz_raw = Hz
    else:
        const_hz = _freeze(np.asarray(Hz, dtype=float).reshape(d))
        hz_raw = lambda t, _v=const_hz: _v

    def hz(t: float) -> np.ndarray:
        vec = np.asarray(hz_raw(t), dtype=float)
        if vec.shape != (d,):
            raise ModelError(f"Hz(t) must have length {d}, got {vec.shape}")
        return vec

    hpp = hzz(0.0)[:n, :n]
    if abs(np.linalg.det(hpp)) < 1e-12:
        raise ModelError("momentum-momentum block of Hzz is singular")

    return QuadraticModel(n, hbar, mass, kappa, hzz, hz, Wzz, Wzw, Www,
                          example=example, spec=spec)


def model_1d(params: Example1DParams, hbar: float = 1.0,
             kappa: float = 0.0) -> QuadraticModel:
    p = params
    Hzz = np.array([[1.0 / p.m, 0.0], [0.0, p.k]])
    Wzz = np.array([[0.0, 0.0], [0.0, p.a]])
    Wzw = np.array([[0.0, 0.0], [0.0, p.b]])
    Www = np.array([[0.0, 0.0], [0.0, p.c]])

    def Hz(t: float) -> np.ndarray:
        return np.array([0.0, -p.e * p.E * math.cos(p.omega * t)])

    return make_model(1, hbar, p.m, kappa, Hzz, Hz, Wzz, Wzw, Www, example=p)


def model_3d(params: Example3DParams, hbar: float = 1.0,
             kappa: float = 0.0) -> QuadraticModel:
    p = params
    eye3 = np.eye(3)
    Hzz = np.zeros((6, 6))
    Hzz[:3, :3] = eye3 / p.m
    Hpx = np.zeros((3, 3))
    Hpx[0, 1] = p.omega_H / 2.0
    Hpx[1, 0] = -p.omega_H / 2.0
    Hzz[:3, 3:] = Hpx
    Hzz[3:, :3] = Hpx.T
    # bare trap: isotropic k plus the diamagnetic (omega_H/2)^2 term in-plane
    whalf = (p.omega_H / 2.0) ** 2
    Hzz[3:, 3:] = p.m * np.diag([p.omega0_sq + whalf, p.omega0_sq + whalf,
                                 p.omega0_sq])
    Wzz = np.zeros((6, 6))
    Wzz[3:, 3:] = -p.eta * eye3
    Wzw = np.zeros((6, 6))
    Wzw[3:, 3:] = p.eta * eye3
    Www = np.zeros((6, 6))
    Www[3:, 3:] = -p.eta * eye3

    def Hz(t: float) -> np.ndarray:
        ex = -p.e * p.E_field * math.cos(p.omega * t)
        ey = -p.e * p.E_field * math.sin(p.omega * t)
        return np.array([0.0, 0.0, 0.0, ex, ey, 0.0])

    return make_model(3, hbar, p.m, kappa, Hzz, Hz, Wzz, Wzw, Www, example=p)


def free_model(n: int = 1, hbar: float = 1.0, mass: float = 1.0) -> QuadraticModel:
    d = 2 * n
    Hzz = np.zeros((d, d))
    Hzz[:n, :n] = np.eye(n) / mass
    return make_model(n, hbar, mass, 0.0, Hzz, np.zeros(d))


def harmonic_model(omega: float = 1.0, n: int = 1, hbar: float = 1.0,
                   mass: float = 1.0, kappa: float = 0.0) -> QuadraticModel:
    d = 2 * n
    Hzz = np.zeros((d, d))
    Hzz[:n, :n] = np.eye(n) / mass
    Hzz[n:, n:] = mass * omega ** 2 * np.eye(n)
    return make_model(n, hbar, mass, kappa, Hzz, np.zeros(d))


def effective_hessian(model: QuadraticModel, kappa_tilde: float,
                      t: float) -> np.ndarray:
    """Hessian of the moment-linearized Hamiltonian, Hzz(t) + kt*Wzz."""
    out = model.Hzz(t) + kappa_tilde * model.Wzz
    return 0.5 * (out + out.T)


def mean_drift_hessian(model: QuadraticModel, kappa_tilde: float,
                       t: float) -> np.ndarray:
    """Matrix driving the first moments: Hzz(t) + kt*(Wzz + Wzw)."""
    return model.Hzz(t) + kappa_tilde * (model.Wzz + model.Wzw)


def action_hamiltonian(model: QuadraticModel, kappa_tilde: float, t: float,
                       z: np.ndarray, Delta: np.ndarray) -> float:
    """Scalar energy entering the phase action along the moment trajectory.

    The second-moment trace couples through Www: averaging the two-body
    potential over the second argument leaves (kt/2) tr(Www Delta).
    """
    M = model.Hzz(t) + kappa_tilde * (model.Wzz + 2.0 * model.Wzw + model.Www)
    val = 0.5 * float(z @ M @ z) + float(model.Hz(t) @ z)
    val += 0.5 * kappa_tilde * float(np.trace(model.Www @ Delta))
    return val


def build_model(spec: dict) -> QuadraticModel:
    """Build a model from a JSON-style dict (see README for the schema)."""
    kind = spec.get("example", "custom")
    hbar = float(spec.get("hbar", 1.0))
    kappa = float(spec.get("kappa", 0.0))
    if kind == "1d":
        keys = ("m", "k", "e", "E", "omega", "a", "b", "c")
        params = Example1DParams(**{k: float(spec[k]) for k in keys if k in spec})
        model = model_1d(params, hbar=hbar, kappa=kappa)
    elif kind == "3d":
        keys = ("m", "e", "c_light", "H_field", "E_field", "omega", "k",
                "V0", "gamma")
        params = Example3DParams(**{k: float(spec[k]) for k in keys if k in spec})
        model = model_3d(params, hbar=hbar, kappa=kappa)
    elif kind == "custom":
        n = int(spec["n"])
        d = 2 * n
        mass = float(spec.get("m", 1.0))

        def mat(key):
            if key not in spec:
                return None
            return np.asarray(spec[key], dtype=float).reshape(d, d)

        hz = np.asarray(spec.get("Hz", np.zeros(d)), dtype=float).reshape(d)
        model = make_model(n, hbar, mass, kappa, mat("Hzz"), hz,
                           mat("Wzz"), mat("Wzw"), mat("Www"))
    else:
        raise ModelError(f"unknown example kind {kind!r}")
    object.__setattr__(model, "spec", dict(spec))
    return model


def model_to_spec(model: QuadraticModel) -> dict:
    """Serialize a model back to the JSON schema; round-trips bitwise."""
    if model.spec is not None:
        return dict(model.spec)
    d = 2 * model.n
    return {
        "example": "custom",
        "n": model.n,
        "hbar": model.hbar,
        "m": model.mass,
        "kappa": model.kappa,
        "Hzz": model.Hzz(0.0).reshape(d * d).tolist(),
        "Hz": model.Hz(0.0).tolist(),
        "Wzz": model.Wzz.reshape(d * d).tolist(),
        "Wzw": model.Wzw.reshape(d * d).tolist(),
        "Www": model.Www.reshape(d * d).tolist(),
    }
