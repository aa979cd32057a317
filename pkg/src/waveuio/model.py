"""Data model for coupled semilinear wave systems with unknown inputs.

Defines the validated containers for the plant, the observer, stability
certificates and the input signals, together with the evaluation of the
built-in nonlinearity and disturbance catalogs.  All containers are
immutable after construction (their arrays are frozen), so values can be
shared freely between threads.

The plant is a system of ``n`` coupled wave equations on the unit interval,

    w_tt = A w_xx - B w_t - D w + f(w) + G u(t) + F d(t)

with boundary conditions ``w_x(0,t) = C1 w_t(0,t)``, ``w_x(1,t) = 0`` and
the averaged output ``y(t) = C int_0^1 w dx + K u(t) + H d(t)``; ``u`` is a
known input and ``d`` an unknown one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Tolerance gates used by the validator.  Symmetry is relative Frobenius,
# positive definiteness allows an eigenvalue floor proportional to the
# largest eigenvalue.
SYMMETRY_RTOL = 1e-10
POSDEF_EIG_RTOL = 1e-12
GAMMA_RTOL = 1e-12

# Nonlinearity catalog.  The catalog is enumerated (not an expression
# language) so that the declared Lipschitz constant stays checkable.
NL_ZERO = "zero"
NL_SINE = "sine"
NL_TANH = "tanh"
NONLINEARITY_KINDS = (NL_ZERO, NL_SINE, NL_TANH)

DIST_ZERO = "zero"
DIST_CONSTANT = "constant"
DIST_DAMPED_SINE = "damped_sine"
DIST_SAMPLED = "sampled"
DISTURBANCE_KINDS = (DIST_ZERO, DIST_CONSTANT, DIST_DAMPED_SINE, DIST_SAMPLED)

CTRL_ZERO = "zero"
CTRL_INTEGRAL = "integral_state_feedback"
CONTROL_KINDS = (CTRL_ZERO, CTRL_INTEGRAL)


def _frozen_array(value, dtype=float):
    arr = np.array(value, dtype=dtype)
    arr.flags.writeable = False
    return arr


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


@dataclass(frozen=True, eq=False)
class NonlinearitySpec:
    """Componentwise nonlinearity f acting on the state vector.

    ``kind`` is one of ``"zero"``, ``"sine"`` or ``"tanh"``; for the latter
    two, component i evaluates to ``amplitudes[i] * sin(w_i)`` (resp.
    ``tanh``) and the Lipschitz constant is ``max |amplitudes|``.
    """

    kind: str
    amplitudes: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind != NL_ZERO:
            if self.amplitudes is None:
                raise ValueError(f"{self.kind!r} nonlinearity needs amplitudes")
            _set(self, "amplitudes", _frozen_array(np.atleast_1d(self.amplitudes)))

    @property
    def lipschitz_constant(self) -> float:
        if self.kind == NL_ZERO:
            return 0.0
        return float(np.max(np.abs(self.amplitudes)))


def eval_nonlinearity(spec: NonlinearitySpec, w) -> np.ndarray:
    """Evaluate f componentwise on a state vector or an (n, npts) field."""
    w = np.asarray(w, dtype=float)
    if spec.kind == NL_ZERO:
        return np.zeros_like(w)
    amps = spec.amplitudes
    if w.ndim == 2:
        amps = amps[:, None]
    if spec.kind == NL_SINE:
        return amps * np.sin(w)
    return amps * np.tanh(w)


@dataclass(frozen=True, eq=False)
class DisturbanceSpec:
    """Unknown-input signal d(t), one of the built-in signal shapes.

    * ``zero``        -- d(t) = 0
    * ``constant``    -- d(t) = value
    * ``damped_sine`` -- d(t) = amplitude * exp(-decay*t) * sin(omega*t)
    * ``sampled``     -- linear interpolation in a (times, values) table,
                         clamped to the table ends
    """

    kind: str
    d_dim: int
    amplitude: np.ndarray | None = None
    decay: float = 0.0
    omega: float = 0.0
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        _set(self, "d_dim", int(self.d_dim))
        if self.d_dim < 1:
            raise ValueError("d_dim must be positive")
        if self.kind in (DIST_CONSTANT, DIST_DAMPED_SINE):
            amp = np.broadcast_to(np.atleast_1d(np.asarray(self.amplitude, float)),
                                  (self.d_dim,))
            _set(self, "amplitude", _frozen_array(amp))
        if self.kind == DIST_SAMPLED:
            times = np.atleast_1d(np.asarray(self.times, float))
            if times.size == 0:
                raise ValueError("sampled disturbance has an empty table")
            values = np.atleast_2d(np.asarray(self.values, float))
            if values.shape != (self.d_dim, times.size):
                raise ValueError("sampled disturbance table shape mismatch")
            if np.any(np.diff(times) <= 0):
                raise ValueError("sampled disturbance times must increase")
            _set(self, "times", _frozen_array(times))
            _set(self, "values", _frozen_array(values))

    @classmethod
    def zero(cls, d_dim: int) -> "DisturbanceSpec":
        return cls(DIST_ZERO, d_dim)

    @classmethod
    def constant(cls, value) -> "DisturbanceSpec":
        value = np.atleast_1d(np.asarray(value, float))
        return cls(DIST_CONSTANT, value.size, amplitude=value)

    @classmethod
    def damped_sine(cls, amplitude, decay, omega, d_dim=None) -> "DisturbanceSpec":
        amp = np.atleast_1d(np.asarray(amplitude, float))
        if d_dim is None:
            d_dim = amp.size
        return cls(DIST_DAMPED_SINE, d_dim, amplitude=amp, decay=float(decay),
                   omega=float(omega))

    @classmethod
    def sampled(cls, times, values) -> "DisturbanceSpec":
        values = np.atleast_2d(np.asarray(values, float))
        return cls(DIST_SAMPLED, values.shape[0], times=times, values=values)


def eval_disturbance(spec: DisturbanceSpec, t: float) -> np.ndarray:
    """Evaluate the unknown-input signal at time t >= 0."""
    if spec.kind == DIST_ZERO:
        return np.zeros(spec.d_dim)
    if spec.kind == DIST_CONSTANT:
        return spec.amplitude.copy()
    if spec.kind == DIST_DAMPED_SINE:
        return spec.amplitude * (np.exp(-spec.decay * t) * np.sin(spec.omega * t))
    return np.array([np.interp(t, spec.times, spec.values[i])
                     for i in range(spec.d_dim)])


@dataclass(frozen=True, eq=False)
class ControlSpec:
    """Known input u(t); either identically zero or the integral state
    feedback ``u(t) = -K1 int_0^1 w(x,t) dx`` with a p-by-n gain K1."""

    kind: str
    p: int
    K1: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in CONTROL_KINDS:
            raise ValueError(f"unknown control kind {self.kind!r}")
        _set(self, "p", int(self.p))
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.kind == CTRL_INTEGRAL:
            K1 = np.atleast_2d(np.asarray(self.K1, float))
            if K1.shape[0] != self.p:
                raise ValueError(f"K1 must have {self.p} rows, got {K1.shape}")
            _set(self, "K1", _frozen_array(K1))

    @classmethod
    def zero(cls, p: int) -> "ControlSpec":
        return cls(CTRL_ZERO, p)

    @classmethod
    def integral_state_feedback(cls, K1) -> "ControlSpec":
        K1 = np.atleast_2d(np.asarray(K1, float))
        return cls(CTRL_INTEGRAL, K1.shape[0], K1=K1)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """The plant: matrices, nonlinearity and its Lipschitz constant.

    Shapes: A, B, D, C1 are n-by-n, C is q-by-n, G is n-by-p, F is
    n-by-d_dim, K is q-by-p, H is q-by-d_dim.  Use :func:`validate_system`
    to obtain a report of violated assumptions; the constructor only
    coerces and freezes the arrays.
    """

    n: int
    p: int
    q: int
    d_dim: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    C1: np.ndarray
    D: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    K: np.ndarray
    nonlinearity: NonlinearitySpec
    gamma: float

    def __post_init__(self):
        for name in ("n", "p", "q", "d_dim"):
            _set(self, name, int(getattr(self, name)))
        for name in ("A", "B", "C", "C1", "D", "F", "G", "H", "K"):
            _set(self, name, _frozen_array(np.atleast_2d(getattr(self, name))))
        _set(self, "gamma", float(self.gamma))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_system`: the list of violated invariants."""

    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def is_symmetric(S, rtol=SYMMETRY_RTOL) -> bool:
    S = np.asarray(S, float)
    nrm = np.linalg.norm(S)
    if nrm == 0.0:
        return True
    return np.linalg.norm(S - S.T) <= rtol * nrm


def is_positive_definite(S, rtol=POSDEF_EIG_RTOL) -> bool:
    """Positive definiteness decided on the symmetrized matrix, admitting a
    relative eigenvalue floor of ``-rtol * lambda_max``."""
    S = np.asarray(S, float)
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    lam_max = w[-1]
    return lam_max > 0.0 and w[0] > -rtol * lam_max


def validate_system(sys: SystemSpec) -> ValidationReport:
    """Check the plant against the modelling assumptions.

    Reports, rather than raises: the result lists one message per violated
    invariant (dimension/shape mismatches, lost symmetry, indefiniteness of
    A, B, D, and a ``gamma`` that disagrees with the nonlinearity catalog).
    An empty list means the system is valid.

    Note: the boundary coupling matrix C1 is required to be symmetric but
    not definite; the two-equation demo system uses an indefinite C1.
    """
    bad = []
    for name in ("n", "p", "q", "d_dim"):
        if getattr(sys, name) < 1:
            bad.append(f"{name} must be >= 1")
    if bad:
        return ValidationReport(tuple(bad))

    n, p, q, d = sys.n, sys.p, sys.q, sys.d_dim
    expected = {"A": (n, n), "B": (n, n), "D": (n, n), "C1": (n, n),
                "C": (q, n), "G": (n, p), "F": (n, d), "K": (q, p), "H": (q, d)}
    shapes_ok = {}
    for name, shape in expected.items():
        mat = getattr(sys, name)
        shapes_ok[name] = mat.shape == shape
        if not shapes_ok[name]:
            bad.append(f"{name}: expected shape {shape}, got {mat.shape}")
        elif not np.all(np.isfinite(mat)):
            bad.append(f"{name}: non-finite entries")
            shapes_ok[name] = False

    for name in ("A", "B", "D", "C1"):
        if shapes_ok[name] and not is_symmetric(getattr(sys, name)):
            bad.append(f"{name} not symmetric")
    for name in ("A", "B", "D"):
        if shapes_ok[name] and is_symmetric(getattr(sys, name)) \
                and not is_positive_definite(getattr(sys, name)):
            bad.append(f"{name} not positive definite")

    nl = sys.nonlinearity
    if nl.kind != NL_ZERO and nl.amplitudes.shape != (n,):
        bad.append(f"nonlinearity amplitudes: expected shape ({n},), "
                   f"got {nl.amplitudes.shape}")
    else:
        lip = nl.lipschitz_constant
        if not np.isclose(sys.gamma, lip, rtol=GAMMA_RTOL, atol=0.0):
            bad.append(f"gamma {sys.gamma} != catalog Lipschitz constant {lip}")
    if sys.gamma < 0:
        bad.append("gamma must be nonnegative")
    return ValidationReport(tuple(bad))


@dataclass(frozen=True, eq=False)
class ObserverSpec:
    """The observer matrices.

    The observer state z obeys
    ``z_tt = A1 z_xx - B1 z_t - D1 z + M f(what) + G1 u + L y`` with the
    estimate ``what = T z + Q u + E y``.  A consistent observer satisfies
    the eight algebraic equations checked by
    :func:`waveuio.synthesis.verify_equations` (in particular T M = I and
    E = L).
    """

    A1: np.ndarray
    B1: np.ndarray
    D1: np.ndarray
    M: np.ndarray
    T: np.ndarray
    G1: np.ndarray
    L: np.ndarray
    E: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        for name in ("A1", "B1", "D1", "M", "T", "G1", "L", "E", "Q"):
            _set(self, name, _frozen_array(np.atleast_2d(getattr(self, name))))
        n = self.A1.shape[0]
        for name in ("A1", "B1", "D1", "M", "T"):
            if getattr(self, name).shape != (n, n):
                raise ValueError(f"{name}: expected shape {(n, n)}, "
                                 f"got {getattr(self, name).shape}")
        for name, other in (("L", "E"), ("G1", "Q")):
            if getattr(self, name).shape != getattr(self, other).shape:
                raise ValueError(f"{name} and {other} must have equal shapes")
        for name in ("G1", "L", "E", "Q"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} must have {n} rows")

    @property
    def n(self) -> int:
        return self.A1.shape[0]

    @property
    def p(self) -> int:
        return self.G1.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[1]


@dataclass(frozen=True, eq=False)
class Certificate:
    """Lyapunov certificate (P, Gamma, delta) plus the optional attenuation
    level mu used by the H-infinity check."""

    P: np.ndarray
    Gamma: np.ndarray
    delta: float
    mu: float | None = None

    def __post_init__(self):
        _set(self, "P", _frozen_array(np.atleast_2d(self.P)))
        _set(self, "Gamma", _frozen_array(np.atleast_2d(self.Gamma)))
        _set(self, "delta", float(self.delta))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.mu is not None:
            _set(self, "mu", float(self.mu))
            if self.mu <= 0:
                raise ValueError("mu must be positive")


@dataclass(frozen=True, eq=False)
class InitialData:
    """Sampled initial fields on the grid.

    ``w0``/``w1`` are the plant position and velocity, each of shape
    (n, npts).  The observer may be initialized either through the estimate
    fields ``what0``/``what1`` (from which the internal state is derived as
    ``z0 = M (what0 - Q u(0) - E y(0))`` and ``z1 = M what1``, neglecting
    input/output rate terms) or directly through ``z0``/``z1``.
    """

    w0: np.ndarray
    w1: np.ndarray
    what0: np.ndarray | None = None
    what1: np.ndarray | None = None
    z0: np.ndarray | None = None
    z1: np.ndarray | None = None

    def __post_init__(self):
        _set(self, "w0", _frozen_array(np.atleast_2d(self.w0)))
        _set(self, "w1", _frozen_array(np.atleast_2d(self.w1)))
        has_what = self.what0 is not None or self.what1 is not None
        has_z = self.z0 is not None or self.z1 is not None
        if has_what and has_z:
            raise ValueError("give either (what0, what1) or (z0, z1), not both")
        if has_what:
            if self.what0 is None or self.what1 is None:
                raise ValueError("both what0 and what1 are required")
            _set(self, "what0", _frozen_array(np.atleast_2d(self.what0)))
            _set(self, "what1", _frozen_array(np.atleast_2d(self.what1)))
        elif has_z:
            if self.z0 is None or self.z1 is None:
                raise ValueError("both z0 and z1 are required")
            _set(self, "z0", _frozen_array(np.atleast_2d(self.z0)))
            _set(self, "z1", _frozen_array(np.atleast_2d(self.z1)))
        else:
            raise ValueError("observer initial data missing")
        fields = [self.w0, self.w1] + (
            [self.what0, self.what1] if has_what else [self.z0, self.z1])
        for f in fields:
            if f.shape != self.w0.shape:
                raise ValueError("initial fields must share one shape")
            if not np.all(np.isfinite(f)):
                raise ValueError("initial fields must be finite")

    @property
    def observer_form(self) -> str:
        return "what" if self.what0 is not None else "z"


# ---------------------------------------------------------------------------
# JSON serialization (schemas documented in docs/schema.md)

def nonlinearity_to_dict(nl: NonlinearitySpec) -> dict:
    out = {"kind": nl.kind}
    if nl.kind != NL_ZERO:
        out["amplitudes"] = nl.amplitudes.tolist()
    return out


def nonlinearity_from_dict(data: dict) -> NonlinearitySpec:
    return NonlinearitySpec(data["kind"], data.get("amplitudes"))


def system_to_dict(sys: SystemSpec) -> dict:
    out = {"n": sys.n, "p": sys.p, "q": sys.q, "d_dim": sys.d_dim}
    for name in ("A", "B", "C", "C1", "D", "F", "G", "H", "K"):
        out[name] = getattr(sys, name).tolist()
    out["nonlinearity"] = nonlinearity_to_dict(sys.nonlinearity)
    out["gamma"] = sys.gamma
    return out


def system_from_dict(data: dict) -> SystemSpec:
    return SystemSpec(
        n=data["n"], p=data["p"], q=data["q"], d_dim=data["d_dim"],
        A=data["A"], B=data["B"], C=data["C"], C1=data["C1"], D=data["D"],
        F=data["F"], G=data["G"], H=data["H"], K=data["K"],
        nonlinearity=nonlinearity_from_dict(data["nonlinearity"]),
        gamma=data["gamma"])


def save_system(sys: SystemSpec, path) -> None:
    with open(path, "w") as f:
        json.dump(system_to_dict(sys), f, indent=2)
        f.write("\n")


def load_system(path) -> SystemSpec:
    with open(path) as f:
        return system_from_dict(json.load(f))


def disturbance_to_dict(dist: DisturbanceSpec) -> dict:
    out = {"kind": dist.kind, "d_dim": dist.d_dim}
    if dist.kind == DIST_CONSTANT:
        out["value"] = dist.amplitude.tolist()
    elif dist.kind == DIST_DAMPED_SINE:
        out.update(amplitude=dist.amplitude.tolist(), decay=dist.decay,
                   omega=dist.omega)
    elif dist.kind == DIST_SAMPLED:
        out.update(times=dist.times.tolist(), values=dist.values.tolist())
    return out


def disturbance_from_dict(data: dict) -> DisturbanceSpec:
    kind = data["kind"]
    if kind == DIST_ZERO:
        return DisturbanceSpec.zero(data["d_dim"])
    if kind == DIST_CONSTANT:
        return DisturbanceSpec.constant(data["value"])
    if kind == DIST_DAMPED_SINE:
        return DisturbanceSpec.damped_sine(data["amplitude"], data["decay"],
                                           data["omega"], data.get("d_dim"))
    if kind == DIST_SAMPLED:
        return DisturbanceSpec.sampled(data["times"], data["values"])
    raise ValueError(f"unknown disturbance kind {kind!r}")


def control_to_dict(ctrl: ControlSpec) -> dict:
    out = {"kind": ctrl.kind, "p": ctrl.p}
    if ctrl.kind == CTRL_INTEGRAL:
        out["K1"] = ctrl.K1.tolist()
    return out


def control_from_dict(data: dict) -> ControlSpec:
    if data["kind"] == CTRL_ZERO:
        return ControlSpec.zero(data["p"])
    return ControlSpec.integral_state_feedback(data["K1"])
