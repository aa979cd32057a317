"""Method-of-lines co-simulation of the plant and its observer.

Space is discretized on the uniform grid x_i = i/N, i = 0..N, with
second-order central differences.  Boundary conditions are imposed through
ghost points so the boundary stencils stay second order: the plant obeys
``w_x(0,t) = C1 w_t(0,t)`` and ``w_x(1,t) = 0``, the observer obeys
``z_x(0,t) = M w_x(0,t)`` and ``z_x(1,t) = 0``, realized with the simulated
plant's boundary velocity (boundary measurements are assumed available).
Time stepping is classical fourth-order Runge-Kutta on the stacked state
(w, w_t, z, z_t); the shared signals u, y and the estimate field are
recomputed inside every stage from that stage's own fields, so the coupled
pair is one well-defined ODE right-hand side.

Per step the simulation records the L2 norms of the estimation error
e = what - w and of the transformation error eps = z - M w, the Lyapunov
energy (when a certificate is supplied), and running time integrals of
|e|^2 and |d|^2 whose final quotient is the empirical attenuation ratio.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .certificates import delta_bound, sym_eig_bounds
from .model import (Certificate, ControlSpec, DisturbanceSpec, InitialData,
                    ObserverSpec, SystemSpec, CTRL_INTEGRAL,
                    eval_disturbance, eval_nonlinearity)
from .synthesis import derive_observer_initial

# Explicit-RK stability budget on the imaginary axis; the Courant number
# 2 sqrt(lambda_max(A)) dt N is compared against this.
CFL_LIMIT = 2.8
DIVERGENCE_LIMIT = 1e8


class DivergenceError(RuntimeError):
    """The simulated fields left the trusted range."""


@dataclass(frozen=True)
class GridConfig:
    """Space/time resolution: nx subintervals (nx+1 grid points), time step
    dt, final time tfinal.  ``snapshot_stride`` controls how often full
    field snapshots are kept.  ``cfl_override`` silences the Courant check
    (the CLI refuses to run above the limit without it)."""

    nx: int
    dt: float
    tfinal: float
    snapshot_stride: int = 10
    cfl_override: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "snapshot_stride", int(self.snapshot_stride))
        if self.nx < 4:
            raise ValueError("nx must be >= 4")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.tfinal < self.dt:
            raise ValueError("tfinal must be >= dt")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def npts(self) -> int:
        return self.nx + 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.npts)

    @property
    def nsteps(self) -> int:
        return int(round(self.tfinal / self.dt))

    def courant_number(self, A) -> float:
        """``2 sqrt(lambda_max(A)) dt / h``, the spectral radius of the
        semi-discrete wave operator scaled by dt."""
        _, lam_max = sym_eig_bounds(A)
        return 2.0 * np.sqrt(max(lam_max, 0.0)) * self.dt * self.nx


@dataclass(frozen=True)
class SimState:
    """Plant fields (w, v = w_t) and observer fields (z, zeta = z_t) at
    time t; every field has shape (n, npts)."""

    w: np.ndarray
    v: np.ndarray
    z: np.ndarray
    zeta: np.ndarray
    t: float


@dataclass(frozen=True)
class Snapshot:
    t: float
    w: np.ndarray
    what: np.ndarray
    e: np.ndarray


@dataclass
class SimResult:
    """Recorded time series of a run.

    ``xi``/``xi_quad`` are filled only when a certificate was supplied:
    ``xi`` is the Lyapunov energy and ``xi_quad`` the comparison quadratic
    ``|eps_x|^2 + |eps_t|^2 + |eps|^2`` (squared L2 norms) used by the
    sandwich bounds.  ``hinf_ratio`` is None when the disturbance carries
    no energy.
    """

    times: np.ndarray
    e_norm: np.ndarray
    eps_norm: np.ndarray
    d_norm: np.ndarray
    int_e_sq: np.ndarray
    int_d_sq: np.ndarray
    xi: np.ndarray | None = None
    xi_quad: np.ndarray | None = None
    snapshots: list = field(default_factory=list)
    hinf_ratio: float | None = None
    grid: GridConfig | None = None


def trapezoid_integral(field) -> np.ndarray | float:
    """Composite trapezoid rule over [0, 1] on the uniform grid.

    ``field`` is (n, npts) (integrated per component, returns length n) or
    (npts,) (returns a scalar)."""
    field = np.asarray(field, float)
    npts = field.shape[-1]
    h = 1.0 / (npts - 1)
    wts = np.full(npts, h)
    wts[0] = wts[-1] = 0.5 * h
    out = field @ wts
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def l2_norm(field) -> float:
    """L2(0,1) norm of a vector field sampled on the grid."""
    field = np.atleast_2d(np.asarray(field, float))
    return float(np.sqrt(trapezoid_integral(np.sum(field * field, axis=0))))


def _second_derivative(field, h, left_slope, right_slope):
    """Central second derivative with ghost points eliminated through the
    boundary slopes field_x(0) = left_slope, field_x(1) = right_slope."""
    out = np.empty_like(field)
    out[:, 1:-1] = (field[:, 2:] - 2.0 * field[:, 1:-1] + field[:, :-2]) / h ** 2
    out[:, 0] = (2.0 * field[:, 1] - 2.0 * field[:, 0]
                 - 2.0 * h * left_slope) / h ** 2
    out[:, -1] = (2.0 * field[:, -2] - 2.0 * field[:, -1]
                  + 2.0 * h * right_slope) / h ** 2
    return out


def control_input(control: ControlSpec, w) -> np.ndarray:
    """Known input u(t); the integral feedback uses the trapezoid average
    of the current plant field."""
    if control.kind == CTRL_INTEGRAL:
        return -control.K1 @ trapezoid_integral(w)
    return np.zeros(control.p)


def measured_output(sys: SystemSpec, w, u, d) -> np.ndarray:
    """y(t) = C int w dx + K u + H d."""
    return sys.C @ trapezoid_integral(w) + sys.K @ u + sys.H @ d


def estimate_field(obs: ObserverSpec, z, u, y) -> np.ndarray:
    """what = T z + Q u + E y, pointwise in x."""
    return obs.T @ z + (obs.Q @ u + obs.E @ y)[:, None]


def _plant_derivs(w, v, sys, u, d):
    h = 1.0 / (w.shape[1] - 1)
    wxx = _second_derivative(w, h, sys.C1 @ v[:, 0], np.zeros(sys.n))
    vdot = (sys.A @ wxx - sys.B @ v - sys.D @ w
            + eval_nonlinearity(sys.nonlinearity, w)
            + (sys.G @ u + sys.F @ d)[:, None])
    return v, vdot


def _observer_derivs(z, zeta, v_plant, sys, obs, u, y):
    h = 1.0 / (z.shape[1] - 1)
    what = estimate_field(obs, z, u, y)
    # z_x(0,t) = M w_x(0,t) with w_x(0,t) = C1 w_t(0,t) from the plant.
    left = obs.M @ (sys.C1 @ v_plant[:, 0])
    zxx = _second_derivative(z, h, left, np.zeros(z.shape[0]))
    zetadot = (obs.A1 @ zxx - obs.B1 @ zeta - obs.D1 @ z
               + obs.M @ eval_nonlinearity(sys.nonlinearity, what)
               + (obs.G1 @ u + obs.L @ y)[:, None])
    return zeta, zetadot


def plant_rhs(state: SimState, sys: SystemSpec, control: ControlSpec,
              dist: DisturbanceSpec, t: float):
    """Time derivatives (w_t, w_tt) of the plant fields."""
    u = control_input(control, state.w)
    d = eval_disturbance(dist, t)
    return _plant_derivs(state.w, state.v, sys, u, d)


def observer_rhs(state: SimState, sys: SystemSpec, obs: ObserverSpec,
                 control: ControlSpec, dist: DisturbanceSpec, t: float):
    """Time derivatives (z_t, z_tt) of the observer fields, driven by the
    plant's measured output."""
    u = control_input(control, state.w)
    d = eval_disturbance(dist, t)
    y = measured_output(sys, state.w, u, d)
    return _observer_derivs(state.z, state.zeta, state.v, sys, obs, u, y)


def rk4_step(state, rhs, t: float, dt: float, step: int | None = None):
    """One classical four-stage Runge-Kutta step of ``d state/dt = rhs(t,
    state)`` on an ndarray state."""
    k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * dt, state + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, state + 0.5 * dt * k2)
    k4 = rhs(t + dt, state + dt * k3)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        where = "" if step is None else f" at step {step}"
        raise DivergenceError(f"non-finite state{where} (t = {t + dt:g})")
    return out


def lyapunov_energy(state: SimState, obs: ObserverSpec,
                    cert: Certificate) -> float:
    """Lyapunov energy of the transformation error eps = z - M w:

    ``1/2 int eps_x^T P A1 eps_x + 1/2 int eps_t^T P eps_t
      + delta int eps^T P eps_t + 1/2 int eps^T P D1 eps``

    eps_x uses centered differences (second-order one-sided at the ends),
    the integrals use the trapezoid rule.
    """
    eps = state.z - obs.M @ state.w
    eps_t = state.zeta - obs.M @ state.v
    h = 1.0 / (eps.shape[1] - 1)
    eps_x = np.gradient(eps, h, axis=1, edge_order=2)
    P = cert.P
    dens = (0.5 * np.einsum("ix,ij,jx->x", eps_x, P @ obs.A1, eps_x)
            + 0.5 * np.einsum("ix,ij,jx->x", eps_t, P, eps_t)
            + cert.delta * np.einsum("ix,ij,jx->x", eps, P, eps_t)
            + 0.5 * np.einsum("ix,ij,jx->x", eps, P @ obs.D1, eps))
    return float(trapezoid_integral(dens))


def _energy_quadratic(state, obs):
    """|eps_x|^2 + |eps_t|^2 + |eps|^2, the quadratic sandwiched by the
    energy via the constants of :func:`sandwich_constants`."""
    eps = state.z - obs.M @ state.w
    eps_t = state.zeta - obs.M @ state.v
    h = 1.0 / (eps.shape[1] - 1)
    eps_x = np.gradient(eps, h, axis=1, edge_order=2)
    return l2_norm(eps_x) ** 2 + l2_norm(eps_t) ** 2 + l2_norm(eps) ** 2


def sandwich_constants(obs: ObserverSpec, cert: Certificate) -> tuple[float, float]:
    """Coercivity and boundedness constants (c_lower, c_upper) relating the
    Lyapunov energy to the squared error norms.  Requires delta below
    :func:`waveuio.certificates.delta_bound`; matrix products are
    symmetrized before the eigenvalue solves."""
    bound = delta_bound(cert.P, obs.D1)
    if not cert.delta < bound:
        raise ValueError(f"delta {cert.delta} violates the admissible "
                         f"bound {bound}")
    pa1_min, pa1_max = sym_eig_bounds(cert.P @ obs.A1)
    p_min, p_max = sym_eig_bounds(cert.P)
    pd1_min, pd1_max = sym_eig_bounds(cert.P @ obs.D1)
    dlm = cert.delta * p_max
    c_lower = min(pa1_min / 2, (p_min - dlm) / 2, (pd1_min - dlm) / 2)
    c_upper = max(pa1_max / 2, (p_max + dlm) / 2, (pd1_max + dlm) / 2)
    return c_lower, c_upper


def _resolve_initial_state(sys, obs, ic, control, dist, npts):
    for name in ("w0", "w1"):
        if getattr(ic, name).shape != (sys.n, npts):
            raise ValueError(f"initial field {name}: expected shape "
                             f"{(sys.n, npts)}, got {getattr(ic, name).shape}")
    if ic.observer_form == "z":
        return ic.z0.copy(), ic.z1.copy()
    u0 = control_input(control, ic.w0)
    d0 = eval_disturbance(dist, 0.0)
    y0 = measured_output(sys, ic.w0, u0, d0)
    return derive_observer_initial(ic.what0, ic.what1, obs, u0, y0)


def simulate(sys: SystemSpec, obs: ObserverSpec, ic: InitialData,
             control: ControlSpec, dist: DisturbanceSpec, grid: GridConfig,
             cert: Certificate | None = None) -> SimResult:
    """Co-simulate plant and observer from t = 0 to grid.tfinal.

    Records per step the L2 norms of e = what - w and eps = z - M w, the
    Lyapunov energy (when ``cert`` is given), |d(t)|, and the running
    trapezoid integrals of |e|^2 and |d|^2 in time.  Field snapshots are
    kept every ``grid.snapshot_stride`` steps.  Raises
    :class:`DivergenceError` when any field magnitude exceeds 1e8.
    """
    npts = grid.nx + 1
    z0, z1 = _resolve_initial_state(sys, obs, ic, control, dist, npts)
    if z0.shape != (sys.n, npts) or z1.shape != (sys.n, npts):
        raise ValueError("observer initial fields do not match the grid")

    nu = grid.courant_number(sys.A)
    if nu > CFL_LIMIT and not grid.cfl_override:
        warnings.warn(f"Courant number {nu:.3f} exceeds {CFL_LIMIT}; the "
                      f"explicit time stepper may be unstable", stacklevel=2)

    def rhs(t, y):
        w, v, z, zeta = y
        u = control_input(control, w)
        d = eval_disturbance(dist, t)
        yout = measured_output(sys, w, u, d)
        _, vdot = _plant_derivs(w, v, sys, u, d)
        _, zetadot = _observer_derivs(z, zeta, v, sys, obs, u, yout)
        return np.stack([v, vdot, zeta, zetadot])

    nsteps = grid.nsteps
    times = np.arange(nsteps + 1) * grid.dt
    e_norm = np.zeros(nsteps + 1)
    eps_norm = np.zeros(nsteps + 1)
    d_norm = np.zeros(nsteps + 1)
    int_e_sq = np.zeros(nsteps + 1)
    int_d_sq = np.zeros(nsteps + 1)
    xi = np.zeros(nsteps + 1) if cert is not None else None
    xi_quad = np.zeros(nsteps + 1) if cert is not None else None
    snapshots = []

    state = np.stack([np.asarray(ic.w0, float), np.asarray(ic.w1, float),
                      z0, z1])

    def record(k, t, y):
        w, v, z, zeta = y
        u = control_input(control, w)
        d = eval_disturbance(dist, t)
        yout = measured_output(sys, w, u, d)
        what = estimate_field(obs, z, u, yout)
        e = what - w
        eps = z - obs.M @ w
        e_norm[k] = l2_norm(e)
        eps_norm[k] = l2_norm(eps)
        d_norm[k] = float(np.linalg.norm(d))
        if cert is not None:
            st = SimState(w, v, z, zeta, t)
            xi[k] = lyapunov_energy(st, obs, cert)
            xi_quad[k] = _energy_quadratic(st, obs)
        if k > 0:
            half = 0.5 * grid.dt
            int_e_sq[k] = int_e_sq[k - 1] + half * (e_norm[k - 1] ** 2
                                                    + e_norm[k] ** 2)
            int_d_sq[k] = int_d_sq[k - 1] + half * (d_norm[k - 1] ** 2
                                                    + d_norm[k] ** 2)
        if k % grid.snapshot_stride == 0:
            snapshots.append(Snapshot(t, w.copy(), what.copy(), e.copy()))

    record(0, 0.0, state)
    for k in range(1, nsteps + 1):
        state = rk4_step(state, rhs, times[k - 1], grid.dt, step=k)
        record(k, times[k], state)
        if max(e_norm[k], eps_norm[k], float(np.max(np.abs(state)))) \
                > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"field norm exceeded {DIVERGENCE_LIMIT:g} at step {k} "
                f"(t = {times[k]:g})")

    ratio = None
    if int_d_sq[-1] > 0.0:
        ratio = float(int_e_sq[-1] / int_d_sq[-1])
    return SimResult(times=times, e_norm=e_norm, eps_norm=eps_norm,
                     d_norm=d_norm, int_e_sq=int_e_sq, int_d_sq=int_d_sq,
                     xi=xi, xi_quad=xi_quad, snapshots=snapshots,
                     hinf_ratio=ratio, grid=grid)


def hinf_ratio(result: SimResult) -> float:
    """Empirical attenuation ratio ``int |e|^2 dt / int |d|^2 dt`` over the
    recorded horizon.  Undefined (raises) when the disturbance carries no
    energy."""
    if result.int_d_sq[-1] <= 0.0:
        raise ValueError("ratio undefined for d = 0")
    return float(result.int_e_sq[-1] / result.int_d_sq[-1])


# ---------------------------------------------------------------------------
# CSV output.  repr() of Python floats gives shortest round-trip decimals,
# which also makes the files byte-reproducible across runs.

SERIES_HEADER = "t,e_norm,eps_norm,xi,d_norm,int_e_sq,int_d_sq"
SNAPSHOTS_HEADER = "t,x,comp,w,what,e"


def _fmt(v) -> str:
    return repr(float(v))


def write_series_csv(result: SimResult, path) -> None:
    """One row per time step with the documented series header; the xi
    column is ``nan`` when no certificate was supplied."""
    xi = result.xi
    with open(path, "w", newline="\n") as f:
        f.write(SERIES_HEADER + "\n")
        for k in range(result.times.size):
            row = (_fmt(result.times[k]), _fmt(result.e_norm[k]),
                   _fmt(result.eps_norm[k]),
                   _fmt(xi[k]) if xi is not None else "nan",
                   _fmt(result.d_norm[k]), _fmt(result.int_e_sq[k]),
                   _fmt(result.int_d_sq[k]))
            f.write(",".join(row) + "\n")


def write_snapshots_csv(result: SimResult, path) -> None:
    """Long-format field snapshots: one row per (time, grid point,
    component), components numbered from 1."""
    x = result.grid.x if result.grid is not None else None
    with open(path, "w", newline="\n") as f:
        f.write(SNAPSHOTS_HEADER + "\n")
        for snap in result.snapshots:
            n, npts = snap.w.shape
            xs = x if x is not None else np.linspace(0.0, 1.0, npts)
            for comp in range(n):
                for i in range(npts):
                    row = (_fmt(snap.t), _fmt(xs[i]), str(comp + 1),
                           _fmt(snap.w[comp, i]), _fmt(snap.what[comp, i]),
                           _fmt(snap.e[comp, i]))
                    f.write(",".join(row) + "\n")
