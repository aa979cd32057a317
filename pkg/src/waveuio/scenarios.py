"""Built-in benchmark scenarios and scenario-file loading.

The bundled benchmark is a pair of coupled semilinear wave equations
(n = 2, one known input, one unknown input, two outputs) with a sine
nonlinearity of amplitude 0.1 and an integral state feedback.  Three named
scenarios reproduce its standard experiments:

* ``paper-d0``           -- no disturbance, nonzero initial estimation
                            error; the error norm must decay.
* ``paper-dsin``         -- damped-sine disturbance with nonzero initial
                            estimation error.
* ``paper-dsin-zero-e0`` -- the same disturbance but the observer starts
                            exactly on the plant (z = M w at t = 0), the
                            setting in which the attenuation inequality
                            applies.

The built-in scenarios sit marginally above the Courant limit of the
explicit stepper (Courant number 2 sqrt(2) at nx = 100, dt = 0.01) but are
stabilized by the strong damping, so they carry ``cfl_override``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import (Certificate, ControlSpec, DisturbanceSpec, InitialData,
                    NonlinearitySpec, ObserverSpec, SystemSpec,
                    control_from_dict, disturbance_from_dict)
from .certificates import certificate_from_dict
from .wavesim import GridConfig

BUILTIN_SCENARIOS = ("paper-d0", "paper-dsin", "paper-dsin-zero-e0")


def benchmark_system() -> SystemSpec:
    """The two-equation demo plant."""
    return SystemSpec(
        n=2, p=1, q=2, d_dim=1,
        A=2.0 * np.eye(2),
        B=4.0 * np.eye(2),
        D=4.5 * np.eye(2),
        C1=[[0.0, 0.25], [0.25, 0.0]],
        C=[[0.75, -0.75], [-0.75, 0.75]],
        G=[[2.0], [2.0]],
        K=[[-2.0], [-2.0]],
        H=[[0.05], [0.05]],
        F=[[0.1], [-0.1]],
        nonlinearity=NonlinearitySpec("sine", [0.1, 0.1]),
        gamma=0.1)


def benchmark_observer() -> ObserverSpec:
    """The scalar-M observer of the demo plant (alpha = 0.95)."""
    L = np.array([[0.95, 0.95], [-0.95, -0.95]])
    return ObserverSpec(
        A1=2.0 * np.eye(2), B1=4.0 * np.eye(2), D1=4.5 * np.eye(2),
        M=0.95 * np.eye(2), T=(100.0 / 95.0) * np.eye(2),
        G1=[[5.7], [-1.9]], L=L, E=L, Q=[[3.8], [-3.8]])


def benchmark_certificate() -> Certificate:
    """Certificate that passes both checks for the demo pair."""
    return Certificate(P=2.5 * np.eye(2), Gamma=(8.0 / 9.0) * np.eye(2),
                       delta=0.25, mu=0.95)


def benchmark_control() -> ControlSpec:
    return ControlSpec.integral_state_feedback([[0.5, 0.5]])


def benchmark_disturbance() -> DisturbanceSpec:
    return DisturbanceSpec.damped_sine(0.2, 0.4, 0.5 * np.pi)


def _fields_d0(x):
    w0 = np.array([-0.5 * np.cos(2 * np.pi * x) + 0.5,
                   0.5 * x * np.cos(np.pi * x)])
    w1 = np.array([x ** 2 - x, x])
    what0 = np.array([-2.5 * np.cos(2 * np.pi * x) + 2.5,
                      -1.5 * x * np.cos(np.pi * x)])
    what1 = np.array([-x ** 2 - x, -x])
    return w0, w1, what0, what1


def _fields_dsin(x):
    w0 = np.array([x - x ** 2, -x ** 3])
    w1 = np.array([-x ** 2 + 2 * x - 1.0, -x ** 2])
    what0 = np.array([4 * x + 2 * x ** 3 - x ** 2, 0.25 * x ** 3 - x ** 2])
    what1 = np.array([np.zeros_like(x), -x ** 3 + x ** 2])
    return w0, w1, what0, what1


@dataclass(frozen=True)
class Scenario:
    """A fully resolved simulation setup."""

    name: str
    grid: GridConfig
    control: ControlSpec
    disturbance: DisturbanceSpec
    initial: InitialData
    certificate: Certificate | None = None


def builtin_scenario(name: str, observer: ObserverSpec | None = None,
                     nx: int = 100, dt: float = 0.01,
                     tfinal: float | None = None,
                     snapshot_stride: int = 10) -> Scenario:
    """Materialize one of the named benchmark scenarios on a grid.

    ``observer`` is only needed for ``paper-dsin-zero-e0``, whose initial
    observer state is pinned to z = M w (zero transformation error).
    """
    if name not in BUILTIN_SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; "
                         f"built-ins: {', '.join(BUILTIN_SCENARIOS)}")
    if tfinal is None:
        tfinal = 10.0 if name == "paper-d0" else 20.0
    grid = GridConfig(nx=nx, dt=dt, tfinal=tfinal,
                      snapshot_stride=snapshot_stride, cfl_override=True)
    x = grid.x
    if name == "paper-d0":
        w0, w1, what0, what1 = _fields_d0(x)
        dist = DisturbanceSpec.zero(1)
        initial = InitialData(w0, w1, what0=what0, what1=what1)
    else:
        w0, w1, what0, what1 = _fields_dsin(x)
        dist = benchmark_disturbance()
        if name == "paper-dsin":
            initial = InitialData(w0, w1, what0=what0, what1=what1)
        else:
            if observer is None:
                raise ValueError(f"{name} needs the observer to pin "
                                 f"z = M w at t = 0")
            initial = InitialData(w0, w1, z0=observer.M @ w0,
                                  z1=observer.M @ w1)
    return Scenario(name=name, grid=grid, control=benchmark_control(),
                    disturbance=dist, initial=initial,
                    certificate=benchmark_certificate())


def _initial_from_dict(data: dict, observer) -> InitialData:
    kind = data.get("kind", "sampled")
    if kind == "builtin":
        raise ValueError("builtin initial data is resolved by "
                         "load_scenario, not here")
    w0 = np.asarray(data["w0"], float)
    w1 = np.asarray(data["w1"], float)
    if "z0" in data:
        return InitialData(w0, w1, z0=data["z0"], z1=data["z1"])
    return InitialData(w0, w1, what0=data["what0"], what1=data["what1"])


def _grid_from_dict(data: dict, nx=None, dt=None, tfinal=None,
                    override_cfl=None) -> GridConfig:
    return GridConfig(
        nx=nx if nx is not None else data.get("nx", 100),
        dt=dt if dt is not None else data.get("dt", 0.01),
        tfinal=tfinal if tfinal is not None else data.get("tfinal", 10.0),
        snapshot_stride=data.get("snapshot_stride", 10),
        cfl_override=bool(data.get("cfl_override", False)) or bool(override_cfl))


def load_scenario(source, observer: ObserverSpec | None = None,
                  nx: int | None = None, dt: float | None = None,
                  tfinal: float | None = None,
                  override_cfl: bool | None = None) -> Scenario:
    """Resolve a scenario from a built-in name or a scenario JSON file.

    ``nx``/``dt``/``tfinal``/``override_cfl`` override the stored grid.  A
    scenario file may set ``"builtin": <name>`` to start from a built-in
    scenario and override parts of it; or it specifies grid, control,
    disturbance, initial data (sampled arrays or
    ``{"kind": "builtin", "name": ...}``) and an optional certificate.
    """
    name = str(source)
    if name in BUILTIN_SCENARIOS:
        kwargs = {}
        if nx is not None:
            kwargs["nx"] = nx
        if dt is not None:
            kwargs["dt"] = dt
        if tfinal is not None:
            kwargs["tfinal"] = tfinal
        return builtin_scenario(name, observer, **kwargs)

    with open(source) as f:
        data = json.load(f)
    if "builtin" in data:
        g = data.get("grid", {})
        base = builtin_scenario(
            data["builtin"], observer,
            nx=nx if nx is not None else g.get("nx", 100),
            dt=dt if dt is not None else g.get("dt", 0.01),
            tfinal=tfinal if tfinal is not None else g.get("tfinal"),
            snapshot_stride=g.get("snapshot_stride", 10))
        return base

    grid = _grid_from_dict(data.get("grid", {}), nx, dt, tfinal, override_cfl)
    init = data["initial"]
    if init.get("kind") == "builtin":
        ref = builtin_scenario(init["name"], observer, nx=grid.nx,
                               dt=grid.dt, tfinal=grid.tfinal,
                               snapshot_stride=grid.snapshot_stride)
        initial = ref.initial
    else:
        initial = _initial_from_dict(init, observer)
    cert = None
    if "certificate" in data:
        cert = certificate_from_dict(data["certificate"])
    return Scenario(
        name=data.get("name", "custom"),
        grid=grid,
        control=control_from_dict(data["control"]),
        disturbance=disturbance_from_dict(data["disturbance"]),
        initial=initial,
        certificate=cert)
