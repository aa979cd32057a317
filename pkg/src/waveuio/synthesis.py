"""Observer synthesis for the coupled wave plant.

The observer matrices must satisfy eight coupled algebraic equations
(commutation of A1/B1/D1 with M against A/B/D, cancellation of the unknown
input through L H = M F, cancellation of the known input and of the output
averaging through L K + G1 = M G, Q = -L K and L C = 0, and invertibility
through T M = I).  The general problem is bilinear; :func:`solve_scalar_m`
restricts M to a scalar multiple of the identity, which turns the remaining
constraints into one homogeneous linear system in (vec(L), alpha) that is
solved by a null-space computation.  :func:`verify_equations` checks any
candidate observer by direct substitution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import ObserverSpec, SystemSpec

# Singular values below NULLSPACE_RTOL * sigma_max count as zero when
# deciding numerical rank.
NULLSPACE_RTOL = 1e-10
# Minimum weight of the alpha coordinate inside the (orthonormal) null-space
# basis for the scalar-M family to be considered nonempty.
ALPHA_COMPONENT_TOL = 1e-9


class SynthesisInfeasible(Exception):
    """No observer exists within the searched family."""

    def __init__(self, message, nullspace_dim=0):
        super().__init__(message)
        self.nullspace_dim = nullspace_dim


@dataclass(frozen=True)
class ResidualReport:
    """Frobenius norms of the eight observer equations, by equation."""

    a1m_ma: float
    b1m_mb: float
    d1m_md: float
    lh_mf: float
    lk_g1_mg: float
    q_lk: float
    lc: float
    tm_i: float

    @property
    def max_residual(self) -> float:
        return max(self.as_dict().values())

    def as_dict(self) -> dict:
        return {"A1M-MA": self.a1m_ma, "B1M-MB": self.b1m_mb,
                "D1M-MD": self.d1m_md, "LH-MF": self.lh_mf,
                "LK+G1-MG": self.lk_g1_mg, "Q+LK": self.q_lk,
                "LC": self.lc, "TM-I": self.tm_i}


@dataclass(frozen=True)
class SynthesisSolution:
    """Result of :func:`solve_scalar_m`: the assembled observer, the chosen
    scalar alpha (M = alpha I), the dimension of the constraint null space
    and the residuals of the assembled observer."""

    observer: ObserverSpec
    alpha: float
    nullspace_dim: int
    residuals: ResidualReport


def left_nullspace(Cmat, tol: float = NULLSPACE_RTOL) -> np.ndarray:
    """Orthonormal basis of the left null space {x : x^T C = 0}.

    Parameters
    ----------
    Cmat : (q, n) array_like
    tol : float
        Relative singular-value cutoff for the rank decision.

    Returns
    -------
    (q, k) ndarray with k = q - rank(Cmat); the basis vectors are the
    columns.
    """
    Cmat = np.atleast_2d(np.asarray(Cmat, float))
    if not np.all(np.isfinite(Cmat)):
        raise ValueError("matrix has non-finite entries")
    _, s, vh = np.linalg.svd(Cmat.T)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return vh[rank:].T


def verify_equations(sys: SystemSpec, obs: ObserverSpec) -> ResidualReport:
    """Residuals of the eight observer equations by direct substitution."""
    n = sys.n
    frob = np.linalg.norm
    return ResidualReport(
        a1m_ma=frob(obs.A1 @ obs.M - obs.M @ sys.A),
        b1m_mb=frob(obs.B1 @ obs.M - obs.M @ sys.B),
        d1m_md=frob(obs.D1 @ obs.M - obs.M @ sys.D),
        lh_mf=frob(obs.L @ sys.H - obs.M @ sys.F),
        lk_g1_mg=frob(obs.L @ sys.K + obs.G1 - obs.M @ sys.G),
        q_lk=frob(obs.Q + obs.L @ sys.K),
        lc=frob(obs.L @ sys.C),
        tm_i=frob(obs.T @ obs.M - np.eye(n)),
    )


def solve_scalar_m(sys: SystemSpec, alpha_scale: float = 1.0) -> SynthesisSolution:
    """Solve the observer equations under the restriction M = alpha I.

    With a scalar M the commutation equations collapse to A1 = A, B1 = B,
    D1 = D and T = (1/alpha) I, leaving the homogeneous linear system

        L C = 0,    L H = alpha F

    in the unknowns (vec(L), alpha).  The system is stacked into a single
    coefficient matrix whose null space is computed by SVD.  Within the
    null space the unit vector with the largest |alpha| component is
    selected (this maximizes the invertibility margin of M and does not
    depend on the arbitrary rotation of the computed basis) and rescaled so
    that alpha equals ``alpha_scale``.  The remaining matrices follow as
    E = L, Q = -L K and G1 = alpha G - L K.

    Raises
    ------
    SynthesisInfeasible
        If the null space is trivial or contains no direction with a
        nonzero alpha component.
    """
    if alpha_scale == 0:
        raise ValueError("alpha_scale must be nonzero")
    n, q, d = sys.n, sys.q, sys.d_dim
    # Row-major vec: vec(L C) = (I kron C^T) vec(L), likewise for H.
    block_c = np.hstack([np.kron(np.eye(n), sys.C.T), np.zeros((n * n, 1))])
    block_h = np.hstack([np.kron(np.eye(n), sys.H.T),
                         -sys.F.reshape(n * d, 1)])
    S = np.vstack([block_c, block_h])

    _, svals, vh = np.linalg.svd(S)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > NULLSPACE_RTOL * smax)) if smax > 0 else 0
    basis = vh[rank:].T                      # (n*q + 1, k), orthonormal
    k = basis.shape[1]
    if k == 0:
        raise SynthesisInfeasible(
            "no scalar-M observer exists: the constraint system has a "
            "trivial null space", nullspace_dim=0)
    alpha_row = basis[-1]
    weight = float(np.linalg.norm(alpha_row))
    if weight <= ALPHA_COMPONENT_TOL:
        raise SynthesisInfeasible(
            f"no scalar-M observer exists: every null-space direction has "
            f"alpha = 0 (null space dimension {k})", nullspace_dim=k)
    vec = basis @ (alpha_row / weight)       # unit null vector, alpha = weight
    L = (alpha_scale / weight) * vec[:-1].reshape(n, q)

    eye = np.eye(n)
    observer = ObserverSpec(
        A1=sys.A, B1=sys.B, D1=sys.D,
        M=alpha_scale * eye, T=eye / alpha_scale,
        G1=alpha_scale * sys.G - L @ sys.K,
        L=L, E=L, Q=-L @ sys.K)
    return SynthesisSolution(observer=observer, alpha=float(alpha_scale),
                             nullspace_dim=k,
                             residuals=verify_equations(sys, observer))


def derive_observer_initial(what0, what1, obs: ObserverSpec, u0, y0):
    """Initial observer state from initial estimate fields.

    Inverts the output map of the observer at t = 0:
    ``z0 = M (what0 - Q u0 - E y0)`` pointwise in x and ``z1 = M what1``
    (the input/output rate contributions to z1 are neglected).
    """
    what0 = np.atleast_2d(np.asarray(what0, float))
    what1 = np.atleast_2d(np.asarray(what1, float))
    svals = np.linalg.svd(obs.M, compute_uv=False)
    if svals[-1] <= 1e-12 * svals[0]:
        raise ValueError("observer matrix M is singular")
    u0 = np.atleast_1d(np.asarray(u0, float))
    y0 = np.atleast_1d(np.asarray(y0, float))
    shift = obs.Q @ u0 + obs.E @ y0
    z0 = obs.M @ (what0 - shift[:, None])
    z1 = obs.M @ what1
    return z0, z1


# ---------------------------------------------------------------------------
# observer.json

def observer_to_dict(obs: ObserverSpec, alpha: float | None = None,
                     residuals: ResidualReport | None = None) -> dict:
    out = {name: getattr(obs, name).tolist()
           for name in ("A1", "B1", "D1", "M", "T", "G1", "L", "E", "Q")}
    if alpha is not None:
        out["alpha"] = alpha
    if residuals is not None:
        out["residuals"] = residuals.as_dict()
        out["max_residual"] = residuals.max_residual
    return out


def observer_from_dict(data: dict) -> ObserverSpec:
    return ObserverSpec(**{name: data[name]
                           for name in ("A1", "B1", "D1", "M", "T",
                                        "G1", "L", "E", "Q")})


def save_observer(obs: ObserverSpec, path, alpha=None, residuals=None) -> None:
    with open(path, "w") as f:
        json.dump(observer_to_dict(obs, alpha, residuals), f, indent=2)
        f.write("\n")


def load_observer(path) -> ObserverSpec:
    with open(path) as f:
        return observer_from_dict(json.load(f))
