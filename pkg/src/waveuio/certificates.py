"""Certificate checks for observer-error stability and H-infinity performance.

Asymptotic stability of the observer error is certified by a quadratic
Lyapunov functional parameterized by (P, Gamma, delta); the conditions are
negative definiteness of a 2n-by-2n block matrix (built by
:func:`stability_block`), of the state-decay matrix
``-delta P D1 + delta P^2 + gamma^2 T^T T``, of ``Gamma - I``, and an
admissibility ceiling on delta.  Disturbance attenuation at level mu is
certified by the larger (3n+d)-by-(3n+d) block matrix built by
:func:`hinf_block`.  All definiteness decisions use symmetric eigenvalue
computations; :func:`search_certificate` scans a scalar family
P = p I, Gamma = g I for a feasible certificate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import Certificate, ObserverSpec, SystemSpec

# Negative definiteness gate: max eigenvalue below -ND_RTOL * (1 + ||S||_F).
# Strict inequalities are required, so a zero eigenvalue fails.
ND_RTOL = 1e-12


def _sym(S):
    return 0.5 * (S + S.T)


def sym_eig_bounds(S) -> tuple[float, float]:
    """Extreme eigenvalues (lambda_min, lambda_max) of the symmetrized S."""
    S = np.asarray(S, float)
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix has non-finite entries")
    w = np.linalg.eigvalsh(_sym(S))
    return float(w[0]), float(w[-1])


def _neg_def(S) -> tuple[bool, float]:
    """(verdict, max eigenvalue) of the negative-definiteness test."""
    _, hi = sym_eig_bounds(S)
    return hi < -ND_RTOL * (1.0 + np.linalg.norm(S)), hi


def delta_bound(P, D1) -> float:
    """Admissible ceiling for delta,
    ``min(lambda_min(P)/lambda_max(P), lambda_min(P D1)/lambda_max(P))``.

    P and D1 must be symmetric positive definite; the product P D1 is
    symmetrized before its eigenvalues are taken.
    """
    P = np.asarray(P, float)
    D1 = np.asarray(D1, float)
    pmin, pmax = sym_eig_bounds(P)
    dmin, _ = sym_eig_bounds(D1)
    if pmin <= 0 or dmin <= 0:
        raise ValueError("P and D1 must be positive definite")
    pd1min, _ = sym_eig_bounds(P @ D1)
    return min(pmin / pmax, pd1min / pmax)


def stability_block(P, B1, M, Gamma, delta: float) -> np.ndarray:
    """2n-by-2n block matrix of the stability condition.

    ``[[-B1^T P - P B1 + delta P + (delta/2) B1^T B1,  P M],
       [M^T P,                    -Gamma + (delta/2) M^T M]]``

    The result is exactly symmetric (symmetrized against roundoff).
    """
    P, B1, M, Gamma = (np.asarray(a, float) for a in (P, B1, M, Gamma))
    if delta <= 0:
        raise ValueError("delta must be positive")
    tl = -(B1.T @ P + P @ B1) + delta * P + 0.5 * delta * (B1.T @ B1)
    br = -Gamma + 0.5 * delta * (M.T @ M)
    out = np.block([[tl, P @ M], [M.T @ P, br]])
    return 0.5 * (out + out.T)


def _state_decay_matrix(P, D1, T, gamma, delta, gain):
    """``-delta sym(P D1) + delta P^2 + gain T^T T`` with gain = gamma^2 for
    the stability check and 1 + gamma^2 for the H-infinity check."""
    return -delta * _sym(P @ D1) + delta * (P @ P) + gain * (T.T @ T)


def hinf_block(sys: SystemSpec, obs: ObserverSpec, cert: Certificate) -> np.ndarray:
    """(3n+d)-by-(3n+d) block matrix of the attenuation condition.

    Diagonal blocks (over the partition velocity-error / state-error /
    nonlinearity-increment / disturbance):

    * ``-B1^T P - P B1 + delta P + (delta/2) B1^T B1``
    * ``-delta P D1 + delta P^2 + (1+gamma^2) T^T T``
    * ``-Gamma + (delta/2) M^T M``
    * ``(1+gamma^2) H^T E^T E H - mu^2 I``

    with couplings ``P M`` between blocks 1 and 3 and
    ``(1+gamma^2) T^T E H`` between blocks 2 and 4; exactly symmetric.
    """
    if cert.mu is None:
        raise ValueError("certificate carries no attenuation level mu")
    n, d = sys.n, sys.d_dim
    P, Gamma, delta, mu = cert.P, cert.Gamma, cert.delta, cert.mu
    gain = 1.0 + sys.gamma ** 2
    a11 = -(obs.B1.T @ P + P @ obs.B1) + delta * P \
        + 0.5 * delta * (obs.B1.T @ obs.B1)
    a22 = _state_decay_matrix(P, obs.D1, obs.T, sys.gamma, delta, gain)
    a33 = -Gamma + 0.5 * delta * (obs.M.T @ obs.M)
    eh = obs.E @ sys.H
    a44 = gain * (eh.T @ eh) - mu ** 2 * np.eye(d)
    c13 = P @ obs.M
    c24 = gain * (obs.T.T @ eh)

    m = 3 * n + d
    out = np.zeros((m, m))
    out[0:n, 0:n] = a11
    out[n:2 * n, n:2 * n] = a22
    out[2 * n:3 * n, 2 * n:3 * n] = a33
    out[3 * n:, 3 * n:] = a44
    out[0:n, 2 * n:3 * n] = c13
    out[2 * n:3 * n, 0:n] = c13.T
    out[n:2 * n, 3 * n:] = c24
    out[3 * n:, n:2 * n] = c24.T
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class CertificateReport:
    """Per-condition verdicts with eigenvalue margins.

    A margin is the maximum eigenvalue of the corresponding matrix, so
    negative margins mean the condition holds.  ``stability_max_eig`` and
    ``state_decay_max_eig`` are filled by the stability check,
    ``hinf_max_eig`` by the attenuation check; ``overall`` is the
    conjunction of every condition present.
    """

    delta: float
    delta_bound: float
    delta_ok: bool
    gamma_condition_max_eig: float
    gamma_condition_ok: bool
    stability_max_eig: float | None = None
    stability_ok: bool | None = None
    state_decay_max_eig: float | None = None
    state_decay_ok: bool | None = None
    hinf_max_eig: float | None = None
    hinf_ok: bool | None = None
    mu: float | None = None
    overall: bool = False

    def as_dict(self) -> dict:
        out = {"delta": self.delta, "delta_bound": self.delta_bound,
               "delta_ok": self.delta_ok,
               "gamma_condition_max_eig": self.gamma_condition_max_eig,
               "gamma_condition_ok": self.gamma_condition_ok,
               "overall": self.overall}
        for name in ("stability", "state_decay", "hinf"):
            margin = getattr(self, f"{name}_max_eig")
            if margin is not None:
                out[f"{name}_max_eig"] = margin
                out[f"{name}_ok"] = getattr(self, f"{name}_ok")
        if self.mu is not None:
            out["mu"] = self.mu
        return out

    def worst_margin(self) -> tuple[str, float]:
        """Most-violating condition and its margin (delta measured as
        delta - delta_bound)."""
        margins = {"gamma_condition": self.gamma_condition_max_eig,
                   "delta_bound": self.delta - self.delta_bound}
        for name in ("stability", "state_decay", "hinf"):
            val = getattr(self, f"{name}_max_eig")
            if val is not None:
                margins[name] = val
        name = max(margins, key=lambda k: margins[k])
        return name, margins[name]


def _shared_conditions(sys, obs, cert):
    gc_ok, gc_max = _neg_def(cert.Gamma - np.eye(sys.n))
    bound = delta_bound(cert.P, obs.D1)
    return gc_ok, gc_max, bound, cert.delta < bound


def check_stability(sys: SystemSpec, obs: ObserverSpec,
                    cert: Certificate) -> CertificateReport:
    """Check the asymptotic-stability certificate (disturbance-free case).

    Verdicts, each with its maximum eigenvalue as margin: the 2n-by-2n
    stability block, the state-decay matrix, Gamma - I, and the strict
    bound delta < delta_bound(P, D1).
    """
    gc_ok, gc_max, bound, delta_ok = _shared_conditions(sys, obs, cert)
    st_ok, st_max = _neg_def(
        stability_block(cert.P, obs.B1, obs.M, cert.Gamma, cert.delta))
    sd_ok, sd_max = _neg_def(_state_decay_matrix(
        cert.P, obs.D1, obs.T, sys.gamma, cert.delta, sys.gamma ** 2))
    return CertificateReport(
        delta=cert.delta, delta_bound=bound, delta_ok=delta_ok,
        gamma_condition_max_eig=gc_max, gamma_condition_ok=gc_ok,
        stability_max_eig=st_max, stability_ok=st_ok,
        state_decay_max_eig=sd_max, state_decay_ok=sd_ok,
        overall=st_ok and sd_ok and gc_ok and delta_ok)


def check_hinf(sys: SystemSpec, obs: ObserverSpec,
               cert: Certificate) -> CertificateReport:
    """Check the H-infinity certificate at attenuation level cert.mu."""
    gc_ok, gc_max, bound, delta_ok = _shared_conditions(sys, obs, cert)
    h_ok, h_max = _neg_def(hinf_block(sys, obs, cert))
    return CertificateReport(
        delta=cert.delta, delta_bound=bound, delta_ok=delta_ok,
        gamma_condition_max_eig=gc_max, gamma_condition_ok=gc_ok,
        hinf_max_eig=h_max, hinf_ok=h_ok, mu=cert.mu,
        overall=h_ok and gc_ok and delta_ok)


def _full_report(sys, obs, cert) -> CertificateReport:
    """Both checks merged into one report (used by the search)."""
    gc_ok, gc_max, bound, delta_ok = _shared_conditions(sys, obs, cert)
    st_ok, st_max = _neg_def(
        stability_block(cert.P, obs.B1, obs.M, cert.Gamma, cert.delta))
    sd_ok, sd_max = _neg_def(_state_decay_matrix(
        cert.P, obs.D1, obs.T, sys.gamma, cert.delta, sys.gamma ** 2))
    h_ok, h_max = _neg_def(hinf_block(sys, obs, cert))
    return CertificateReport(
        delta=cert.delta, delta_bound=bound, delta_ok=delta_ok,
        gamma_condition_max_eig=gc_max, gamma_condition_ok=gc_ok,
        stability_max_eig=st_max, stability_ok=st_ok,
        state_decay_max_eig=sd_max, state_decay_ok=sd_ok,
        hinf_max_eig=h_max, hinf_ok=h_ok, mu=cert.mu,
        overall=st_ok and sd_ok and gc_ok and delta_ok and h_ok)


@dataclass(frozen=True)
class CertificateSearchResult:
    """Best point of the grid search.  When ``feasible`` the certificate
    passes both checks and minimizes mu; otherwise it is the least-violating
    point and ``blocking_condition`` names its worst condition."""

    feasible: bool
    certificate: Certificate
    report: CertificateReport
    blocking_condition: str | None = None
    n_evaluated: int = 0


def search_certificate(sys: SystemSpec, obs: ObserverSpec,
                       p_range, gamma_range, delta_range, mu_range,
                       grid_points: int = 20) -> CertificateSearchResult:
    """Grid-scan the scalar certificate family P = p I, Gamma = g I.

    Scans the Cartesian grid over (p, g, delta, mu) with ``grid_points``
    points per axis (an int, or a 4-tuple per axis).  Among passing points
    the one with the smallest mu wins; ties are broken by the most negative
    attenuation-block eigenvalue.  The scan is deterministic.  Two provable
    shortcuts keep it fast without changing the result: the attenuation
    block is monotone in mu (its maximum eigenvalue is nonincreasing, so
    the first passing mu per (p, g, delta) is the smallest), and a point
    whose mu-independent conditions already fail cannot pass for any mu.
    """
    ranges = {"p": p_range, "gamma": gamma_range, "delta": delta_range,
              "mu": mu_range}
    if isinstance(grid_points, int):
        grid_points = (grid_points,) * 4
    grids = {}
    for (name, rng), npts in zip(ranges.items(), grid_points):
        lo, hi = float(rng[0]), float(rng[1])
        if lo <= 0 or hi < lo:
            raise ValueError(f"{name} range must be positive and ordered")
        if npts < 2:
            raise ValueError("grid sizes must be >= 2")
        grids[name] = np.linspace(lo, hi, npts)

    eye = np.eye(sys.n)
    best = None        # (mu, hinf_max_eig, certificate, report)
    least_bad = None   # (worst margin, certificate, report, condition)
    n_eval = 0
    mu_grid = grids["mu"]
    for pv in grids["p"]:
        for gv in grids["gamma"]:
            for dv in grids["delta"]:
                base = check_stability(sys, obs,
                                       Certificate(pv * eye, gv * eye, dv))
                mus = mu_grid if base.overall else mu_grid[-1:]
                for mv in mus:
                    rep = _full_report(sys, obs,
                                       Certificate(pv * eye, gv * eye, dv, mv))
                    n_eval += 1
                    if rep.overall:
                        key = (mv, rep.hinf_max_eig)
                        if best is None or key < (best[0], best[1]):
                            best = (mv, rep.hinf_max_eig,
                                    Certificate(pv * eye, gv * eye, dv, mv),
                                    rep)
                        break
                    cond, margin = rep.worst_margin()
                    if least_bad is None or margin < least_bad[0]:
                        least_bad = (margin,
                                     Certificate(pv * eye, gv * eye, dv, mv),
                                     rep, cond)

    if best is not None:
        return CertificateSearchResult(True, best[2], best[3],
                                       n_evaluated=n_eval)
    return CertificateSearchResult(False, least_bad[1], least_bad[2],
                                   blocking_condition=least_bad[3],
                                   n_evaluated=n_eval)


# ---------------------------------------------------------------------------
# certificate.json

def certificate_to_dict(cert: Certificate,
                        report: CertificateReport | None = None) -> dict:
    out = {"P": cert.P.tolist(), "Gamma": cert.Gamma.tolist(),
           "delta": cert.delta}
    if cert.mu is not None:
        out["mu"] = cert.mu
    if report is not None:
        out["report"] = report.as_dict()
    return out


def certificate_from_dict(data: dict) -> Certificate:
    return Certificate(data["P"], data["Gamma"], data["delta"],
                       data.get("mu"))


def save_certificate(cert: Certificate, path, report=None) -> None:
    with open(path, "w") as f:
        json.dump(certificate_to_dict(cert, report), f, indent=2)
        f.write("\n")


def load_certificate(path) -> Certificate:
    with open(path) as f:
        return certificate_from_dict(json.load(f))
