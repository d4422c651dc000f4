"""Named numerical studies. Each takes a parameter dict and a numpy Generator and
returns a StudyResult with records, pass/fail checks and CSV tables."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .discretize import GridFunction, hardy_remainder_check
from .errors import HardyLabError
from .fields import boundary_quadrature, interpolate
from .geometry import build_graded_mesh, make_tangent_ball
from .halfspace import (
    SpectralParams, alpha_exponents, bump_profile, c_mu, critical_mu, dirac_identity_terms,
    exponent_polynomial, mode_eigenvalue,
)
from .kernels import (
    BoundaryDatum, boundary_bump, eigenpair_for, harmonic_extension, kernel_vanishing_at_origin,
    poisson_dual_identity, poisson_limit, poisson_solution, ratio_profile, singular_dirac_identity,
    singular_kernel_for, system_for,
)
from .spectral import gamma_asymptotics_fit, log_log_fit, ray_samples, weight_pair
from .trace import (
    WeakProblemData, boundary_trace, kato_residual, representation_residual, weak_solution,
)

J01 = 2.404825557695773


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""
    skipped: bool = False

    @property
    def status(self) -> str:
        return "skipped" if self.skipped else ("pass" if self.passed else "fail")

    def as_record(self) -> dict:
        return {"name": self.name, "status": self.status, "value": _num(self.value),
                "threshold": _num(self.threshold), "detail": self.detail}


@dataclass
class StudyResult:
    study: str
    params: dict
    records: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    error: dict | None = None
    seconds: float = 0.0

    def check(self, name, passed, value=None, threshold=None, detail=""):
        self.checks.append(Check(name, bool(passed), value, threshold, detail))

    def skip(self, name, detail=""):
        self.checks.append(Check(name, False, detail=detail, skipped=True))

    def failed(self) -> list:
        return [c for c in self.checks if c.status == "fail"]


def _num(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _mesh(p, h, pinned=()):
    return build_graded_mesh(make_tangent_ball(p["N"], p["c"]), h, p["q"], pinned)


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def _interior_bump(mesh, center, radius, amp=1.0):
    d = np.linalg.norm(mesh.nodes - np.asarray(center, float), axis=1)
    v = amp * np.clip(1.0 - (d / radius) ** 2, 0.0, None) ** 3
    v[mesh.boundary] = 0.0
    return v


def _window_mass(mesh, density, window) -> float:
    nodes, w = boundary_quadrature(mesh)
    phi = np.mod(mesh.domain.boundary_angle(mesh.nodes[nodes]), 2 * math.pi)
    m = (phi >= window[0]) & (phi <= window[1])
    return float(np.sum(w[m] * density[nodes][m]))


# ---------------------------------------------------------------- studies


def study_halfspace_identities(p, rng, res: StudyResult):
    tol = p["tolerances"]
    # exponent algebra on random (mu, N)
    worst, worst_sum = 0.0, 0.0
    rows = []
    for _ in range(p["samples"]):
        N = int(rng.integers(2, 7))
        mu = float(critical_mu(N) + rng.uniform(0.0, 10.0))
        ap, am = alpha_exponents(mu, N)
        sp_ = SpectralParams(mu, N)
        scale = 1.0 + abs(mu) + ap * ap
        r = max(abs(exponent_polynomial(ap, sp_)), abs(exponent_polynomial(am, sp_))) / scale
        worst = max(worst, r)
        worst_sum = max(worst_sum, abs(ap + am - (2 - N)))
        rows.append([N, mu, ap, am, r])
    res.tables["exponents"] = (["N", "mu", "alpha_plus", "alpha_minus", "residual"], rows)
    res.check("exponent-residual", worst <= tol["exponent"], worst, tol["exponent"])
    res.check("exponent-sum", worst_sum <= tol["exponent"], worst_sum, tol["exponent"])
    # mode spectrum for N = 2
    ok = all(mode_eigenvalue(k, 2) == k * k for k in range(1, 11))
    res.check("mode-spectrum-N2", ok, detail="lambda_k = k^2 for k <= 10")
    # c_mu oracles
    e2 = abs(c_mu(SpectralParams(0.0, 2)) - math.pi)
    e3 = abs(c_mu(SpectralParams(0.0, 3)) - 2 * math.pi)
    res.check("c_mu(0,2)=pi", e2 <= tol["c_mu"], e2, tol["c_mu"])
    res.check("c_mu(0,3)=2pi", e3 <= tol["c_mu"], e3, tol["c_mu"])
    # excised Dirac identity on the half-space
    zeta = bump_profile(0.5, 3)
    drows = []
    for mu in p["mu"]:
        sp_ = SpectralParams(mu, 2)
        eps, vals, limit, target = dirac_identity_terms(zeta, sp_)
        rel = abs(limit - target) / max(1.0, abs(target))
        drows += [[mu, e, v, limit, target] for e, v in zip(eps, vals)]
        res.records[f"dirac mu={mu}"] = {"eps": eps, "integrals": vals, "limit": limit, "target": target}
        res.check(f"dirac-identity mu={mu}", rel <= tol["dirac"], rel, tol["dirac"])
    res.tables["dirac"] = (["mu", "eps", "integral", "limit", "target"], drows)


def study_eigen_asymptotics(p, rng, res: StudyResult):
    tol = p["tolerances"]
    rows, errs = [], []
    # Dirichlet eigenvalue of the disk of radius c: (j01 / c)^2
    ell_exact = J01**2 / p["c"] ** 2 if p["N"] == 2 else None
    for h in p["levels"]:
        mesh = _mesh(p, h)
        pair = eigenpair_for(mesh, 0.0)
        rel = abs(pair.ell - ell_exact) / ell_exact if ell_exact else None
        errs.append(rel)
        rows.append([h, mesh.n_nodes, 0.0, pair.ell, ell_exact, rel])
        for mu in p["mu"]:
            pm = eigenpair_for(mesh, mu)
            try:
                fit = gamma_asymptotics_fit(pm, window=p.get("window"))
                rows.append([h, mesh.n_nodes, mu, pm.ell, fit.slope, SpectralParams(mu, p["N"]).alpha_plus])
                res.records.setdefault("slopes", []).append({"h": h, "mu": mu, "slope": fit.slope, "ci": fit.ci,
                                                             "alpha_plus": SpectralParams(mu, p["N"]).alpha_plus})
            except HardyLabError as e:
                res.records.setdefault("slope_errors", []).append({"h": h, "mu": mu, **e.as_record()})
        mesh._cache.clear()
    res.tables["eigen"] = (["h", "nodes", "mu", "ell", "slope_or_exact", "alpha_plus_or_error"], rows)
    if errs[0] is not None:
        res.records["eigen_errors"] = errs
        res.check("eigenvalue-oracle-finest", errs[-1] <= tol["eigenvalue"], errs[-1], tol["eigenvalue"])
        res.check("eigenvalue-error-monotone", _strictly_decreasing(errs), detail=str(errs))
    finest = p["levels"][-1]
    for s in res.records.get("slopes", []):
        if s["h"] == finest:
            d = abs(s["slope"] - s["alpha_plus"])
            res.check(f"gamma-slope mu={s['mu']}", d <= tol["slope"], d, tol["slope"])
    for s in res.records.get("slope_errors", []):
        if s["h"] == finest:
            res.check(f"gamma-slope mu={s['mu']}", False, detail=s.get("message", ""))


def study_weight_comparison(p, rng, res: StudyResult):
    tol = p["tolerances"]
    rows = []
    c2 = {mu: [] for mu in p["mu"]}
    for h in p["levels"]:
        mesh = _mesh(p, h)
        for mu in p["mu"]:
            pair = eigenpair_for(mesh, mu)
            wp = weight_pair(system_for(mesh, mu), pair)
            c2[mu].append(wp.c2_hat)
            rows.append([h, mu, wp.min_gap, wp.c2_hat])
            res.check(f"sigma>=gamma h={h} mu={mu}", wp.min_gap >= -tol["sigma_gap"], wp.min_gap, -tol["sigma_gap"])
        mesh._cache.clear()
    for mu, seq in c2.items():
        if len(seq) >= 2:
            d = abs(seq[-1] - seq[-2]) / abs(seq[-2])
            res.check(f"c2_hat-stable mu={mu}", d <= tol["c2_stability"], d, tol["c2_stability"])
    res.tables["weights"] = (["h", "mu", "min_sigma_minus_gamma", "c2_hat"], rows)


def study_poisson_construction(p, rng, res: StudyResult):
    tol = p["tolerances"]
    h = p["levels"][-1]
    mesh = _mesh(p, h)
    dens = boundary_bump(mesh, p["datum_angle"], p["datum_width"])
    rows = []
    for mu in p["mu"]:
        if mu == 0:
            continue
        try:
            pl = poisson_limit(mesh, mu, BoundaryDatum(dens), p["eps"])
            res.check(f"eps-monotone mu={mu}", pl.max_violation <= tol["monotone"], pl.max_violation, tol["monotone"])
            centre = mesh.domain.center[None, :]
            for e, s in zip(pl.eps, pl.sequence):
                rows.append([mu, e, float(interpolate(mesh, s.values, centre)[0])])
            # comparison with the harmonic solution for mu >= 0
            if mu > 0:
                h0 = harmonic_extension(mesh, dens)
                worst = float(np.max(pl.u.values - h0.values))
                res.check(f"below-harmonic mu={mu}", worst <= tol["monotone"], worst, tol["monotone"])
        except HardyLabError as e:
            res.check(f"eps-monotone mu={mu}", False, detail=str(e))
    res.tables["eps_sequence"] = (["mu", "eps", "value_at_center"], rows)
    # dual identity at mu = 0 against the harmonic oracle
    pair = eigenpair_for(mesh, 0.0)
    u = poisson_solution(mesh, 0.0, dens)
    zetas = [bump_profile(s, 3) for s in p["zeta_supports"]]
    out = poisson_dual_identity(u, dens, pair, zetas)
    res.records["dual_identity"] = out
    worst = max(o["residual"] for o in out)
    res.check("dual-identity mu=0", worst <= tol["dual"], worst, tol["dual"])


def study_kernel_vanishing(p, rng, res: StudyResult):
    tol = p["tolerances"]
    mesh = _mesh(p, p["levels"][-1])
    rows = []
    for mu in p["mu"]:
        try:
            rec = kernel_vanishing_at_origin(mesh, mu, p["widths"])
        except HardyLabError as e:
            res.check(f"vanishing mu={mu}", False, detail=str(e))
            continue
        v = np.array(rec.values)[:, 0]
        rows += [[mu, w, x] for w, x in zip(rec.widths, v)]
        res.records[f"mu={mu}"] = {"widths": rec.widths, "values": v.tolist(), "rate": rec.rate,
                                   "extrapolated": rec.extrapolated.tolist()}
        if mu > 0:
            ratio = v[-1] / v[0]
            res.check(f"strictly-decreasing mu={mu}", rec.strictly_decreasing)
            res.check(f"decay-ratio mu={mu}", ratio < tol["decay_ratio"], ratio, tol["decay_ratio"],
                      detail=f"empirical rate {rec.rate:.3f}")
        else:
            oracle = 1.0 / (2 * math.pi * p["c"])  # disk Poisson kernel, centre to a boundary point
            err = abs(v[-1] - oracle) / oracle
            res.check("control mu=0", err <= tol["control"], err, tol["control"])
    res.tables["vanishing"] = (["mu", "width", "value_at_center"], rows)


def study_singular_kernel(p, rng, res: StudyResult):
    tol = p["tolerances"]
    rows, prof = [], []
    norms = {}
    for h in p["levels"]:
        mesh = _mesh(p, h)
        for mu in p["mu"]:
            sp_ = SpectralParams(mu, p["N"])
            try:
                sk = singular_kernel_for(mesh, mu)
            except HardyLabError as e:
                res.check(f"exhaustion h={h} mu={mu}", False, detail=str(e))
                continue
            t = sk.region_radius
            window = (t, min(4 * t, mesh.domain.R_Omega / 4))
            r, pts, v = ray_samples(sk.u, window, None, 12)
            fit = log_log_fit(r, v / mesh.domain.rho(pts))
            _, ratio = ratio_profile(sk.u, sp_, window, 12)
            pair = eigenpair_for(mesh, mu)
            dirac = singular_dirac_identity(sk.u, pair, [bump_profile(s, 3) for s in p["zeta_supports"]])
            dres = max(d["residual"] for d in dirac)
            norms.setdefault(mu, []).append(dres)
            rows.append([h, mu, str(sk.eps), sk.max_violation, fit.slope, sp_.alpha_minus - 1, ratio[0],
                         sk.mass, sk.mass_target, dres])
            prof += [[h, mu, a, b] for a, b in zip(r, v)]
            res.records.setdefault("levels", []).append({
                "h": h, "mu": mu, "eps": sk.eps, "violation": sk.max_violation, "slope": fit.slope,
                "ratio": ratio.tolist(), "mass": sk.mass, "mass_target": sk.mass_target, "c1": sk.c1,
                "dirac_residual": dres})
            if h == p["levels"][-1]:
                res.check(f"monotone mu={mu}", sk.max_violation <= tol["monotone"], sk.max_violation, tol["monotone"])
                d = abs(fit.slope - (sp_.alpha_minus - 1))
                res.check(f"phi/rho slope mu={mu}", d <= tol["slope"], d, tol["slope"])
                nr = abs(ratio[0] - 1)
                res.check(f"normalisation mu={mu}", nr <= tol["normalisation"], nr, tol["normalisation"])
                lo = (1 - tol["mass"]) * sk.mass_target
                res.check(f"mass-bound mu={mu}", sk.mass >= lo, sk.mass, lo)
                res.check(f"singular-identity mu={mu}", dres <= tol["dirac"], dres, tol["dirac"])
        mesh._cache.clear()
    for mu, seq in norms.items():
        if len(seq) > 1:
            res.check(f"singular-identity-decreasing mu={mu}", _strictly_decreasing(seq), detail=str(seq))
    res.tables["levels"] = (["h", "mu", "eps", "violation", "slope", "target", "ratio_near0", "mass",
                             "mass_target", "identity_residual"], rows)
    res.tables["profiles"] = (["h", "mu", "r", "value"], prof)


def _mixed_data(mesh, p):
    nu = _interior_bump(mesh, p["nu_center"], p["nu_radius"])
    lam = boundary_bump(mesh, p["datum_angle"], p["datum_width"])
    return WeakProblemData(nu, lam, p["k"])


def study_representation(p, rng, res: StudyResult):
    tol = p["tolerances"]
    zetas = [bump_profile(s, 3) for s in p["zeta_supports"]]
    seqs = {mu: [] for mu in p["mu"]}
    rows = []
    for h in p["levels"]:
        mesh = _mesh(p, h)
        d = _mixed_data(mesh, p)
        for mu in p["mu"]:
            u = weak_solution(d, mesh, mu)
            rr = representation_residual(u, d, mu, zetas)
            seqs[mu].append(rr["max"])
            rows += [[h, mu, z["zeta"], z["lhs"], z["rhs"], z["residual"]] for z in rr["per_zeta"]]
            if mu == p["mu"][0] and h == p["levels"][-1]:
                # superposition and linearity witnesses
                parts = (weak_solution(WeakProblemData(d.nu, None, 0), mesh, mu)
                         + weak_solution(WeakProblemData(None, d.lam, 0), mesh, mu)
                         + weak_solution(WeakProblemData(None, None, d.k), mesh, mu))
                gap = float(np.max(np.abs(parts.values - u.values)) / np.max(np.abs(u.values)))
                res.check("additivity", gap <= 1e-9, gap, 1e-9)
        mesh._cache.clear()
    for mu, seq in seqs.items():
        res.records[f"mu={mu}"] = seq
        res.check(f"residual-finest mu={mu}", seq[-1] <= tol["representation"], seq[-1], tol["representation"])
        if len(seq) > 1:
            res.check(f"residual-decreasing mu={mu}", _strictly_decreasing(seq), detail=str(seq))
    res.tables["representation"] = (["h", "mu", "zeta", "lhs", "rhs", "residual"], rows)


def _roundtrip_configs(p, rng):
    ks = p["atoms"]
    return [(float(rng.uniform(*p["angle_range"])), float(rng.uniform(*p["width_range"])), ks[i % len(ks)])
            for i in range(p["configs"])]


def study_trace_roundtrip(p, rng, res: StudyResult):
    tol = p["tolerances"]
    cfgs = _roundtrip_configs(p, rng)
    W = tuple(p["trace_window"])
    mass_err = {mu: [] for mu in p["mu"]}
    k_err = {mu: [] for mu in p["mu"]}
    rows = []
    for h in p["levels"]:
        mesh = _mesh(p, h)
        for mu in p["mu"]:
            me, ke = [], []
            for ang, w, k in cfgs:
                lam = boundary_bump(mesh, ang, w, 1.0)
                truth = _window_mass(mesh, lam, W)
                u = weak_solution(WeakProblemData(None, lam, k), mesh, mu)
                tr = boundary_trace(u, mu, windows=(W,))
                me.append(abs(tr.window_mass[0] - truth) / truth)
                ke.append(abs(tr.k_hat - k) / max(k, 0.5))
                rows.append([h, mu, ang, w, k, truth, tr.window_mass[0], tr.k_hat, tr.m_u, tr.k_from_mass])
            mass_err[mu].append(max(me))
            k_err[mu].append(max(ke))
        mesh._cache.clear()
    for mu in p["mu"]:
        res.records[f"mu={mu}"] = {"mass_error": mass_err[mu], "k_error": k_err[mu]}
        res.check(f"window-mass mu={mu}", mass_err[mu][-1] <= tol["mass"], mass_err[mu][-1], tol["mass"])
        res.check(f"atom mu={mu}", k_err[mu][-1] <= tol["atom"], k_err[mu][-1], tol["atom"])
        if len(p["levels"]) > 1:
            res.check(f"mass-error-decreasing mu={mu}", _strictly_decreasing(mass_err[mu]), detail=str(mass_err[mu]))
            res.check(f"atom-error-decreasing mu={mu}", _strictly_decreasing(k_err[mu]), detail=str(k_err[mu]))
    res.tables["roundtrip"] = (["h", "mu", "angle", "width", "k", "window_mass", "recovered_mass", "k_hat",
                                "m_u", "m_u_over_c_mu"], rows)


def _hardy_probe(mesh, rng):
    """rho times a random smooth factor: a Gaussian concentrated at a random scale near 0 plus noise modes."""
    X = mesh.nodes
    s = 10 ** rng.uniform(-1.7, -0.3)
    x0 = np.array([rng.uniform(-0.5, 0.5) * s, rng.uniform(0.0, 1.0) * s])
    g = np.exp(-np.sum((X - x0) ** 2, axis=1) / (2 * s * s))
    k = rng.integers(1, 4, size=2)
    g = g * (1 + 0.5 * rng.uniform(-1, 1) * np.cos(k[0] * math.pi * X[:, 0] + k[1] * X[:, 1]))
    u = mesh.rho * g
    u[mesh.boundary] = 0.0
    return GridFunction(mesh, u)


def study_hardy_remainder(p, rng, res: StudyResult):
    tol = p["tolerances"]
    mesh = _mesh(p, p["levels"][-1])
    K = system_for(mesh, 0.0).K
    rows, worst = [], np.inf
    for i in range(p["samples"]):
        u = _hardy_probe(mesh, rng)
        lhs, rhs = hardy_remainder_check(u, K)
        worst = min(worst, lhs / rhs)
        rows.append([i, lhs, rhs, lhs / rhs])
    res.tables["hardy"] = (["probe", "lhs", "rhs", "ratio"], rows)
    res.check("hardy-remainder", worst >= tol["hardy"], worst, tol["hardy"])


def study_kato(p, rng, res: StudyResult):
    tol = p["tolerances"]
    mesh = _mesh(p, p["levels"][-1])
    rows = []
    for mu in p["mu"]:
        worst = -np.inf
        for i in range(p["configs"]):
            c1 = (rng.uniform(-0.2, 0.2), rng.uniform(0.3, 0.7))
            c2 = (rng.uniform(-0.2, 0.2), rng.uniform(0.3, 0.7))
            f = _interior_bump(mesh, c1, 0.15, rng.uniform(0.5, 2)) - _interior_bump(mesh, c2, 0.15, rng.uniform(0.5, 2))
            hb = boundary_bump(mesh, rng.uniform(1.0, 2 * math.pi - 1.0), 0.3, rng.uniform(-1, 1))
            for j in range(p["zetas"]):
                z = bump_profile(float(rng.uniform(0.2, 1.0)), 3)
                k = kato_residual(f, hb, mesh, mu, z)
                worst = max(worst, k["abs_slack"], k["pos_slack"])
                rows.append([mu, i, z.name, *k["abs"], *k["pos"], k["scale"]])
        res.check(f"kato mu={mu}", worst <= tol["kato"], worst, tol["kato"])
    res.tables["kato"] = (["mu", "datum", "zeta", "abs_lhs", "abs_rhs", "pos_lhs", "pos_rhs", "scale"], rows)


# ---------------------------------------------------------------- catalogue

_BASE = {"N": 2, "c": 0.5, "q": 2.0}

STUDIES = {
    "halfspace-identities": (
        study_halfspace_identities,
        "exponent algebra, half-sphere spectrum, c_mu oracles and the excised Dirac identity on the half-space",
        {"mu": [-0.75, 0.0, 1.0], "samples": 200,
         "tolerances": {"exponent": 1e-12, "c_mu": 1e-12, "dirac": 1e-3}},
    ),
    "eigen-asymptotics": (
        study_eigen_asymptotics,
        "principal eigenpair on graded meshes: eigenvalue oracle, error trend and power-law slope of gamma near 0",
        {"mu": [-0.5, 0.0, 3.0], "levels": [0.04, 0.02, 0.01], "window": None,
         "tolerances": {"eigenvalue": 0.01, "slope": 0.05}},
    ),
    "weight-comparison": (
        study_weight_comparison,
        "weight sigma against gamma: nodewise comparison and stability of sup sigma/gamma",
        {"mu": [-0.5, 0.0, 1.0], "levels": [0.02, 0.01],
         "tolerances": {"sigma_gap": 1e-6, "c2_stability": 0.10}},
    ),
    "poisson-construction": (
        study_poisson_construction,
        "truncated-potential Poisson solves: eps-monotonicity in both sign regimes and the dual identity",
        {"mu": [2.0, -0.5], "levels": [0.01], "eps": [0.4, 0.2, 0.1, 0.05, 0.025],
         "datum_angle": math.pi / 2, "datum_width": 0.3, "zeta_supports": [0.9, 0.6],
         "tolerances": {"monotone": 1e-8, "dual": 0.02}},
    ),
    "kernel-vanishing": (
        study_kernel_vanishing,
        "mollified Dirac data at the singular point: decay for mu > 0 and the harmonic-measure control at mu = 0",
        {"mu": [1.0, 0.0], "levels": [0.01], "widths": [0.2, 0.1, 0.05, 0.025],
         "tolerances": {"decay_ratio": 0.10, "control": 0.05}},
    ),
    "singular-kernel": (
        study_singular_kernel,
        "kernel with the singular boundary behaviour at 0 by exhaustion: monotonicity, slope, normalisation, mass",
        {"mu": [0.0], "levels": [0.02, 0.01, 0.005], "zeta_supports": [0.9, 0.5],
         "tolerances": {"monotone": 1e-8, "slope": 0.1, "normalisation": 0.15, "mass": 0.05, "dirac": 0.10}},
    ),
    "representation": (
        study_representation,
        "very weak solutions with interior, boundary and atomic data: representation identity residuals",
        {"mu": [-0.5, 0.0, 1.0], "levels": [0.02, 0.01, 0.005], "zeta_supports": [0.9, 0.6, 0.4, 0.25],
         "nu_center": [0.1, 0.55], "nu_radius": 0.25, "datum_angle": 1.2, "datum_width": 0.2, "k": 1.0,
         "tolerances": {"representation": 0.10}},
    ),
    "trace-roundtrip": (
        study_trace_roundtrip,
        "boundary trace recovery from weak solutions: window mass of the density and the atom at 0",
        {"mu": [-0.5, 0.0, 1.0], "levels": [0.02, 0.01, 0.005], "configs": 10, "atoms": [0.0, 0.5, 2.0],
         "angle_range": [1.5, 2 * math.pi - 1.5], "width_range": [0.15, 0.4],
         "trace_window": [0.6, 2 * math.pi - 0.6], "tolerances": {"mass": 0.10, "atom": 0.20}},
    ),
    "hardy-remainder": (
        study_hardy_remainder,
        "improved Hardy inequality with the logarithmic remainder on random probes",
        {"levels": [0.01], "samples": 50, "tolerances": {"hardy": 0.95}},
    ),
    "kato": (
        study_kato,
        "Kato inequalities for sign-changing interior and boundary data",
        {"mu": [0.0, 1.0], "levels": [0.01], "configs": 10, "zetas": 10, "tolerances": {"kato": 0.02}},
    ),
}


def study_defaults(name: str) -> dict:
    _, _, d = STUDIES[name]
    out = dict(_BASE)
    for k, v in d.items():
        out[k] = dict(v) if isinstance(v, dict) else (list(v) if isinstance(v, list) else v)
    return out


def run_study(name: str, params: dict, seed: int) -> StudyResult:
    fn = STUDIES[name][0]
    rng = np.random.default_rng(seed)
    res = StudyResult(name, params)
    t = time.perf_counter()
    try:
        fn(params, rng, res)
    except HardyLabError as e:
        res.error = e.as_record()
        res.check("completed", False, detail=f"{e.code}: {e}")
    res.seconds = time.perf_counter() - t
    return res
