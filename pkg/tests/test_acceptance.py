"""Acceptance criteria at their stated tolerances. Each test prints one PASS/FAIL line;
the lines are repeated in the terminal summary."""

import time

from hardylab.studies import run_study, study_defaults

RESULTS: list[str] = []


def _run(name, seed, **overrides):
    p = study_defaults(name)
    p.update(overrides)
    t = time.perf_counter()
    res = run_study(name, p, [0, seed])
    return res, time.perf_counter() - t


def _fmt(v):
    return "n/a" if v is None else f"{float(v):.4g}"


def _verdict(number, title, res, names, seconds, limit):
    checks = {c.name: c for c in res.checks}
    missing = [n for n in names if n not in checks]
    bad = [f"{n}={_fmt(checks[n].value)}" for n in names if n in checks and checks[n].status != "pass"]
    ok = not missing and not bad and res.error is None and seconds < limit
    detail = f"{seconds:.1f}s/{limit:.0f}s"
    if bad:
        detail += " failing: " + ", ".join(bad)
    if missing:
        detail += " missing: " + ", ".join(missing)
    if res.error:
        detail += f" error: {res.error['code']}"
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


def test_criterion_01_exponent_algebra():
    res, t = _run("halfspace-identities", 1, mu=[])
    _verdict(1, "exponent algebra", res, ["exponent-residual", "exponent-sum"], t, 1.0)


def test_criterion_02_mode_spectrum():
    res, t = _run("halfspace-identities", 2, mu=[], samples=1)
    _verdict(2, "half-circle mode spectrum", res, ["mode-spectrum-N2"], t, 1.0)


def test_criterion_03_halfspace_dirac_identity():
    res, t = _run("halfspace-identities", 3)
    names = ["c_mu(0,2)=pi", "c_mu(0,3)=2pi"] + [f"dirac-identity mu={m}" for m in (-0.75, 0.0, 1.0)]
    _verdict(3, "half-space Dirac identity", res, names, t, 30.0)


def test_criterion_04_eigenvalue_oracle():
    res, t = _run("eigen-asymptotics", 4, mu=[])
    _verdict(4, "principal eigenvalue oracle", res, ["eigenvalue-oracle-finest", "eigenvalue-error-monotone"],
             t, 120.0)


def test_criterion_05_eigenfunction_slope():
    res, t = _run("eigen-asymptotics", 5)
    _verdict(5, "eigenfunction power law", res, [f"gamma-slope mu={m}" for m in (-0.5, 0.0, 3.0)], t, 180.0)


def test_criterion_06_weight_comparison():
    res, t = _run("weight-comparison", 6)
    names = [f"sigma>=gamma h={h} mu={m}" for h in (0.02, 0.01) for m in (-0.5, 0.0, 1.0)]
    names += [f"c2_hat-stable mu={m}" for m in (-0.5, 0.0, 1.0)]
    _verdict(6, "weight comparison", res, names, t, 120.0)


def test_criterion_07_poisson_monotonicity():
    res, t = _run("poisson-construction", 7)
    _verdict(7, "Poisson eps-monotonicity and dual identity", res,
             ["eps-monotone mu=2.0", "eps-monotone mu=-0.5", "dual-identity mu=0"], t, 180.0)


def test_criterion_08_vanishing_at_singular_point():
    res, t = _run("kernel-vanishing", 8)
    _verdict(8, "vanishing at the singular point", res,
             ["strictly-decreasing mu=1.0", "decay-ratio mu=1.0", "control mu=0"], t, 180.0)


def test_criterion_09_singular_kernel():
    res, t = _run("singular-kernel", 9)
    names = [f"{n} mu=0.0" for n in ("monotone", "phi/rho slope", "normalisation", "mass-bound")]
    _verdict(9, "singular kernel by exhaustion", res, names, t, 300.0)


def test_criterion_10_representation_identity():
    res, t = _run("representation", 10)
    names = [f"residual-{k} mu={m}" for m in (-0.5, 0.0, 1.0) for k in ("finest", "decreasing")]
    _verdict(10, "representation identity", res, names, t, 300.0)


def test_criterion_11_kato():
    res, t = _run("kato", 11)
    _verdict(11, "Kato inequalities", res, ["kato mu=0.0", "kato mu=1.0"], t, 180.0)


def test_criterion_12_trace_roundtrip():
    res, t = _run("trace-roundtrip", 12)
    names = [f"{k} mu={m}" for m in (-0.5, 0.0, 1.0)
             for k in ("window-mass", "atom", "mass-error-decreasing", "atom-error-decreasing")]
    _verdict(12, "boundary trace round trip", res, names, t, 600.0)


def test_criterion_13_hardy_remainder():
    res, t = _run("hardy-remainder", 13)
    _verdict(13, "Hardy inequality with remainder", res, ["hardy-remainder"], t, 60.0)
