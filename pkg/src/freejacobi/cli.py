"""Command line front end.

Four subcommands write plot-ready files that embed their run manifest:

``moments``   moment table from one or more sources, with a discrepancy gate
``density``   spectral density on a midpoint angle grid plus the atom report
``boundary``  boundary constants of the univalence domain as JSON
``verify``    machine-readable pass/fail report over the invariant suites

Exit codes: 0 success, 1 a gate or check failed, 2 a numerical error.
"""

import argparse
import itertools
import math
import sys
import time

import numpy as np

from . import artifacts, flow, herglotz, loewner, maps, moments, rmt
from .errors import FreeJacobiError
from .flow import FlowParams

SOURCE_NAMES = {"formula": "formula", "reversion": "reversion-oracle", "ode": "ode-oracle", "mc": "monte-carlo"}
GATE_TOL = 1e-5


def _sources(text):
    out = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in out if s not in SOURCE_NAMES]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown sources {bad}; choose from {sorted(SOURCE_NAMES)}")
    return list(dict.fromkeys(out))


def _emit(args, manifest, header, rows, summary):
    if args.format == "json":
        payload = {"columns": header, "rows": [list(r) for r in rows], "summary": summary}
        text = artifacts.json_text(manifest, payload)
    else:
        text = artifacts.csv_text(manifest, header, rows, summary)
    artifacts.write(args.out, text)


# ---------------------------------------------------------------------------
# moments


def _mc_sources(args, p):
    cfg = rmt.SimConfig(args.N, p.kappa, p.t, args.dt, args.trials, args.seed, args.n_max)
    ys = rmt.sample_unitary_bm(cfg, workers=args.threads)
    return cfg, rmt.empirical_moments(cfg, ys)


def cmd_moments(args):
    p = FlowParams(args.kappa, args.t)
    tables, stderr = {}, {}
    mc = None
    for src in args.sources:
        if src == "formula":
            tables[src] = moments.moment_table(p, args.n_max)
        elif src == "reversion":
            tables[src] = moments.MomentTable.from_u(p, moments.unitary_moments_oracle(p, args.n_max), "reversion-oracle")
        elif src == "ode":
            tables[src] = loewner.ode_moment_table(p, args.n_max)
        else:
            cfg, emp = _mc_sources(args, p)
            tables[src], stderr[src] = emp.table, (emp.u_stderr, emp.j_stderr)
            mc = (cfg, emp)

    header = ["n"]
    for src in args.sources:
        header.append(f"u_{src}")
        if src in stderr:
            header.append(f"u_{src}_se")
    for src in args.sources:
        header.append(f"j_{src}")
        if src in stderr:
            header.append(f"j_{src}_se")
    header.append("discrepancy")

    exact = [s for s in args.sources if s != "mc"]
    pairs = {}
    for a, b in itertools.combinations(args.sources, 2):
        d = np.maximum(
            np.abs(tables[a].u_moments - tables[b].u_moments), np.abs(tables[a].j_moments - tables[b].j_moments)
        )
        pairs[f"{a}-{b}"] = d
    rows = []
    for i in range(args.n_max):
        row = [i + 1]
        for src in args.sources:
            row.append(float(tables[src].u_moments[i]))
            if src in stderr:
                row.append(float(stderr[src][0][i]))
        for src in args.sources:
            row.append(float(tables[src].j_moments[i]))
            if src in stderr:
                row.append(float(stderr[src][1][i]))
        row.append(max((float(d[i]) for d in pairs.values()), default=0.0))
        rows.append(row)

    summary = {"pairwise_max": {k: float(v.max()) for k, v in pairs.items()}, "tolerance": args.tol}
    passed = all(
        float(pairs[f"{a}-{b}"].max()) <= args.tol for a, b in itertools.combinations(args.sources, 2) if a in exact and b in exact
    )
    if mc is not None:
        cfg, emp = mc
        # the simulation realizes kappa_N = (2r - N)/N, so compare at that value
        ref = moments.moment_table(FlowParams(cfg.kappa_n, p.t), args.n_max)
        ok_u = rmt.within_allowance(emp.table.u_moments, ref.u_moments, emp.u_stderr, cfg.matrix_size)
        ok_j = rmt.within_allowance(emp.table.j_moments, ref.j_moments, emp.j_stderr, cfg.matrix_size)
        summary["monte_carlo"] = {
            "kappa_n": cfg.kappa_n,
            "within_allowance": bool(ok_u.all() and ok_j.all()),
            "binom_residual": emp.binom_residual,
            "imag_residue": emp.imag_residue,
        }
        passed = passed and bool(ok_u.all() and ok_j.all()) and emp.binom_residual <= 1e-10
    summary["passed"] = passed
    params = {"kappa": p.kappa, "t": p.t, "n_max": args.n_max, "sources": args.sources}
    if mc is not None:
        params.update(N=args.N, dt=args.dt, trials=args.trials, threads=args.threads)
    manifest = artifacts.RunManifest("moments", params, seed=args.seed if mc is not None else None)
    _emit(args, manifest, header, rows, summary)
    if not passed:
        print(f"moments: cross-source discrepancy above tolerance: {summary['pairwise_max']}", file=sys.stderr)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# density


def cmd_density(args):
    if args.measure == "stationary":
        est = herglotz.stationary_measure(args.kappa, args.grid)
        params = {"kappa": args.kappa, "grid": args.grid}
    else:
        p = FlowParams(args.kappa, args.t)
        params = {"kappa": p.kappa, "t": p.t, "grid": args.grid, "r": args.r}
        if args.measure == "nu":
            est = herglotz.density_nu(p, args.grid, args.r)
        else:
            zeta = complex(math.cos(args.zeta_angle), math.sin(args.zeta_angle))
            params["zeta_angle"] = args.zeta_angle
            est = herglotz.density_clark(p, zeta, args.grid, args.r)
    params["measure"] = args.measure
    rows = [(float(th), float(rho), bool(u)) for th, rho, u in zip(est.grid, est.density, est.uncertain)]
    summary = {
        "atom_at_one": est.atom_at_one,
        "atom_at_minus_one": est.atom_at_minus_one,
        "total_mass": est.total_mass,
        "radius_used": est.radius_used,
        "symmetry_defect": est.symmetry_defect(),
    }
    _emit(args, artifacts.RunManifest("density", params), ["theta", "density", "uncertain"], rows, summary)
    return 0


# ---------------------------------------------------------------------------
# boundary


def _boundary_report(p, n_points):
    t = p.t
    z = flow.solve_z_right(p)
    b = flow.solve_b(t)
    A = flow.strip_bound(t)
    report = {
        "z_right": z,
        "b_2t": b,
        "d_2t": flow.solve_d(t) if t > 2 else None,
        "A_2t": A,
        "residuals": {
            "z_right": flow.z_right_residual(z, p),
            "b_2t": abs(complex(maps.xi(b, t)) - 1),
        },
        "monotonicity_violations": flow.monotonicity_violations(p),
    }
    if report["d_2t"] is not None:
        report["residuals"]["d_2t"] = abs(complex(maps.xi(report["d_2t"], t)) + 1)
    pts = flow.trace_boundary(p, n_points)
    report["boundary"] = {
        "points": [[float(w.real), float(w.imag)] for w in pts],
        "min_distance_to_one": float(np.min(np.abs(1 - pts))),
    }
    return report


def cmd_boundary(args):
    p = FlowParams(args.kappa, args.t)
    report = _boundary_report(p, args.n_points)
    manifest = artifacts.RunManifest("boundary", {"kappa": p.kappa, "t": p.t, "n_points": args.n_points})
    artifacts.write(args.out, artifacts.json_text(manifest, report))
    return 0


# ---------------------------------------------------------------------------
# verify


class _Report:
    def __init__(self):
        self.checks = []

    def add(self, name, value, threshold, passed=None):
        value = float(value)
        ok = (value <= threshold) if passed is None else bool(passed)
        self.checks.append({"name": name, "value": value, "threshold": threshold, "passed": ok})

    def run(self, name, fn, threshold):
        # a numerical error inside a check is a failed check, not a crash
        try:
            self.add(name, fn(), threshold)
        except FreeJacobiError as exc:
            self.checks.append({"name": name, "value": None, "threshold": threshold, "passed": False, "error": f"{type(exc).__name__}: {exc}"})

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)


_QUICK_PAIRS = [(0.0, 1.0), (0.6, 1.0), (-0.3, 0.5)]
_FULL_PAIRS = [(0.0, 0.5), (0.3, 1.0), (-0.6, 1.0), (0.6, 2.0), (0.9, 0.5), (-0.9, 3.0)]


def _identity_worst(p, rng, m):
    zs = 0.95 * np.sqrt(rng.uniform(size=m)) * np.exp(1j * rng.uniform(-math.pi, math.pi, size=m))
    lam = flow.sample_domain(p, m, rng)
    ext = max(herglotz.ext_residual(z, p) / max(1.0, abs(herglotz._h0(z)) ** 2) for z in zs)
    clark = max(herglotz.clark_identity_residual(z, p) for z in zs)
    char = max(herglotz.characteristics_residual(z, p) / max(1.0, abs(herglotz._h0(z)) ** 2) for z in lam)
    return max(ext, clark, char)


def _quick_checks(rep, rng):
    pairs = [(k, t) for k in (0.0, 0.6, -0.9) for t in (0.25, 1.0, 3.0)]
    rep.run("reversion_gate_n8", lambda: max(moments.reversion_gap(FlowParams(k, t), 8) for k, t in pairs), 1e-9)

    # sensitivity harness: a 1e-3 perturbation of one coefficient must trip the gate
    p = FlowParams(0.6, 1.0)
    c = moments.formula_coeffs(p, 8)
    c[5] += 1e-3
    gap = moments.reversion_gap(p, 8, c)
    rep.add("reversion_gate_detects_mutation", gap, 1e-9, passed=gap > 1e-9)

    rep.run(
        "kappa_zero_closed_form",
        lambda: max(
            abs(u - moments.kappa_zero_moment(n, t))
            for t in (0.5, 1.0, 2.0)
            for n, u in enumerate(moments.unitary_moments(10, FlowParams(0.0, t)), 1)
        ),
        1e-8,
    )
    rep.run(
        "first_moment_anchor",
        lambda: max(
            abs(moments.unitary_moment(1, FlowParams(k, t)) - (k * k + (1 - k * k) * math.exp(-t)))
            for k in (0.0, 0.3, -0.6, 0.9)
            for t in (0.25, 1.0, 3.0)
        ),
        1e-10,
    )
    rep.run(
        "moment_table_invariants",
        lambda: sum(len(moments.moment_table(FlowParams(k, t), 8).check()) for k, t in _QUICK_PAIRS),
        0,
    )
    for k, t in _QUICK_PAIRS:
        rep.run(f"identities_k{k:g}_t{t:g}", lambda k=k, t=t: _identity_worst(FlowParams(k, t), rng, 10), 1e-8)


def _mc_check(rep, seed, threads):
    cfg = rmt.SimConfig(512, 0.6, 1.0, trials=20, seed=seed, n_max=4)
    emp = rmt.empirical_moments(cfg, rmt.sample_unitary_bm(cfg, workers=threads))
    ref = moments.moment_table(FlowParams(cfg.kappa_n, cfg.t), 4)
    ok = rmt.within_allowance(emp.table.u_moments, ref.u_moments, emp.u_stderr, 512).all() and rmt.within_allowance(
        emp.table.j_moments, ref.j_moments, emp.j_stderr, 512
    ).all()
    worst = float(np.max(np.abs(emp.table.u_moments - ref.u_moments)))
    rep.add("monte_carlo_n512_within_allowance", worst, 3 * (float(emp.u_stderr.max()) + rmt.FINITE_SIZE_C / 512), passed=ok)
    rep.add("monte_carlo_binomial_identity", emp.binom_residual, 1e-10)


def _full_checks(rep, rng, seed, threads):
    def endpoints():
        worst = 0.0
        for k in (0.0, 0.3, -0.6, 0.9, 0.99):
            for t in (0.1, 0.5, 1.0, 2.0, 3.0):
                p = FlowParams(k, t)
                z0 = flow.sample_domain(p, 20, rng)
                ode = loewner.integrate_endpoints(z0, p, steps=10_000)
                worst = max(worst, float(np.max(np.abs(ode - flow.psi(z0, p)))))
        return worst

    rep.run("loewner_endpoints", endpoints, 1e-6)
    rep.run(
        "moment_ode_vs_formula",
        lambda: max(
            float(np.max(np.abs(loewner.moment_ode(FlowParams(k, t), 8) - moments.unitary_moments(8, FlowParams(k, t)))))
            for k, t in _FULL_PAIRS
        ),
        1e-8,
    )
    rep.run(
        "pde_coefficient_residual",
        lambda: max(float(np.max(loewner.pde_coefficient_residual(FlowParams(k, t), 8))) for k, t in _FULL_PAIRS),
        1e-5,
    )
    for k, t in _FULL_PAIRS:
        rep.run(f"identities_k{k:g}_t{t:g}", lambda k=k, t=t: _identity_worst(FlowParams(k, t), rng, 40), 1e-8)

    def atoms():
        worst = 0.0
        for k in (0.3, 0.6, 0.9):
            for t in (0.5, 1.0, 3.0):
                est = herglotz.density_nu(FlowParams(k, t), 128)
                worst = max(worst, abs(est.atom_at_one - k), est.atom_at_minus_one)
        return worst

    rep.run("density_atoms", atoms, 0.01)
    rep.run(
        "density_mass",
        lambda: max(abs(herglotz.density_nu(FlowParams(k, 1.0), 256).total_mass - 1) for k in (0.0, 0.6)),
        1e-2,
    )
    rep.run("stationary_mass", lambda: max(abs(herglotz.stationary_mass(k) - (1 - k)) for k in (0.3, 0.6, 0.9)), 1e-8)

    def clark_stable():
        worst = 0.0
        for k, t in ((0.3, 1.0), (0.6, 1.0), (0.9, 0.5)):
            prof = herglotz.clark_sup_profile(FlowParams(k, t))
            worst = max(worst, herglotz.profile_tail(prof) / prof[-1])
        return worst

    rep.run("clark_sup_stable", clark_stable, 0.01)
    rep.run(
        "boundary_constants",
        lambda: max(
            abs(flow.solve_z_right(FlowParams(0.0, 1.0)) - 0.2136524524),
            abs(flow.solve_b(1.0) - 1.5434046384),
            abs(flow.solve_d(4.0) - 0.9575040241),
        ),
        1e-8,
    )
    rep.run(
        "monotonicity_grid",
        lambda: sum(flow.monotonicity_violations(FlowParams(k, t)) for k, t in _FULL_PAIRS),
        0,
    )
    try:
        _mc_check(rep, seed, threads)
    except FreeJacobiError as exc:
        rep.checks.append({"name": "monte_carlo", "value": None, "threshold": None, "passed": False, "error": str(exc)})


def cmd_verify(args):
    rng = np.random.default_rng(args.seed)
    rep = _Report()
    start = time.perf_counter()
    _quick_checks(rep, rng)
    if args.level == "full":
        _full_checks(rep, rng, args.seed, args.threads)
    params = {"level": args.level, "threads": args.threads}
    manifest = artifacts.RunManifest("verify", params, seed=args.seed)
    artifacts.write(args.out, artifacts.json_text(manifest, {"checks": rep.checks, "passed": rep.passed}))
    failed = [c["name"] for c in rep.checks if not c["passed"]]
    elapsed = time.perf_counter() - start
    print(f"verify {args.level}: {len(rep.checks) - len(failed)}/{len(rep.checks)} passed in {elapsed:.1f} s", file=sys.stderr)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------


def _output_opts(sp, formats=("csv", "json")):
    sp.add_argument("--out", default="-", help="output path, '-' for stdout")
    if len(formats) > 1:
        sp.add_argument("--format", choices=formats, default=formats[0])


def build_parser():
    ap = argparse.ArgumentParser(prog="freejacobi", description="Spectral data of the free Jacobi process.")
    ap.add_argument("--threads", type=int, default=1, help="cap on worker threads (Monte Carlo trials)")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("moments", help="moment table from one or more sources")
    m.add_argument("--kappa", type=float, required=True)
    m.add_argument("--t", type=float, required=True)
    m.add_argument("--n-max", type=int, default=4)
    m.add_argument("--sources", type=_sources, default=["formula"], help="comma list of formula,reversion,ode,mc")
    m.add_argument("--tol", type=float, default=GATE_TOL, help="max discrepancy between deterministic sources")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--trials", type=int, default=20)
    m.add_argument("--N", type=int, default=512, help="matrix size for Monte Carlo")
    m.add_argument("--dt", type=float, default=0.01)
    _output_opts(m)
    m.set_defaults(func=cmd_moments)

    d = sub.add_parser("density", help="spectral density on an angle grid")
    d.add_argument("--measure", choices=("nu", "clark", "stationary"), required=True)
    d.add_argument("--kappa", type=float, required=True)
    d.add_argument("--t", type=float, default=1.0)
    d.add_argument("--grid", type=int, default=256)
    d.add_argument("--r", type=float, default=0.999, help="radius for boundary values")
    d.add_argument("--zeta-angle", type=float, default=0.0, help="angle of zeta for the clark measure")
    _output_opts(d)
    d.set_defaults(func=cmd_density)

    b = sub.add_parser("boundary", help="boundary constants of the univalence domain (JSON)")
    b.add_argument("--kappa", type=float, required=True)
    b.add_argument("--t", type=float, required=True)
    b.add_argument("--n-points", type=int, default=64)
    _output_opts(b, ("json",))
    b.set_defaults(func=cmd_boundary)

    v = sub.add_parser("verify", help="run the invariant suites (JSON report)")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--seed", type=int, default=0)
    _output_opts(v, ("json",))
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    if getattr(args, "n_max", 1) < 1:
        print("error: --n-max must be positive", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (FreeJacobiError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
