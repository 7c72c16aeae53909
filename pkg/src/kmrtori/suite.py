"""The invariant suite run by ``kmrtori verify`` (acceptance checks 1-10).

Every check compares a numerically integrated quantity against an
independent closed form or identity; each returns a ``CheckResult``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import KMRError, NoConvergenceError
from .invariants import (all_period_fluxes, check_closing, end_period_flux_closed_form,
                         scherk_limit_a)
from .riemann_surface import HALF_PI, SurfaceParams, in_domain
from .special_functions import ParamPath, f1_of_theta, integrate_path, mu_of_theta
from .weierstrass import END_NAMES, ends, gauss_coeffs, residue_at_end, residue_numeric

GRID_EXCLUSION = 0.1


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    worst: float = 0.0
    tolerance: float = 0.0
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.number:2d} {self.name}: worst={self.worst:.3e} "
                f"tol={self.tolerance:.0e} ({self.seconds:.1f}s)")

    def as_dict(self):
        return {"criterion": self.number, "name": self.name, "passed": self.passed,
                "worst": self.worst, "tolerance": self.tolerance, "seconds": self.seconds,
                "detail": self.detail}


def parameter_grid(n: int):
    """n x n x n triples in I: interior theta and alpha nodes, beta = pi k / n.

    Triples within GRID_EXCLUSION (in the (alpha, beta) plane) of the
    excluded points (0, theta), (0, pi - theta) are dropped.
    """
    if n < 1:
        raise ValueError("grid size must be >= 1")
    th = [HALF_PI * (k + 1) / (n + 1) for k in range(n)]
    al = [-HALF_PI + math.pi * (k + 1) / (n + 1) for k in range(n)]
    be = [math.pi * k / n for k in range(n)]
    out = []
    for t in th:
        for a in al:
            for b in be:
                if in_domain(t, a, b) is not None:
                    continue
                if min(math.hypot(a, b - t), math.hypot(a, b - (math.pi - t))) < GRID_EXCLUSION:
                    continue
                out.append((t, a, b))
    return out


def _run(number, name, tol, fn):
    t0 = time.perf_counter()
    try:
        worst, detail, ok = fn()
    except KMRError as e:
        worst, detail, ok = math.inf, {"error": e.to_dict()}, False
    passed = bool(ok) and worst <= tol
    return CheckResult(number, name, passed, float(worst), tol, detail, time.perf_counter() - t0)


def _rel(x, y):
    x, y = np.asarray(x), np.asarray(y)
    return float(np.linalg.norm(x - y) / max(1.0, np.linalg.norm(y)))


# -- 1 ------------------------------------------------------------------------

def check_normalization(thetas=(0.2, 0.5, math.pi / 4, 1.0, 1.35)):
    """Contour integral of dh = mu dz / w_I over |z| = 1 equals 2 pi i."""
    from .riemann_surface import sheet_function
    from .invariants import PATH_SETTINGS

    def fn():
        errs = {}
        for t in thetas:
            p = SurfaceParams(t, 0.0, 0.0)
            path = ParamPath.circle(0j, 1.0)
            v = integrate_path(lambda z, s: p.mu / sheet_function(z, p.lam), path, PATH_SETTINGS).value
            errs[f"{t:.6g}"] = abs(v - 2j * math.pi)
        return max(errs.values()), {"errors": errs}, True
    return _run(1, "normalization of dh", 1e-8, fn)


# -- 2, 3, 4, 5, 6 (one pass over the grid) ----------------------------------

class GridRows(list):
    """(params, period/flux table) rows plus the grid points that failed to integrate."""

    def __init__(self, rows=(), failures=()):
        super().__init__(rows)
        self.failures = list(failures)


def _grid_data(grid):
    rows, failures = [], []
    for tr in grid:
        p = SurfaceParams(*tr)
        try:
            rows.append((p, all_period_fluxes(p)))
        except KMRError as e:
            failures.append({"point": list(tr), "error": e.to_dict()})
    return GridRows(rows, failures)


def _with_failures(rows, fn):
    """Any grid point that failed to integrate fails the check."""
    def wrapped():
        worst, detail, ok = fn()
        failures = getattr(rows, "failures", [])
        if failures:
            detail = dict(detail, failed_points=failures)
        return worst, detail, ok and not failures
    return wrapped


def check_end_closed_form(rows):
    def fn():
        worst, at = 0.0, None
        for p, pf in rows:
            cf = end_period_flux_closed_form(p)
            e = max(_rel(pf["gammaA"].P, cf.P), _rel(pf["gammaA"].F, cf.F))
            if e > worst:
                worst, at = e, p.triple()
        return worst, {"points": len(rows), "worst_at": at}, True
    return _run(2, "end period/flux closed form", 1e-7, _with_failures(rows, fn))


def check_homology(rows):
    def fn():
        worst, at, negative = 0.0, None, True
        for p, pf in rows:
            f1 = f1_of_theta(p.theta)
            negative = negative and f1 < 0 and pf["gamma1"].P[2] < 0
            e = max(float(np.linalg.norm(pf["gamma2"].P)) / 1e-8,
                    abs(pf["gamma2"].F[2] - 2 * math.pi) / 1e-8,
                    abs(pf["gamma1"].P[2] - f1) / 1e-7,
                    float(np.linalg.norm(pf["gamma1"].F + pf["gammaA"].F)) / 1e-8)
            if e > worst:
                worst, at = e, p.triple()
        # reported in units of the individual tolerances
        return worst, {"points": len(rows), "worst_at": at, "f1_negative": negative}, negative
    return _run(3, "homology invariants (ratio to tolerance)", 1.0, _with_failures(rows, fn))


def check_end_relations(rows):
    def fn():
        worst, at, dh_worst = 0.0, None, 0.0
        for p, pf in rows:
            gm = gauss_coeffs(p.alpha, p.beta)
            es = ends(p, gm)
            PA, FA = pf["gammaA"].P, pf["gammaA"].F
            s = {"gammaAprime": (1, -1), "gammaAdoubleprime": (-1, -1), "gammaAtripleprime": (-1, 1)}
            e = 0.0
            for c, (sp, sf) in s.items():
                e = max(e, _rel(pf[c].P, sp * PA), _rel(pf[c].F, sf * FA))
            R = {n: residue_at_end(es[n], p, "Phi", gm) for n in END_NAMES}
            e = max(e, _rel(R["A"], -np.conj(R["Aprime"])), _rel(R["A"], -R["Adoubleprime"]),
                    _rel(R["A"], np.conj(R["Atripleprime"])))
            for n in END_NAMES:
                dh_worst = max(dh_worst, abs(residue_numeric(es[n], p, "dh", gm=gm)))
            if e > worst:
                worst, at = e, p.triple()
        return worst, {"points": len(rows), "worst_at": at, "dh_residue_max": dh_worst}, dh_worst <= 1e-10
    return _run(4, "end relations and dh residues", 1e-9, _with_failures(rows, fn))


def check_closing_all(rows):
    def fn():
        worst, at = 0.0, None
        for p, _ in rows:
            r = check_closing(p)
            if r.residual > worst:
                worst, at = r.residual, p.triple()
        base = {}
        for t in sorted({p.theta for p, _ in rows}):
            r = check_closing(SurfaceParams(t, 0.0, 0.0))
            a, b = r.L[0].real, r.L[3]
            base[f"{t:.6g}"] = max(abs(a - mu_of_theta(t)), abs(b))
        bw = max(base.values()) if base else 0.0
        return max(worst, bw), {"points": len(rows), "worst_at": at, "alpha_beta_zero": base}, True
    return _run(5, "closing conditions", 1e-8, _with_failures(rows, fn))


def check_uniqueness_direction(rows):
    def fn():
        smallest, at, n = math.inf, None, 0
        for p, pf in rows:
            if max(abs(p.alpha), p.beta) < 0.1:
                continue
            n += 1
            d = float(np.linalg.norm(pf["gamma2"].F - np.array([0.0, 0.0, 2 * math.pi])))
            if d < smallest:
                smallest, at = d, p.triple()
        ok = n == 0 or smallest > 1e-3
        # worst is reported as 1e-3 / smallest distance (must be < 1)
        return (1e-3 / smallest if n else 0.0), {"points": n, "min_distance": smallest,
                                                 "closest_at": at}, ok
    return _run(6, "F_gamma2 differs from (0,0,2pi) off alpha=beta=0", 1.0, _with_failures(rows, fn))


# -- 7 ------------------------------------------------------------------------

SELF_CONJUGATE_TRIPLES = [(t, a, b) for t in (0.3, math.pi / 4, 1.2)
                          for a in (-0.6, 0.3, 0.9) for b in (0.3, 1.1, 2.4)]


def check_self_conjugacy(triples=SELF_CONJUGATE_TRIPLES):
    from .moduli import check_self_conjugate, conjugate_params

    def fn():
        worst, at = 0.0, None
        for tr in triples:
            rep = check_self_conjugate(SurfaceParams(*tr))
            if rep.max_mismatch > worst:
                worst, at = rep.max_mismatch, tr
        s = conjugate_params(SurfaceParams(math.pi / 4, 0.3, 0.4)).scale
        return worst, {"triples": len(triples), "worst_at": at, "scale_at_pi_over_4": s}, s == 1.0
    return _run(7, "self-conjugacy", 1e-6, fn)


# -- 8 ------------------------------------------------------------------------

def check_local_diffeo(grid):
    from .moduli import classify, invert_classify, jacobian_C, scaled_det

    def fn():
        min_det, worst_rt, at, bad = math.inf, 0.0, None, []
        for tr in grid:
            p = SurfaceParams(*tr)
            d = abs(scaled_det(jacobian_C(p)))
            min_det = min(min_det, d)
            try:
                r = invert_classify(classify(p))
                q = r.params
                if abs(p.alpha - HALF_PI) < 1e-12:
                    e = abs(q.theta - p.theta) + abs(q.alpha - p.alpha)
                else:
                    e = float(np.max(np.abs(np.subtract(q.triple(), p.triple()))))
            except NoConvergenceError:
                e = math.inf
                bad.append(tr)
            if e > worst_rt:
                worst_rt, at = e, tr
        return worst_rt, {"points": len(grid), "min_abs_scaled_det": min_det,
                          "worst_round_trip_at": at, "failed": bad}, min_det > 1e-6
    return _run(8, "Jacobian nonsingular and inversion round trip", 1e-6, fn)


# -- 9 ------------------------------------------------------------------------

def check_scherk(thetas=(0.2, 0.1, 0.05, 0.02), alpha0=0.5, beta0=0.5):
    from .moduli import classify, invert_classify, scherk_boundary

    def fn():
        c = scherk_boundary(HALF_PI)
        exact = c.a == 2.0 and c.b == complex(0.0, 2 * math.pi)
        try:
            invert_classify(c)
            rejected = False
        except NoConvergenceError as e:
            rejected = bool(e.near_scherk_arc)
        target = scherk_limit_a(alpha0, beta0)
        rel = [abs(classify(SurfaceParams(t, alpha0, beta0)).a - target) / target for t in thetas]
        trend = all(x >= y for x, y in zip(rel, rel[1:]))
        detail = {"closed_form_exact": exact, "inversion_rejected": rejected,
                  "limit_a": target, "relative_gaps": dict(zip([f"{t:g}" for t in thetas], rel)),
                  "monotone": trend}
        return rel[-1], detail, exact and rejected and trend
    return _run(9, "Scherk boundary and singly periodic limit", 0.05, fn)


# -- 10 -----------------------------------------------------------------------

def check_mesh(triple=(0.7, 0.3, 0.4), resolution=12, eps=0.05):
    from .meshcli import MeshRequest, build_mesh, end_cycle_displacement, mesh_to_text, read_mesh

    def fn():
        p = SurfaceParams(*triple)
        req = MeshRequest(p, resolution, eps, (2, 1))
        m1, m2 = build_mesh(req), build_mesh(req)
        st = m1.stats
        stable, parsed = True, True
        for fmt in ("obj", "ply"):
            t1, t2 = mesh_to_text(m1, fmt), mesh_to_text(m2, fmt)
            stable = stable and t1 == t2
            V, N, T = read_mesh(t1, fmt)
            parsed = parsed and V.shape[0] == m1.n_vertices and T.shape[0] == m1.n_triangles \
                and np.array_equal(T, m1.triangles) and np.allclose(V, m1.vertices, rtol=0, atol=1e-15)
        loop = end_cycle_displacement(p, "A")
        cf = end_period_flux_closed_form(p).P
        e_loop = float(np.linalg.norm(loop - cf))
        e_copy = float(np.linalg.norm(np.asarray(st["period_A"]) - cf))
        worst = max(st["conformality_max"] / 1e-10, st["seam_max_mod_lattice"] / 1e-6,
                    e_loop / 1e-6, e_copy / 1e-6)
        detail = {"vertices": m1.n_vertices, "triangles": m1.n_triangles,
                  "conformality_max": st["conformality_max"], "seam_max_mod_lattice": st["seam_max_mod_lattice"],
                  "end_loop_error": e_loop, "copy_translation_error": e_copy,
                  "byte_stable": stable, "parse_round_trip": parsed}
        return worst, detail, stable and parsed
    return _run(10, "mesh integrity (ratio to tolerance)", 1.0, fn)


def run_suite(grid_n: int = 5, progress=None):
    """All ten checks; ``progress`` (optional callable) receives each result as it completes."""
    grid = parameter_grid(grid_n)
    out = []

    def add(r):
        out.append(r)
        if progress:
            progress(r)
    add(check_normalization())
    rows = _grid_data(grid)
    add(check_end_closed_form(rows))
    add(check_homology(rows))
    add(check_end_relations(rows))
    add(check_closing_all(rows))
    add(check_uniqueness_direction(rows))
    add(check_self_conjugacy())
    add(check_local_diffeo(grid))
    add(check_scherk())
    add(check_mesh())
    return out
