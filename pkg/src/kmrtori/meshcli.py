"""The immersion X = Re int Phi, triangulated meshes, OBJ/PLY export, and the CLI.

Fundamental domain: each sheet is cut by the real and imaginary axes into
four quadrants, and each quadrant into an inner (|z| <= 1, z-chart) and an
outer (|u| <= 1, u = 1/z) polar patch -- 16 patches in all.  Branch points
lie on the imaginary axes, so no patch contains one in its interior; the
imaginary-axis patch edges (which may run along a branch cut) are never
integrated along.  Nodes where |g| leaves [eps, 1/eps] are clipped.

Patches are integrated outward from the base point z = 1 on sheet 1.  A patch
not containing it starts from a node shared with an already integrated
neighbour.  X is multivalued, so independently integrated seam values agree
only up to the period lattice Z P_A + Z P_gamma1; quads that straddle the
jump of a patch's own integration are emitted with locally integrated
duplicate vertices, so no triangle spans a period.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, KMRError, NumericalError, PoleError
from .riemann_surface import (SurfaceParams, TorusPoint, continue_along, curve_poly,
                              sheet_function)
from .special_functions import ParamPath, integrate_complex
from .weierstrass import (conformality_residual, ends, gauss_coeffs, phi_coeffs,
                          special_points_in_chart)

HALF_PI = 0.5 * math.pi
GL_ORDER = 12
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class MeshError(NumericalError):
    """A patch could not be integrated; ``partial`` holds the mesh built so far."""

    kind = "mesh_error"

    def __init__(self, message, patch=None, partial=None):
        super().__init__(message)
        self.patch = patch
        self.partial = partial

    def to_dict(self):
        d = super().to_dict()
        d["patch"] = self.patch
        return d


# ---------------------------------------------------------------------------
# the immersion
# ---------------------------------------------------------------------------

def immerse(p: TorusPoint, base: TorusPoint, path: ParamPath | None, params: SurfaceParams,
            rot=1.0, n: int = 2000) -> np.ndarray:
    """X(p) - X(base) = Re int_path Phi, with w continued from ``base`` along the z-curve.

    ``path`` must run (in the z-plane, avoiding z = infinity) from base.z to
    p.z; it may be None only when p == base.
    """
    if path is None:
        if p == base:
            return np.zeros(3)
        raise DomainError("a path is required unless p == base")
    if base.at_infinity or p.at_infinity:
        raise DomainError("immerse works in the z-chart; base and p must be finite points")
    gm = gauss_coeffs(params.alpha, params.beta)
    ts = np.linspace(path.t0, path.t1, n)
    zs = np.array([complex(path.z(t)) for t in ts])
    if abs(zs[0] - complex(base.z)) > 1e-9 * (1 + abs(zs[0])):
        raise DomainError("path does not start at base")
    if abs(zs[-1] - complex(p.z)) > 1e-9 * (1 + abs(zs[-1])):
        raise DomainError("path does not end at p")
    end_z = [complex(gm.zero_z)]
    if gm.pole_u != 0:
        end_z.append(1.0 / complex(gm.pole_u))
    a, d = zs[:-1], np.diff(zs)
    dmin = np.inf
    for e in end_z:
        # distance from the end to each chord of the sampled path
        s = np.clip(np.real((e - a) * np.conj(d)) / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
        dmin = min(dmin, float(np.min(np.abs(a + s * d - e))) / (1.0 + abs(e)))
    if dmin < 1e-8:
        raise PoleError("path passes through an end; the immersion diverges there")
    lifted = continue_along(zs, base, params)
    ws = np.array([q.w for q in lifted])
    if abs(ws[-1] - complex(p.w)) > abs(ws[-1] + complex(p.w)):
        raise DomainError("p lies on the other sheet over the end of the lifted path")
    lam, mu = params.lam, params.mu
    dt = (path.t1 - path.t0) / (n - 1)

    def f(t):
        z = complex(path.z(t))
        k = min(n - 1, max(0, int(round((t - path.t0) / dt))))
        r = complex(np.sqrt(complex(curve_poly(z, lam))))
        w = r if abs(r - ws[k]) <= abs(r + ws[k]) else -r
        return phi_coeffs("z", z, w, gm, mu, rot) * path.dz(t)

    from .invariants import PATH_SETTINGS
    return np.real(integrate_complex(f, path.t0, path.t1, PATH_SETTINGS).value)


# ---------------------------------------------------------------------------
# mesh records
# ---------------------------------------------------------------------------

@dataclass
class MeshRequest:
    params: SurfaceParams
    resolution: int = 16
    end_truncation: float = 0.05
    copies: tuple = (2, 2)

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise DomainError("resolution must be an integer >= 2")
        if not (0.0 < self.end_truncation < 1.0):
            raise DomainError("end truncation eps must satisfy 0 < eps < 1")
        c = tuple(int(k) for k in self.copies)
        if len(c) != 2 or min(c) < 1:
            raise DomainError("copies must be two integers >= 1")
        self.copies = c


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray
    patch: np.ndarray
    sheet: np.ndarray
    patch_names: tuple = ()
    stats: dict = field(default_factory=dict)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)),
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def validate(self):
        nv = self.n_vertices
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise DomainError("triangle references a missing vertex")
        if nv and np.max(np.abs(np.linalg.norm(self.normals, axis=1) - 1.0)) > 1e-9:
            raise DomainError("normals are not unit vectors")
        return self


def gauss_normal(g):
    """Inverse stereographic image of g (projection from the north pole)."""
    g = np.asarray(g, dtype=complex)
    inf = ~np.isfinite(g)
    g = np.where(inf, 0.0, g)
    m = np.abs(g) ** 2
    n = np.stack([2 * g.real, 2 * g.imag, m - 1.0], axis=-1) / (m + 1.0)[..., None]
    n[inf] = (0.0, 0.0, 1.0)
    return n


# ---------------------------------------------------------------------------
# patches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Patch:
    sheet: int      # +1: w = w_I (z-chart), -1: w = -w_I
    chart: str      # 'z' (inner, |z| <= 1) or 'u' (outer, |u| <= 1)
    quadrant: int   # polar angles [k pi/2, (k+1) pi/2] in chart coordinates

    @property
    def name(self):
        return f"sheet{1 if self.sheet > 0 else 2}-{'inner' if self.chart == 'z' else 'outer'}-q{self.quadrant}"


PATCHES = tuple(Patch(s, c, k) for s in (1, -1) for c in ("z", "u") for k in range(4))


def _chart_sheet(chart, x, lam):
    """w_I expressed in the chart (w~ = u^2 w_I(1/u) in the u-chart)."""
    x = np.asarray(x, dtype=complex)
    if chart == "z":
        return sheet_function(x, lam)
    return x * x * sheet_function(1.0 / x, lam)


def radial_grid(resolution, lam):
    """r_i = i/N, with a node too close to the branch-point modulus 1/lambda pushed off it."""
    r = np.arange(resolution + 1) / resolution
    gap = 0.25 / resolution
    k = int(np.argmin(np.abs(r - 1.0 / lam)))
    if 0 < k < resolution and abs(r[k] - 1.0 / lam) < gap:
        r[k] = 1.0 / lam + (gap if r[k] >= 1.0 / lam else -gap)
    return r


class _PatchGrid:
    """Polar grid of one patch: node (i, j) at r_i e^{i phi_j}; all i = 0 nodes are one point."""

    def __init__(self, patch: Patch, r, res, params, gm, eps):
        self.patch = patch
        self.res = res
        lo = patch.quadrant * HALF_PI
        self.phi = lo + HALF_PI * np.arange(res + 1) / res
        self.r = r
        R, P = np.meshgrid(r, self.phi, indexing="ij")
        self.x = R * np.exp(1j * P)
        self.x[0, :] = 0.0
        # sheet values at nodes: limits from the open quadrant
        mid = lo + 0.25 * math.pi
        phr = self.phi + 1e-7 * np.sign(mid - self.phi)
        rr = np.maximum(r, 1e-7)
        xr = rr[:, None] * np.exp(1j * phr[None, :])
        ref = patch.sheet * _chart_sheet(patch.chart, xr, params.lam)
        root = np.sqrt(curve_poly(self.x, params.lam).astype(complex))
        self.w = np.where(np.abs(root - ref) <= np.abs(root + ref), root, -root)
        self.g = gm(patch.chart, self.x)
        ag = np.abs(self.g)
        with np.errstate(invalid="ignore"):
            self.keep = np.isfinite(ag) & (ag >= eps) & (ag <= 1.0 / eps)
        # imaginary-axis columns: never integrate radially along them
        ax = np.abs(np.cos(self.phi)) < 1e-12
        self.axis_col = ax

    def node_id(self, i, j):
        return 0 if i == 0 else 1 + (i - 1) * (self.res + 1) + j

    def n_nodes(self):
        return 1 + self.res * (self.res + 1)


def _edge_increments(edges, chart, sheet, params, gm, rot, specials):
    """Complex int Phi along polar edges given as (kind, r0, r1, phi0, phi1) rows.

    kind 0: radial (phi fixed), 1: angular (r fixed).  Composite Gauss-Legendre,
    subdividing edges that pass close to a singular point.  Returns the
    increments and the maximum conformality residual at the quadrature nodes.
    """
    if not edges:
        return np.zeros((0, 3), dtype=complex), 0.0
    E = np.array(edges, dtype=float)
    kind, r0, r1, p0, p1 = E.T
    lam, mu = params.lam, params.mu
    # a conservative distance from each edge to the nearest singular point
    s = np.linspace(0, 1, 33)
    rs = r0[:, None] + (r1 - r0)[:, None] * s
    ps = p0[:, None] + (p1 - p0)[:, None] * s
    xs = rs * np.exp(1j * ps)
    length = np.abs(r1 - r0) + r0 * np.abs(p1 - p0)
    d = np.min(np.abs(xs[:, :, None] - specials[None, None, :]), axis=(1, 2)) - length / 64
    d = np.maximum(d, 1e-300)
    m = np.clip(np.ceil(2.0 * length / d), 1, 400).astype(int)
    out = np.zeros((len(E), 3), dtype=complex)
    worst = 0.0
    for mk in np.unique(m):
        idx = np.nonzero(m == mk)[0]
        # parameters t in [0, 1], mk sub-intervals of GL_ORDER nodes
        a = np.arange(mk)[:, None] / mk
        t = (a + (0.5 * (_GL_X[None, :] + 1.0)) / mk).ravel()
        wts = np.tile(_GL_W, mk) / (2.0 * mk)
        R = r0[idx, None] + (r1 - r0)[idx, None] * t
        Ph = p0[idx, None] + (p1 - p0)[idx, None] * t
        X = R * np.exp(1j * Ph)
        dX = np.where(kind[idx, None] == 0, (r1 - r0)[idx, None] * np.exp(1j * Ph),
                      1j * X * (p1 - p0)[idx, None])
        Y = sheet * _chart_sheet(chart, X, lam)
        phi = phi_coeffs(chart, X, Y, gm, mu, rot)
        if not np.all(np.isfinite(phi)):
            raise NumericalError("non-finite Weierstrass form on a mesh edge")
        worst = max(worst, float(np.max(conformality_residual(phi))))
        out[idx] = np.einsum("cek,ek,k->ec", phi, dX, wts)
    return out, worst


def _integrate_patch(pg: _PatchGrid, anchor, x_anchor, params, gm, rot):
    """BFS integration of X over the kept nodes; returns (X, edge dict, conformality)."""
    res = pg.res
    pc = pg.patch
    edges, keys = [], []
    kept = pg.keep
    # radial edges (including from the centre), skipping imaginary-axis columns
    for j in range(res + 1):
        if pg.axis_col[j]:
            continue
        for i in range(res):
            if kept[i, j] and kept[i + 1, j]:
                edges.append((0, pg.r[i], pg.r[i + 1], pg.phi[j], pg.phi[j]))
                keys.append((pg.node_id(i, j), pg.node_id(i + 1, j)))
    for i in range(1, res + 1):
        for j in range(res):
            if kept[i, j] and kept[i, j + 1]:
                edges.append((1, pg.r[i], pg.r[i], pg.phi[j], pg.phi[j + 1]))
                keys.append((pg.node_id(i, j), pg.node_id(i, j + 1)))
    specials = special_points_in_chart(pc.chart, params, gm)
    inc, conf = _edge_increments(edges, pc.chart, pc.sheet, params, gm, rot, specials)
    dX = {}
    adj = {}
    for (a, b), v in zip(keys, inc.real):
        dX[(a, b)] = v
        dX[(b, a)] = -v
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    X = {anchor: np.asarray(x_anchor, dtype=float)}
    queue = [anchor]
    head = 0
    while head < len(queue):
        a = queue[head]
        head += 1
        for b in sorted(adj.get(a, ())):
            if b not in X:
                X[b] = X[a] + dX[(a, b)]
                queue.append(b)
    return X, dX, conf


def _canonical_key(chart, x, w):
    """(z, w) in the z-chart if |z| <= 1 else in the u-chart, plus a chart flag (real 5-vector)."""
    if chart == "z":
        z, wz = x, w
    else:
        if x == 0:
            return None
        z, wz = 1.0 / x, w / (x * x)
    if abs(z) <= 1.0 + 1e-12:
        return (z.real, z.imag, wz.real, wz.imag, 0.0)
    u = 1.0 / z
    return (u.real, u.imag, (wz * u * u).real, (wz * u * u).imag, 100.0)


def _nodes_with_keys(pg):
    """[(node id, key)] for each distinct node of a patch grid."""
    out = [(0, _canonical_key(pg.patch.chart, complex(pg.x[0, 0]), complex(pg.w[0, 0])))]
    for i in range(1, pg.res + 1):
        for j in range(pg.res + 1):
            out.append((pg.node_id(i, j), _canonical_key(pg.patch.chart, complex(pg.x[i, j]),
                                                        complex(pg.w[i, j]))))
    return out


def _seams(grids):
    """Pairs ((patch a, node a), (patch b, node b)) of the same torus point in different patches."""
    pts, owners = [], []
    for pi, pg in enumerate(grids):
        for nid, key in _nodes_with_keys(pg):
            if key is not None:
                pts.append(key)
                owners.append((pi, nid))
    tree = cKDTree(np.array(pts))
    pairs = sorted(tree.query_pairs(1e-9))
    return [(owners[a], owners[b]) for a, b in pairs if owners[a][0] != owners[b][0]]


def _lattice_reduce(d, basis):
    """Residual of d modulo the lattice spanned by the columns of ``basis``."""
    c, *_ = np.linalg.lstsq(basis, d, rcond=None)
    k = np.round(c)
    return float(np.linalg.norm(d - basis @ k)), k


def build_mesh(req: MeshRequest, rot=1.0) -> Mesh:
    """Triangulated fundamental domain plus lattice copies (see module docstring)."""
    params = req.params
    res, eps = int(req.resolution), float(req.end_truncation)
    gm = gauss_coeffs(params.alpha, params.beta)
    r = radial_grid(res, params.lam)
    grids = [_PatchGrid(pc, r, res, params, gm, eps) for pc in PATCHES]
    seams = _seams(grids)
    by_node = {}
    for (pa, na), (pb, nb) in seams:
        by_node.setdefault((pa, na), []).append((pb, nb))
        by_node.setdefault((pb, nb), []).append((pa, na))

    def kept(pi, nid):
        pg = grids[pi]
        if nid == 0:
            return bool(pg.keep[0, 0])
        i, j = 1 + (nid - 1) // (res + 1), (nid - 1) % (res + 1)
        return bool(pg.keep[i, j])

    # base point z = 1 on sheet 1: node (res, 0) of the inner first-quadrant patch
    # (an end sits at z = 1 on the half-line alpha = pi/2; then the nearest kept node is used)
    base_patch = PATCHES.index(Patch(1, "z", 0))
    bg = grids[base_patch]
    cand = sorted((abs(bg.x[i, j] - 1.0), i, j) for i in range(res + 1) for j in range(res + 1)
                  if bg.keep[i, j])
    if not cand:
        raise MeshError("every node of the base patch is clipped; decrease eps", bg.patch.name)
    _, bi, bj = cand[0]
    results = {}
    conf_worst = 0.0
    order = [base_patch]
    anchors = {base_patch: (bg.node_id(bi, bj), np.zeros(3))}
    pending = set(range(len(grids))) - {base_patch}
    while order:
        pi = order.pop(0)
        pg = grids[pi]
        anchor, xa = anchors[pi]
        try:
            X, dX, conf = _integrate_patch(pg, anchor, xa, params, gm, rot)
        except KMRError as e:
            raise MeshError(f"integration failed in patch {pg.patch.name}: {e}", pg.patch.name,
                            _assemble(grids, results, res)) from e
        conf_worst = max(conf_worst, conf)
        results[pi] = (X, dX)
        for nid in sorted(X):
            for pb, nb in by_node.get((pi, nid), ()):
                if pb in pending and kept(pb, nb):
                    pending.discard(pb)
                    anchors[pb] = (nb, X[nid])
                    order.append(pb)
    if pending:
        name = PATCHES[min(pending)].name
        raise MeshError(f"patch {name} is not connected to the base point through kept nodes",
                        name, _assemble(grids, results, res))
    # seam agreement modulo the period lattice
    from .invariants import period_lattice
    pa_vec, p1_vec = period_lattice(params) if rot == 1.0 else _rotated_lattice(params, rot)
    basis = np.stack([pa_vec, p1_vec], axis=1)
    seam_raw, seam_mod, n_seam = 0.0, 0.0, 0
    for (pa, na), (pb, nb) in seams:
        Xa, Xb = results[pa][0], results[pb][0]
        if na in Xa and nb in Xb:
            diff = Xa[na] - Xb[nb]
            n_seam += 1
            seam_raw = max(seam_raw, float(np.linalg.norm(diff)))
            seam_mod = max(seam_mod, _lattice_reduce(diff, basis)[0])
    mesh = _assemble(grids, results, res)
    mesh.stats.update({"conformality_max": conf_worst, "seam_pairs": n_seam,
                       "seam_max_raw": seam_raw, "seam_max_mod_lattice": seam_mod,
                       "period_A": [float(v) for v in pa_vec],
                       "period_gamma1": [float(v) for v in p1_vec]})
    return _with_copies(mesh, req.copies, pa_vec, p1_vec)


def _rotated_lattice(params, rot):
    from .invariants import make_cycle, period_flux
    gm = gauss_coeffs(params.alpha, params.beta)
    return (period_flux(make_cycle("gammaA", params, gm), params, gm, rot).P,
            period_flux(make_cycle("gamma1", params, gm), params, gm, rot).P)


def _assemble(grids, results, res):
    """Vertices and triangles of all integrated patches (in patch order)."""
    V, N, PT, SH, T = [], [], [], [], []
    dup = 0
    for pi in sorted(results):
        pg = grids[pi]
        X, dX = results[pi]
        nrm = gauss_normal(pg.g)
        index = {}
        for nid in sorted(X):
            i, j = (0, 0) if nid == 0 else (1 + (nid - 1) // (res + 1), (nid - 1) % (res + 1))
            index[nid] = len(V)
            V.append(X[nid])
            N.append(nrm[i, j])
            PT.append(pi)
            SH.append(pg.patch.sheet)

        def local(ids, path_edges):
            # positions integrated locally along the quad's own edges from ids[0]
            pos = {ids[0]: X[ids[0]]}
            for a, b in path_edges:
                if (a, b) not in dX:
                    return None
                pos[b] = pos[a] + dX[(a, b)]
            return pos

        for i in range(res):
            for j in range(res):
                if i == 0:
                    c, b1, b2 = 0, pg.node_id(1, j), pg.node_id(1, j + 1)
                    ids = [c, b1, b2]
                    if not all(k in X for k in ids):
                        continue
                    jr = j if not pg.axis_col[j] else j + 1
                    first = pg.node_id(1, jr)
                    other = b2 if first == b1 else b1
                    pos = local([c, first, other], [(c, first), (first, other)])
                    tris = [(c, b1, b2)]
                else:
                    a00, a10 = pg.node_id(i, j), pg.node_id(i + 1, j)
                    a01, a11 = pg.node_id(i, j + 1), pg.node_id(i + 1, j + 1)
                    ids = [a00, a10, a01, a11]
                    if not all(k in X for k in ids):
                        continue
                    if not pg.axis_col[j]:
                        pos = local([a00], [(a00, a10), (a00, a01), (a10, a11)])
                    else:
                        pos = local([a01], [(a01, a11), (a01, a00), (a11, a10)])
                    tris = [(a00, a10, a11), (a00, a11, a01)]
                if pos is None:
                    continue
                scale = 1.0 + max(float(np.linalg.norm(X[k])) for k in ids)
                consistent = all(np.linalg.norm(pos[k] - X[k]) <= 1e-7 * scale for k in ids)
                if consistent:
                    T.extend([index[a], index[b], index[c]] for a, b, c in tris)
                else:
                    dup += 1
                    loc = {}
                    for k in ids:
                        loc[k] = len(V)
                        ii, jj = (0, 0) if k == 0 else (1 + (k - 1) // (res + 1), (k - 1) % (res + 1))
                        V.append(pos[k])
                        N.append(nrm[ii, jj])
                        PT.append(pi)
                        SH.append(pg.patch.sheet)
                    T.extend([loc[a], loc[b], loc[c]] for a, b, c in tris)
    m = Mesh(np.array(V, dtype=float).reshape(-1, 3), np.array(T, dtype=np.int64).reshape(-1, 3),
             np.array(N, dtype=float).reshape(-1, 3), np.array(PT, dtype=np.int64),
             np.array(SH, dtype=np.int64), tuple(p.name for p in PATCHES))
    m.stats["duplicated_quads"] = dup
    m.stats["grid_nodes_per_patch"] = 1 + res * (res + 1)
    m.stats["kept_nodes"] = int(sum(len(results[p][0]) for p in results))
    return m


def _with_copies(m: Mesh, copies, pa, p1):
    n1, n2 = copies
    if (n1, n2) == (1, 1):
        return m.validate()
    nv = m.n_vertices
    blocks = [(k1, k2) for k1 in range(n1) for k2 in range(n2)]
    V = np.concatenate([m.vertices + k1 * pa + k2 * p1 for k1, k2 in blocks])
    T = np.concatenate([m.triangles + b * nv for b in range(len(blocks))])
    out = Mesh(V, T, np.tile(m.normals, (len(blocks), 1)), np.tile(m.patch, len(blocks)),
               np.tile(m.sheet, len(blocks)), m.patch_names, dict(m.stats))
    out.stats["copies"] = [n1, n2]
    return out.validate()


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _f(x):
    return "%.17g" % (0.0 if x == 0 else x)


def mesh_to_text(m: Mesh, fmt: str) -> str:
    fmt = fmt.lower()
    lines = []
    if fmt == "obj":
        lines.append("# KMR torus mesh")
        lines.append(f"# vertices {m.n_vertices} faces {m.n_triangles}")
        lines.extend("v %s %s %s" % tuple(map(_f, v)) for v in m.vertices)
        lines.extend("vn %s %s %s" % tuple(map(_f, n)) for n in m.normals)
        lines.extend("f {0}//{0} {1}//{1} {2}//{2}".format(*(int(k) + 1 for k in t)) for t in m.triangles)
    elif fmt == "ply":
        lines += ["ply", "format ascii 1.0", "comment KMR torus mesh",
                  f"element vertex {m.n_vertices}",
                  "property double x", "property double y", "property double z",
                  "property double nx", "property double ny", "property double nz",
                  f"element face {m.n_triangles}", "property list uchar int vertex_indices",
                  "end_header"]
        lines.extend(" ".join(map(_f, np.concatenate([v, n]))) for v, n in zip(m.vertices, m.normals))
        lines.extend("3 %d %d %d" % tuple(int(k) for k in t) for t in m.triangles)
    else:
        raise DomainError(f"unknown mesh format {fmt!r}; choose obj or ply")
    return "\n".join(lines) + "\n"


def export_mesh(m: Mesh, fmt: str, destination) -> None:
    """Write ASCII OBJ or PLY; byte-identical for identical meshes."""
    text = mesh_to_text(m.validate(), fmt)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    with open(destination, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def read_mesh(path_or_text, fmt: str):
    """Minimal reader for the two formats: (vertices, normals, triangles)."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text, encoding="ascii") as fh:
            text = fh.read()
    V, N, T = [], [], []
    fmt = fmt.lower()
    if fmt == "obj":
        for ln in text.splitlines():
            parts = ln.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                V.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                N.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                T.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    elif fmt == "ply":
        lines = text.splitlines()
        if lines[0] != "ply":
            raise DomainError("not a PLY file")
        nv = nf = 0
        k = 0
        for k, ln in enumerate(lines):
            if ln.startswith("element vertex"):
                nv = int(ln.split()[2])
            elif ln.startswith("element face"):
                nf = int(ln.split()[2])
            elif ln == "end_header":
                break
        body = lines[k + 1:]
        for ln in body[:nv]:
            x = [float(s) for s in ln.split()]
            V.append(x[:3])
            N.append(x[3:6])
        for ln in body[nv:nv + nf]:
            x = [int(s) for s in ln.split()]
            if x[0] != 3:
                raise DomainError("only triangle faces are supported")
            T.append(x[1:4])
    else:
        raise DomainError(f"unknown mesh format {fmt!r}")
    return (np.array(V, dtype=float).reshape(-1, 3), np.array(N, dtype=float).reshape(-1, 3),
            np.array(T, dtype=np.int64).reshape(-1, 3))


# ---------------------------------------------------------------------------
# checks used by `verify`
# ---------------------------------------------------------------------------

def end_loop_path(params: SurfaceParams, name: str = "A"):
    """(start point, closed z-path) representing the end loop gamma_X as a z-curve."""
    gm = gauss_coeffs(params.alpha, params.beta)
    es = ends(params, gm)
    p = es[name]
    chart, x, y = p.chart()
    lam = params.lam
    zero_z = complex(gm.zero_z)
    pole_z = (1.0 / complex(gm.pole_u)) if gm.pole_u != 0 else None
    if p.at_infinity:
        others = [abs(zero_z), lam]
        R = 2.0 * max(others)
        path = ParamPath(lambda t: R * np.exp(-1j * t), lambda t: -1j * R * np.exp(-1j * t),
                         0.0, 2 * math.pi)
        z0 = R
        hint = y * z0 * z0
    else:
        zc = 1.0 / x if chart == "u" else x
        cands = [1j * lam, -1j * lam, 1j / lam, -1j / lam, zero_z]
        if pole_z is not None:
            cands.append(pole_z)
        d = [abs(zc - c) for c in cands if abs(zc - c) > 1e-12 * (1 + abs(zc))]
        rad = 0.1 * min(d)
        path = ParamPath.circle(zc, rad)
        z0 = complex(path.z(path.t0))
        hint = complex(p.w) if chart == "z" else y / (x * x)
    root = complex(np.sqrt(complex(curve_poly(z0, lam))))
    w0 = root if abs(root - hint) <= abs(root + hint) else -root
    return TorusPoint(z0, w0), path


def end_cycle_displacement(params: SurfaceParams, name: str = "A") -> np.ndarray:
    q, path = end_loop_path(params, name)
    return immerse(q, q, path, params, n=4000)


# ---------------------------------------------------------------------------
# JSON output and the command line
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def dumps(obj, indent=2, _level=0) -> str:
    """JSON with every float written to 17 significant digits."""
    obj = _jsonable(obj) if _level == 0 else obj
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(str(obj))
        return "%.17g" % obj
    return json.dumps(obj)


def _point_dict(p: TorusPoint):
    if p.at_infinity:
        return {"z": None, "at_infinity": True, "w_over_z2": p.w}
    return {"z": p.z, "at_infinity": False, "w": p.w}


def cmd_info(params: SurfaceParams):
    from .invariants import end_period_flux_closed_form, isometry_group, rotation_for
    from .special_functions import f1_of_theta
    gm = gauss_coeffs(params.alpha, params.beta)
    es = ends(params, gm)
    iso = isometry_group(params)
    cf = end_period_flux_closed_form(params)
    _, a, E = rotation_for(params)
    return {"theta": params.theta, "alpha": params.alpha, "beta": params.beta,
            "lambda": params.lam, "mu": params.mu,
            "sigma": gm.sigma, "delta": gm.delta,
            "ends": {n: dict(_point_dict(p), kind=es.kinds[n]) for n, p in es.items()},
            "isometry_group": iso.as_dict(),
            "e_factor": E, "a": a,
            "period_end_a": cf.P, "flux_end_a": cf.F,
            "vertical_period_gamma1": f1_of_theta(params.theta),
            "vertical_flux_gamma2": 2 * math.pi}


def cmd_periods(params: SurfaceParams):
    from .invariants import all_period_fluxes, check_closing
    pf = all_period_fluxes(params)
    return {"cycles": {n: {"period": v.P, "flux": v.F} for n, v in pf.items()},
            "closing": check_closing(params).as_dict()}


def limits_table():
    from .invariants import limit_classify
    third = math.pi / 3
    rows = [("theta -> 0, (alpha, beta) = (0, 0)", (0.0, 0.0, 0.0)),
            ("theta -> 0, generic (alpha, beta)", (0.0, 0.5, 0.5)),
            ("theta -> 0, alpha = pi/2", (0.0, HALF_PI, 0.0)),
            ("theta -> pi/2, (alpha, beta) = (0, pi/2)", (HALF_PI, 0.0, HALF_PI)),
            ("theta -> pi/2, generic (alpha, beta)", (HALF_PI, 0.5, 0.5)),
            ("(alpha, beta) -> (0, theta)", (third, 0.0, third)),
            ("(alpha, beta) -> (0, pi - theta)", (third, 0.0, math.pi - third)),
            ("alpha -> -pi/2", (third, -HALF_PI, 1.0)),
            ("beta -> pi", (third, 0.3, math.pi))]
    return [{"stratum": s, "triple": list(t), "limit": limit_classify(*t).as_dict()} for s, t in rows]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(f"{self.prog}: {message}")


def _parser():
    p = _Parser(prog="kmrtori", description="KMR doubly periodic minimal tori: invariants, "
                                            "classifying map and meshes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (("info", "ends, isometry group and closed-form invariants"),
                           ("periods", "numeric periods/fluxes of the six cycles and closing residuals"),
                           ("classify", "classifying map C = (a, b)"),
                           ("conjugate", "conjugate parameters and self-conjugacy check")):
        s = sub.add_parser(name, help=helptext)
        for a in ("theta", "alpha", "beta"):
            s.add_argument(a, type=float)
    s = sub.add_parser("invert", help="solve C(theta, alpha, beta) = (a, b)")
    s.add_argument("a", type=float)
    s.add_argument("re_b", type=float)
    s.add_argument("im_b", type=float)
    sub.add_parser("limits", help="taxonomy of limits over the boundary strata")
    s = sub.add_parser("mesh", help="export a triangulated fundamental domain")
    for a in ("theta", "alpha", "beta"):
        s.add_argument(a, type=float)
    s.add_argument("--resolution", type=int, default=16)
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--copies", type=int, nargs=2, default=(2, 2), metavar=("N1", "N2"))
    s.add_argument("--format", choices=("obj", "ply"), default="obj")
    s.add_argument("-o", "--output", required=True)
    s = sub.add_parser("verify", help="run the invariant suite; exit 0 iff all checks pass")
    s.add_argument("--grid", type=int, default=5)
    return p


def run(argv=None):
    """Execute a command; returns (exit code, JSON-able result)."""
    from .moduli import ClassPoint, check_self_conjugate, classify, invert_classify, self_conjugate_ok
    args = _parser().parse_args(argv)
    c = args.command
    if c in ("info", "periods", "classify", "conjugate", "mesh"):
        params = SurfaceParams(args.theta, args.alpha, args.beta)
    if c == "info":
        return 0, cmd_info(params)
    if c == "periods":
        return 0, cmd_periods(params)
    if c == "classify":
        return 0, classify(params).as_dict()
    if c == "invert":
        r = invert_classify(ClassPoint(args.a, complex(args.re_b, args.im_b)))
        return 0, r.as_dict()
    if c == "conjugate":
        rep = check_self_conjugate(params)
        return 0, dict(rep.as_dict(), ok=self_conjugate_ok(rep))
    if c == "limits":
        return 0, {"limits": limits_table()}
    if c == "mesh":
        m = build_mesh(MeshRequest(params, args.resolution, args.eps, tuple(args.copies)))
        export_mesh(m, args.format, args.output)
        return 0, {"output": args.output, "format": args.format, "vertices": m.n_vertices,
                   "triangles": m.n_triangles, "stats": m.stats}
    if c == "verify":
        from .suite import run_suite
        results = run_suite(args.grid)
        ok = all(r.passed for r in results)
        return (0 if ok else 3), {"passed": ok, "checks": [r.as_dict() for r in results]}
    raise DomainError(f"unknown command {c!r}")


def cli_main(argv=None) -> int:
    """Entry point: JSON on stdout; errors as JSON on stderr (exit 1 validation, 2 numerical)."""
    try:
        code, out = run(argv)
    except DomainError as e:
        sys.stderr.write(dumps({"error": e.to_dict()}) + "\n")
        return 1
    except NumericalError as e:
        sys.stderr.write(dumps({"error": e.to_dict()}) + "\n")
        return 2
    sys.stdout.write(dumps(out) + "\n")
    return code


def main():
    sys.exit(cli_main())
