"""The zero-curvature curve on a level set and its tangential structure.

On the non-convex levels a in (2, 4) the Gauss curvature K of {e = a}
vanishes on a finite union of disjoint closed curves. In the cosine
variables c_j = cos p_j that curve satisfies the pair of equations

    c1 + c2 + c3 = 3 - a,        1/c1 + 1/c2 + 1/c3 = 3 - a,

the second being equivalent to M = 0 wherever no c_j vanishes. Along the
curve three frame fields matter: the unit tangent w (parallel to
grad e x grad M), the zero-curvature principal direction Z (kernel
eigenvector of the projected Hessian), and the kernel field mu with
components proportional to tan p_j, extended continuously across the
hyperplanes p_j = +-pi/2.

Tangential points are the finitely many curve points where Z becomes
tangent to the curve, equivalently where ||P e'' P w|| = 0 with
P = I - nu nu^T. They come in two families: a closed form one with two
coordinates at +-pi/2 and the third at +-arccos(3 - a), and a root-found
one located by Newton's method on the map

    Phi(c) = (c1+c2+c3, 1/c1+1/c2+1/c3, Phi3),
    Phi3   = (1-c1^4) c2^3 c3^3 + (1-c2^4) c1^3 c3^3 + (1-c3^4) c1^3 c2^3,

whose third component is, up to a nonvanishing factor, the tangency
functional mu . grad M restricted to the curve.

The module also bundles sampled certificates for the assumptions the
decay estimates rest on, the degeneracy function D_a(omega), and cap
volume measurements for the curvature-band/normal-cap dichotomy.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import dispersion
from .errors import (CertificateViolation, ConvexLevel, ResidualFailure,
                     TracingFailure)
from .levelset import extract_surface
from .torus import distance, wrap

log = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.3

# Samples this close to a coordinate hyperplane p_j = +-pi/2 switch the
# kernel field mu to its continuous-limit expression.
MU_SWITCH = 1e-4


# ---------------------------------------------------------------------------
# frame fields


def nu_field(p):
    """Unit normal grad e / |grad e| of the level set through p."""
    g = np.sin(np.asarray(p, dtype=float))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def w_field(p):
    """Unit tangent of the zero-curvature curve: grad e x grad M, normalized."""
    grad_e = np.sin(np.asarray(p, dtype=float))
    _, grad_m = dispersion.m_field(p)
    v = np.cross(grad_e, grad_m)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def mu_field(p):
    """Kernel direction of the Gauss map along the zero-curvature curve.

    Componentwise proportional to tan p_j; implemented through the
    bounded representative (s1 c2 c3, s2 c1 c3, s3 c1 c2), which spans
    the same line. Where a cosine is below 1e-4 the two smallest-|cos|
    coordinates i, j take over via the limit relation mu_j/mu_i -> -s_j/s_i
    with the remaining component zero. Orientation is arbitrary; callers
    needing continuity fix it by propagation.
    """
    single = np.asarray(p).ndim == 1
    p = np.atleast_2d(np.asarray(p, dtype=float))
    s = np.sin(p)
    c = np.cos(p)
    v = np.stack([s[:, 0] * c[:, 1] * c[:, 2],
                  s[:, 1] * c[:, 0] * c[:, 2],
                  s[:, 2] * c[:, 0] * c[:, 1]], axis=1)
    small = np.abs(c).min(axis=1) < MU_SWITCH
    if np.any(small):
        idx = np.argsort(np.abs(c[small]), axis=1)
        lim = np.zeros((small.sum(), 3))
        rows = np.arange(small.sum())
        i, j = idx[:, 0], idx[:, 1]
        lim[rows, i] = s[small, i]
        lim[rows, j] = -s[small, j]
        v[small] = lim
    out = v / np.linalg.norm(v, axis=1, keepdims=True)
    return out[0] if single else out


def z_field(p, w=None):
    """Principal direction of the smaller-|kappa| curvature at p.

    Diagonalizes the projected Hessian in an orthonormal tangent basis
    and returns the eigenvector of the eigenvalue smaller in absolute
    value. The basis seed may be passed as w (any tangent field); the
    default uses the zero-curvature tangent.
    """
    single = np.asarray(p).ndim == 1
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if w is None:
        w = np.atleast_2d(w_field(p))
    else:
        w = np.atleast_2d(np.asarray(w, dtype=float))
    nu = np.atleast_2d(nu_field(p))
    t1 = w - (w * nu).sum(axis=1, keepdims=True) * nu
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(nu, t1)
    c = np.cos(p)
    b = np.empty((len(p), 2, 2))
    b[:, 0, 0] = (c * t1 * t1).sum(axis=1)
    b[:, 0, 1] = b[:, 1, 0] = (c * t1 * t2).sum(axis=1)
    b[:, 1, 1] = (c * t2 * t2).sum(axis=1)
    vals, vecs = np.linalg.eigh(b)
    pick = (np.abs(vals[:, 1]) < np.abs(vals[:, 0])).astype(int)
    rows = np.arange(len(p))
    ex = vecs[rows, 0, pick]
    ey = vecs[rows, 1, pick]
    z = ex[:, None] * t1 + ey[:, None] * t2
    return z[0] if single else z


def papw_norm(p, w=None):
    """|| P e''(p) P w(p) ||, the tangency residual along the curve."""
    single = np.asarray(p).ndim == 1
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if w is None:
        w = np.atleast_2d(w_field(p))
    else:
        w = np.atleast_2d(np.asarray(w, dtype=float))
    nu = np.atleast_2d(nu_field(p))
    c = np.cos(p)
    pw = w - (w * nu).sum(axis=1, keepdims=True) * nu
    apw = c * pw
    papw = apw - (apw * nu).sum(axis=1, keepdims=True) * nu
    out = np.linalg.norm(papw, axis=1)
    return float(out[0]) if single else out


def grad_k(p):
    """Gradient of the Gauss curvature field K = M / |grad e|^4."""
    p = np.asarray(p, dtype=float)
    s = np.sin(p)
    c = np.cos(p)
    g2 = (s * s).sum(axis=-1)
    g = np.sqrt(g2)
    m, grad_m = dispersion.m_field(p)
    # d|grad e|/dp_j = s_j c_j / |grad e|
    grad_g = s * c / g[..., None]
    return (grad_m / g2[..., None] ** 2
            - 4.0 * m[..., None] * grad_g / g[..., None] ** 5)


# ---------------------------------------------------------------------------
# curve extraction


@dataclass
class GammaCurve:
    """Sampled zero-curvature curve of one level.

    Each component is a closed polyline (the last sample connects back
    to the first). Frames are orientation-continuous along each
    component. d_a holds per-sample distances to the tangential set once
    it has been attached.
    """

    level: float
    components: list = field(default_factory=list)
    w: list = field(default_factory=list)
    z: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    residual_m: list = field(default_factory=list)
    residual_e: list = field(default_factory=list)
    d_a: list = None

    @property
    def is_empty(self):
        return not self.components

    @property
    def n_samples(self):
        return sum(len(c) for c in self.components)

    def all_samples(self):
        if self.is_empty:
            return np.empty((0, 3))
        return np.concatenate(self.components)

    def attach_tangential(self, tset):
        if tset.count == 0:
            self.d_a = [np.ones(len(c)) for c in self.components]
            return
        self.d_a = []
        for comp in self.components:
            d = distance(comp[:, None, :], tset.points[None, :, :])
            self.d_a.append(d.min(axis=1))


def _project_to_gamma(points, a, max_iter=30, tol=1e-13):
    """Newton-project points onto {e = a, M = 0}.

    Moves in the span of grad e and grad M (a 2x2 normal solve); both
    residuals are driven to the double precision floor, well under the
    1e-8 contract on returned samples.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    for _ in range(max_iter):
        e_res = dispersion.eval_e(p) - a
        m_res, grad_m = dispersion.m_field(p)
        live = np.maximum(np.abs(e_res), np.abs(m_res)) > tol
        if not live.any():
            break
        q = p[live]
        ge = np.sin(q)
        gm = grad_m[live]
        a11 = (ge * ge).sum(axis=1)
        a12 = (ge * gm).sum(axis=1)
        a22 = (gm * gm).sum(axis=1)
        det = a11 * a22 - a12 * a12
        r1 = e_res[live]
        r2 = m_res[live]
        x1 = (a22 * r1 - a12 * r2) / det
        x2 = (a11 * r2 - a12 * r1) / det
        p[live] = q - x1[:, None] * ge - x2[:, None] * gm
    return p, np.abs(dispersion.eval_e(p) - a), np.abs(dispersion.m_field(p)[0])


def _orient_chain(vectors):
    """Flip signs along the first axis so consecutive rows agree."""
    v = vectors.copy()
    for i in range(1, len(v)):
        if np.dot(v[i], v[i - 1]) < 0.0:
            v[i] = -v[i]
    return v


def _frames_for(samples):
    w = _orient_chain(w_field(samples))
    mu = _orient_chain(mu_field(samples))
    z = _orient_chain(z_field(samples, w=w))
    return w, z, mu


def extract_gamma(a, mesh, lam=DEFAULT_LAMBDA):
    """Trace the zero set of M on the given level-set mesh.

    Levels in (0, 2 - lam] or [4 + lam, 6) are uniformly convex and
    return an empty curve. Levels inside the non-convex window must keep
    distance lam from 2, 3 and 4; anything else raises ConvexLevel.

    Tracing marches sign changes of M across mesh triangles: every cut
    mesh edge carries one curve node (welded by edge id), every cut
    triangle one polyline segment, so nodes have degree two and the
    components are closed by construction. Nodes are then polished onto
    {e = a, M = 0} by a two-constraint Newton iteration and the frames
    (w, Z, mu) are attached with orientation continuity.
    """
    a = float(a)
    slack = 1e-12
    if 0.0 < a <= 2.0 - lam + slack or 4.0 + lam - slack <= a < 6.0:
        return GammaCurve(level=a)
    if not (2.0 + lam - slack <= a <= 4.0 - lam + slack
            and abs(a - 3.0) >= lam - slack):
        raise ConvexLevel(
            "level %g outside the traceable window [%g, %g] u [%g, %g]"
            % (a, 2.0 + lam, 3.0 - lam, 3.0 + lam, 4.0 - lam))
    if abs(mesh.level - a) > 1e-12:
        raise ValueError("mesh level %g does not match requested level %g"
                         % (mesh.level, a))

    m_vert, _ = dispersion.m_field(mesh.vertices)
    pos = m_vert > 0.0
    tri = mesh.triangles
    t_pos = pos[tri]
    cut = (t_pos.any(axis=1)) & (~t_pos.all(axis=1))
    if not np.any(cut):
        raise TracingFailure("no sign change of M found on level %g" % a)

    corners = mesh.corners()[cut]
    tvid = tri[cut]
    tsign = t_pos[cut]

    # Per cut triangle, exactly one corner differs from the other two;
    # the two cut edges join that odd corner to the others.
    odd = np.where(tsign.sum(axis=1) == 1,
                   np.argmax(tsign, axis=1), np.argmin(tsign, axis=1))
    rows = np.arange(len(tvid))
    oth1 = (odd + 1) % 3
    oth2 = (odd + 2) % 3

    def edge_nodes(a_idx, b_idx):
        va = tvid[rows, a_idx]
        vb = tvid[rows, b_idx]
        key = np.minimum(va, vb) * (2 ** 32) + np.maximum(va, vb)
        ma = m_vert[va]
        mb = m_vert[vb]
        t = ma / (ma - mb)
        pa = corners[rows, a_idx]
        pb = corners[rows, b_idx]
        return key, pa + t[:, None] * (pb - pa)

    k1, p1 = edge_nodes(odd, oth1)
    k2, p2 = edge_nodes(odd, oth2)

    keys = np.concatenate([k1, k2])
    pts = np.concatenate([p1, p2])
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    nodes = wrap(pts[first])
    seg = inv.reshape(2, -1).T          # node index pair per cut triangle

    # Every curve node sits on a mesh edge shared by exactly two cut
    # triangles, so its degree in the segment graph must be two.
    deg = np.bincount(seg.ravel(), minlength=len(uniq))
    if not np.all(deg == 2):
        raise TracingFailure(
            "curve graph has %d nodes of degree != 2 on level %g"
            % (int((deg != 2).sum()), a))

    neighbors = np.full((len(uniq), 2), -1, dtype=np.int64)
    slot = np.zeros(len(uniq), dtype=np.int64)
    for s0, s1 in seg:
        neighbors[s0, slot[s0]] = s1
        slot[s0] += 1
        neighbors[s1, slot[s1]] = s0
        slot[s1] += 1

    visited = np.zeros(len(uniq), dtype=bool)
    curve = GammaCurve(level=a)
    for start in range(len(uniq)):
        if visited[start]:
            continue
        chain = [start]
        visited[start] = True
        prev, cur = -1, start
        while True:
            n0, n1 = neighbors[cur]
            nxt = n1 if n0 == prev else n0
            if nxt == start:
                break
            chain.append(nxt)
            visited[nxt] = True
            prev, cur = cur, nxt
        samples, res_e, res_m = _project_to_gamma(nodes[chain], a)
        if res_e.max() > 1e-8 or res_m.max() > 1e-8:
            raise TracingFailure(
                "Newton polish left residuals %.2e / %.2e on level %g"
                % (res_e.max(), res_m.max(), a))
        samples = wrap(samples)
        w, z, mu = _frames_for(samples)
        curve.components.append(samples)
        curve.w.append(w)
        curve.z.append(z)
        curve.mu.append(mu)
        curve.residual_e.append(res_e)
        curve.residual_m.append(res_m)
    log.debug("level %g: %d curve components, %d samples",
              a, len(curve.components), curve.n_samples)
    return curve


def refine_gamma(gamma, max_spacing):
    """Insert Newton-projected midpoints until sample spacing is bounded.

    Returns a new curve; frames and residuals are rebuilt. Used by the
    dense-scan oracle, which needs spacing well below the feature scale
    of the tangency functional.
    """
    out = GammaCurve(level=gamma.level)
    for comp in gamma.components:
        samples = comp
        while True:
            nxt = np.roll(samples, -1, axis=0)
            gaps = np.linalg.norm(wrap(nxt - samples), axis=1)
            if gaps.max() <= max_spacing:
                break
            mids = wrap(samples + 0.5 * wrap(nxt - samples))
            mids, _, _ = _project_to_gamma(mids, gamma.level)
            mids = wrap(mids)
            merged = np.empty((len(samples) * 2, 3))
            merged[0::2] = samples
            merged[1::2] = mids
            samples = merged
        w, z, mu = _frames_for(samples)
        out.components.append(samples)
        out.w.append(w)
        out.z.append(z)
        out.mu.append(mu)
        out.residual_e.append(np.abs(dispersion.eval_e(samples)
                                     - gamma.level))
        out.residual_m.append(np.abs(dispersion.m_field(samples)[0]))
    if gamma.d_a is not None:
        out.d_a = None
    return out


# ---------------------------------------------------------------------------
# tangential points


@dataclass
class TangentialSet:
    """Tangential points of one level with their normals and provenance.

    provenance[i] is 1 for the closed-form family (two coordinates at
    +-pi/2) and 2 for Newton-found roots of the Phi map.
    """

    level: float
    points: np.ndarray
    normals: np.ndarray
    provenance: np.ndarray
    residuals: np.ndarray

    @property
    def count(self):
        return int(len(self.points))


def case1_points(a):
    """The closed-form tangential family at level a.

    Two coordinates +-pi/2, the third +-arccos(3 - a), in every
    position: 24 points for a != 3.
    """
    third = float(np.arccos(3.0 - a))
    pts = []
    for pos in range(3):
        for s3 in (+1.0, -1.0):
            for s1 in (+1.0, -1.0):
                for s2 in (+1.0, -1.0):
                    p = np.empty(3)
                    others = [i for i in range(3) if i != pos]
                    p[pos] = s3 * third
                    p[others[0]] = s1 * np.pi / 2
                    p[others[1]] = s2 * np.pi / 2
                    pts.append(p)
    pts = wrap(np.array(pts))
    # collapse duplicates (they appear when arccos(3-a) = pi/2, i.e. a=3)
    keep = []
    for q in pts:
        if not keep or distance(np.array(keep), q).min() > 1e-9:
            keep.append(q)
    return np.array(keep)


def _phi_map(c, a):
    c1, c2, c3 = c
    phi3 = ((1 - c1 ** 4) * c2 ** 3 * c3 ** 3
            + (1 - c2 ** 4) * c1 ** 3 * c3 ** 3
            + (1 - c3 ** 4) * c1 ** 3 * c2 ** 3)
    return np.array([c1 + c2 + c3 - (3.0 - a),
                     1 / c1 + 1 / c2 + 1 / c3 - (3.0 - a),
                     phi3])


def _phi_jacobian(c):
    c1, c2, c3 = c

    def d(ci, cj, ck):
        return (-4 * ci ** 3 * cj ** 3 * ck ** 3
                + 3 * ci ** 2 * ((1 - cj ** 4) * ck ** 3
                                 + (1 - ck ** 4) * cj ** 3))

    return np.array([
        [1.0, 1.0, 1.0],
        [-1 / c1 ** 2, -1 / c2 ** 2, -1 / c3 ** 2],
        [d(c1, c2, c3), d(c2, c1, c3), d(c3, c1, c2)],
    ])


def case2_roots(a, n_axis=20, tol=1e-12):
    """Newton multistart for roots of Phi(c) = (3-a, 3-a, 0).

    Seeds fill a grid over (+-[0.1, 1])^2 in (c1, c2) with c3 fixed by
    the plane constraint; diverging seeds are logged and skipped. Roots
    are deduplicated up to coordinate permutation sign structure in
    c-space (within 1e-8).
    """
    half = np.linspace(0.1, 1.0, n_axis // 2)
    axis = np.concatenate([-half[::-1], half])
    roots = []
    diverged = 0
    for c1 in axis:
        for c2 in axis:
            c3 = (3.0 - a) - c1 - c2
            if not 0.1 <= abs(c3) <= 1.0:
                continue
            c = np.array([c1, c2, c3])
            ok = False
            for _ in range(50):
                f = _phi_map(c, a)
                if np.max(np.abs(f)) < tol:
                    ok = True
                    break
                try:
                    step = np.linalg.solve(_phi_jacobian(c), f)
                except np.linalg.LinAlgError:
                    break
                # cap the step length so seeds cannot vault the poles at c_j=0
                smax = np.max(np.abs(step))
                c = c - step * min(1.0, 0.25 / max(smax, 1e-30))
                if (not np.all(np.isfinite(c)) or np.max(np.abs(c)) > 1.5
                        or np.min(np.abs(c)) < 1e-4):
                    break
            if not ok:
                diverged += 1
                continue
            if np.max(np.abs(c)) > 1.0 - 1e-9:
                continue
            if not any(np.max(np.abs(c - r)) < 1e-8 for r in roots):
                roots.append(c)
    if diverged:
        log.info("case-2 Newton: %d seeds diverged at level %g", diverged, a)
    return np.array(roots) if roots else np.empty((0, 3))


def find_tangential_points(a, gamma, residual_tol=1e-6):
    """All tangential points of the level: closed form plus Newton roots.

    Every candidate must pass the projected-Hessian residual
    ||P e'' P w|| <= 1e-6; a closed-form candidate failing it raises
    ResidualFailure, a root-found one is logged and dropped. Duplicates
    are merged within 1e-6 in the torus metric. The curve passed in gets
    its per-sample tangential distances attached.
    """
    if gamma.is_empty:
        tset = TangentialSet(level=float(a), points=np.empty((0, 3)),
                             normals=np.empty((0, 3)),
                             provenance=np.empty(0, dtype=int),
                             residuals=np.empty(0))
        gamma.attach_tangential(tset)
        return tset
    a = float(a)

    pts = []
    prov = []
    for q in case1_points(a):
        r = float(papw_norm(q))
        if r > residual_tol:
            raise ResidualFailure(
                "closed-form tangential point %s has residual %.2e" % (q, r))
        pts.append(q)
        prov.append(1)

    for c in case2_roots(a):
        base = np.arccos(c)
        for signs in np.ndindex(2, 2, 2):
            sgn = 1.0 - 2.0 * np.array(signs)
            q = wrap(sgn * base)
            r = float(papw_norm(q))
            if r > residual_tol:
                log.info("dropping case-2 candidate %s, residual %.2e",
                         q, r)
                continue
            pts.append(q)
            prov.append(2)

    pts = np.array(pts)
    prov = np.array(prov)
    keep = []
    for i in range(len(pts)):
        if all(distance(pts[i], pts[j]) > 1e-6 for j in keep):
            keep.append(i)
    pts = pts[keep]
    prov = prov[keep]

    tset = TangentialSet(level=a, points=pts, normals=nu_field(pts),
                         provenance=prov, residuals=papw_norm(pts))
    gamma.attach_tangential(tset)
    log.debug("level %g: %d tangential points (%d closed form, %d roots)",
              a, tset.count, int((prov == 1).sum()), int((prov == 2).sum()))
    return tset


def dense_scan_zeros(gamma, spacing=2e-3, basin=0.02, zero_tol=1e-5):
    """Brute-force zeros of ||P e'' P w|| along a densely resampled curve.

    Walks every component at the given spacing, collects local minima
    below the basin threshold, and sharpens each by golden-section on
    the arc parameter (with Newton reprojection). Returns the refined
    zero locations; used as an oracle for the tangential-point solver.
    """
    dense = refine_gamma(gamma, spacing)
    zeros = []
    for comp in dense.components:
        vals = papw_norm(comp)
        m = len(comp)
        prv = np.roll(vals, 1)
        nxt = np.roll(vals, -1)
        cand = np.flatnonzero((vals <= prv) & (vals <= nxt)
                              & (vals < basin))
        for i in cand:
            lo = comp[(i - 1) % m]
            hi = comp[(i + 1) % m]

            def f(t, lo=lo, hi=hi):
                q = lo + t * wrap(hi - lo)
                q, _, _ = _project_to_gamma(q[None, :], gamma.level)
                return float(papw_norm(q[0]))

            # golden-section on the two-segment bracket around the minimum
            gr = (np.sqrt(5.0) - 1.0) / 2.0
            t0, t1 = 0.0, 1.0
            tl = t1 - gr * (t1 - t0)
            tr = t0 + gr * (t1 - t0)
            fl, fr = f(tl), f(tr)
            for _ in range(40):
                if fl < fr:
                    t1, tr, fr = tr, tl, fl
                    tl = t1 - gr * (t1 - t0)
                    fl = f(tl)
                else:
                    t0, tl, fl = tl, tr, fr
                    tr = t0 + gr * (t1 - t0)
                    fr = f(tr)
            tb = 0.5 * (t0 + t1)
            q = lo + tb * wrap(hi - lo)
            q, _, _ = _project_to_gamma(q[None, :], gamma.level)
            if float(papw_norm(q[0])) < zero_tol:
                zeros.append(wrap(q[0]))
    if not zeros:
        return np.empty((0, 3))
    zeros = np.array(zeros)
    keep = []
    for i in range(len(zeros)):
        if all(distance(zeros[i], zeros[j]) > 1e-4 for j in keep):
            keep.append(i)
    return zeros[keep]


# ---------------------------------------------------------------------------
# degeneracy and certificates


def d_omega(tset, omega):
    """Minimal |nu(p^(j)) x omega| over the tangential set; 1 if empty."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    if tset.count == 0:
        return 1.0
    return float(np.linalg.norm(np.cross(tset.normals, omega), axis=1).min())


def preimage_count(a, omega, grid=4000):
    """Number of points on the level with normal exactly omega.

    With sin p_j = omega_j sqrt(t) and cos p_j = sigma_j sqrt(1 -
    omega_j^2 t), the level constraint becomes, per sign pattern sigma,

        sum_j sigma_j sqrt(1 - omega_j^2 t) = 3 - a,

    a scalar root-count in t on (0, 1/max omega_j^2]. Roots are bracketed
    on a dense grid and sharpened by brentq; each verified root yields
    one preimage point.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    t_max = 1.0 / np.max(omega ** 2)
    t = np.linspace(t_max * 1e-9, t_max, grid)
    under = np.sqrt(np.clip(1.0 - omega[None, :] ** 2 * t[:, None],
                            0.0, None))
    count = 0
    for signs in np.ndindex(2, 2, 2):
        sgn = 1.0 - 2.0 * np.array(signs)
        f = under @ sgn - (3.0 - a)
        bracket = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
        for i in bracket:
            root = brentq(
                lambda x: (sgn * np.sqrt(np.clip(
                    1.0 - omega ** 2 * x, 0.0, None))).sum() - (3.0 - a),
                t[i], t[i + 1], xtol=1e-14)
            s = omega * np.sqrt(root)
            c = sgn * np.sqrt(np.clip(1.0 - s ** 2, 0.0, None))
            p = np.arctan2(s, c)
            if abs(dispersion.eval_e(p) - a) < 1e-9:
                count += 1
    return count


@dataclass
class AssumptionCertificate:
    """Sampled lower/upper bounds behind the decay machinery.

    c2: min |grad e| over the sampled levels of the window.
    c3: min |grad e x grad K| along the zero-curvature curves.
    c4: max Gauss-map preimage count over random directions.
    c6: min of ||P e'' P w|| / d_a over curve samples away from the
        tangential points.
    All are sampled estimates, not certified bounds.
    """

    c2: float
    c3: float
    c4: int
    c6: float
    metadata: dict


def check_assumptions(a_window, n=64, samples=500, levels=5,
                      lam=DEFAULT_LAMBDA, seed=0):
    """Sample the certificate constants over a window of levels.

    Raises CertificateViolation if any estimate fails positivity or the
    preimage count exceeds 64. The preimage directions are split evenly
    across the sampled levels.
    """
    lo, hi = float(a_window[0]), float(a_window[1])
    grid = np.linspace(lo, hi, levels)
    rng = np.random.default_rng(seed)

    c2 = np.inf
    c3 = np.inf
    c6 = np.inf
    c4 = 0
    counts = []
    for a in grid:
        mesh = extract_surface(a, n)
        c2 = min(c2, float(mesh.geometry.grad_norm.min()))
        gamma = extract_gamma(a, mesh, lam=lam)
        if not gamma.is_empty:
            tset = find_tangential_points(a, gamma)
            for comp, w, da in zip(gamma.components, gamma.w, gamma.d_a):
                ge = np.sin(comp)
                gk = grad_k(comp)
                c3 = min(c3, float(np.linalg.norm(
                    np.cross(ge, gk), axis=1).min()))
                far = da >= 0.05
                if far.any():
                    ratio = papw_norm(comp[far], w=w[far]) / da[far]
                    c6 = min(c6, float(ratio.min()))
        for _ in range(max(1, samples // levels)):
            omega = rng.normal(size=3)
            cnt = preimage_count(a, omega)
            counts.append(cnt)
            c4 = max(c4, cnt)

    cert = AssumptionCertificate(
        c2=c2, c3=c3, c4=c4, c6=c6,
        metadata={"window": (lo, hi), "resolution": n, "levels": levels,
                  "directions": len(counts),
                  "mean_preimages": float(np.mean(counts))})
    if not (c2 > 0 and c3 > 0 and c6 > 0) or c4 > 64:
        raise CertificateViolation(
            "certificate failed: c2=%.3g c3=%.3g c6=%.3g c4=%d"
            % (c2, c3, c6, c4))
    return cert


# ---------------------------------------------------------------------------
# cap volumes


@dataclass(frozen=True)
class CapQuery:
    """Curvature band [eps, 4 eps] intersected with a normal cap of
    half-width delta around +-zeta."""

    eps: float
    delta: float
    zeta: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.eps <= 0.1):
            raise ValueError("eps must lie in (0, 0.1], got %r"
                             % (self.eps,))
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        z = np.asarray(self.zeta, dtype=float)
        object.__setattr__(self, "zeta", z / np.linalg.norm(z))


@dataclass
class CapVolume:
    volume: float
    branch: int
    constant: float
    d_zeta: float


# Dichotomy threshold: branch 2 is declared when D(zeta) <= this factor
# times (eps + delta). Calibrated on generic directions at a = 2.5.
DICHOTOMY_FACTOR = 4.0


def cap_volume(mesh, q, tset, max_level=6):
    """Surface volume of the curvature-band/normal-cap intersection.

    Counts refined-leaf areas where eps <= |K| <= 4 eps and
    |nu x zeta| <= delta, both evaluated in closed form at leaf
    centroids. Triangles are refined hierarchically; a leaf is kept
    alive only while the band and cap conditions can still be met
    within its diameter (Lipschitz slack from |grad K| and the largest
    curvature at the centroid), so memory stays proportional to the
    measured region rather than to the whole mesh.

    Returns the measured volume together with the dichotomy branch:
    branch 2 when D(zeta) <= DICHOTOMY_FACTOR (eps + delta) (the bound
    on D holds, the volume statement is vacuous), else branch 1 with the
    fitted constant volume sqrt(D) / (eps delta).
    """
    h = 2.0 * np.pi / mesh.resolution
    want = min(q.eps, q.delta) / 3.0
    levels = int(np.clip(np.ceil(np.log2(max(h / max(want, 1e-9), 1.0))),
                         0, max_level))

    c = mesh.corners()
    v0, v1, v2 = c[:, 0], c[:, 1], c[:, 2]
    areas = mesh.areas

    def predicate(pts, slack_scale):
        cs = dispersion.curvature(pts)
        gk = np.linalg.norm(grad_k(pts), axis=1)
        kmax = np.maximum(np.abs(cs.kappa1), np.abs(cs.kappa2))
        sk = slack_scale * gk
        sn = slack_scale * kmax
        band = ((np.abs(cs.gauss) >= q.eps - sk)
                & (np.abs(cs.gauss) <= 4.0 * q.eps + sk))
        cap = (np.linalg.norm(np.cross(cs.normal, q.zeta), axis=1)
               <= q.delta + sn)
        return band & cap

    for lev in range(levels):
        diam = h / 2.0 ** lev
        keep = predicate((v0 + v1 + v2) / 3.0, diam)
        v0, v1, v2 = v0[keep], v1[keep], v2[keep]
        areas = areas[keep]
        if len(areas) == 0:
            break
        m01 = 0.5 * (v0 + v1)
        m12 = 0.5 * (v1 + v2)
        m20 = 0.5 * (v2 + v0)
        v0 = np.concatenate([v0, m01, m20, m01])
        v1 = np.concatenate([m01, v1, m12, m12])
        v2 = np.concatenate([m20, m12, v2, m20])
        areas = np.tile(areas / 4.0, 4)

    if len(areas):
        final = predicate((v0 + v1 + v2) / 3.0, 0.0)
        vol = float(areas[final].sum())
    else:
        vol = 0.0

    d = d_omega(tset, q.zeta)
    if d <= DICHOTOMY_FACTOR * (q.eps + q.delta):
        branch = 2
        constant = d / (q.eps + q.delta) if q.eps + q.delta > 0 else 0.0
    else:
        branch = 1
        constant = vol * np.sqrt(d) / (q.eps * q.delta)
    return CapVolume(volume=vol, branch=branch, constant=float(constant),
                     d_zeta=float(d))
