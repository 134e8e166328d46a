"""Zero-curvature curve, tangential points, certificates, cap volumes."""

import numpy as np
import pytest

from latsurf import curvegeom, dispersion, levelset
from latsurf.errors import CertificateViolation, ConvexLevel
from latsurf.torus import distance, wrap

A = 2.5


@pytest.fixture(scope="module")
def mesh():
    return levelset.extract_surface(A, 64)


@pytest.fixture(scope="module")
def gamma(mesh):
    return curvegeom.extract_gamma(A, mesh)


@pytest.fixture(scope="module")
def tset(gamma):
    return curvegeom.find_tangential_points(A, gamma)


def test_convex_levels_give_empty_curve():
    for a in (1.0, 0.5, 5.5):
        g = curvegeom.extract_gamma(a, levelset.extract_surface(a, 32))
        assert g.is_empty
        ts = curvegeom.find_tangential_points(a, g)
        assert ts.count == 0
        assert curvegeom.d_omega(ts, np.array([1.0, 0, 0])) == 1.0


def test_window_guard():
    for a in (2.2, 2.85, 3.05, 4.2):
        m = levelset.extract_surface(a, 16)
        with pytest.raises(ConvexLevel):
            curvegeom.extract_gamma(a, m)
    # boundary levels of the window are admitted
    for a in (2.3, 2.7, 3.3, 3.7):
        curvegeom.extract_gamma(a, levelset.extract_surface(a, 32))


def test_mesh_level_mismatch(mesh):
    with pytest.raises(ValueError):
        curvegeom.extract_gamma(2.6, mesh)


def test_curve_residuals_and_reciprocal_identity(gamma):
    assert len(gamma.components) > 0
    for res_e, res_m in zip(gamma.residual_e, gamma.residual_m):
        assert res_e.max() <= 1e-8
        assert res_m.max() <= 1e-8
    p = gamma.all_samples()
    c = np.cos(p)
    ok = np.abs(c).min(axis=1) > 1e-3
    reci = np.abs((1.0 / c[ok]).sum(axis=1) - (3.0 - A))
    assert reci.max() <= 1e-6


def test_frames_orthogonal_and_aligned(gamma):
    p = gamma.all_samples()
    nu = curvegeom.nu_field(p)
    w = np.concatenate(gamma.w)
    z = np.concatenate(gamma.z)
    mu = np.concatenate(gamma.mu)
    for f in (w, z, mu):
        assert np.abs((f * nu).sum(axis=1)).max() <= 1e-6
        assert np.abs(np.linalg.norm(f, axis=1) - 1.0).max() <= 1e-12
    # the zero-curvature direction coincides with the kernel field on the curve
    assert np.abs((z * mu).sum(axis=1)).min() >= 1.0 - 1e-4


def test_w_matches_cross_product_component_formula(gamma):
    # on c1+c2+c3 = 3-a the cross product grad e x grad M reduces to
    # components s_j s_k (c_j - c_k)(1 - (3-a) c_i)
    p = gamma.all_samples()
    s, c = np.sin(p), np.cos(p)
    f = np.stack([
        s[:, 1] * s[:, 2] * (c[:, 1] - c[:, 2]) * (1 - (3 - A) * c[:, 0]),
        s[:, 0] * s[:, 2] * (c[:, 2] - c[:, 0]) * (1 - (3 - A) * c[:, 1]),
        s[:, 0] * s[:, 1] * (c[:, 0] - c[:, 1]) * (1 - (3 - A) * c[:, 2]),
    ], axis=1)
    f /= np.linalg.norm(f, axis=1, keepdims=True)
    w = np.concatenate(gamma.w)
    assert np.linalg.norm(np.cross(f, w), axis=1).max() <= 1e-10


def test_z_is_near_kernel_of_projected_hessian(gamma):
    p = gamma.all_samples()
    z = np.concatenate(gamma.z)
    assert curvegeom.papw_norm(p, w=z).max() <= 1e-8


def test_case1_points_closed_form(tset):
    q = np.array([np.pi / 2, np.pi / 2, np.arccos(0.5)])
    d = distance(tset.points, q)
    assert d.min() <= 1e-6
    # the recovered point lies on the curve exactly
    assert abs(dispersion.eval_e(q) - A) <= 1e-15
    assert abs(dispersion.m_field(q)[0]) <= 1e-15
    assert tset.count == 24
    assert tset.residuals.max() <= 1e-10
    sep = min(distance(tset.points[i], tset.points[j])
              for i in range(tset.count) for j in range(i + 1, tset.count))
    assert sep >= 1e-2


def test_dense_scan_finds_no_unreported_zero(gamma, tset):
    zeros = curvegeom.dense_scan_zeros(gamma, spacing=5e-3)
    assert len(zeros) > 0
    to_reported = distance(zeros[:, None, :],
                           tset.points[None, :, :]).min(axis=1)
    assert to_reported.max() <= 1e-3
    # and every reported point is confirmed by the scan
    to_zero = distance(tset.points[:, None, :],
                       zeros[None, :, :]).min(axis=1)
    assert to_zero.max() <= 1e-3


def test_mu_limit_at_coordinate_hyperplanes():
    q = np.array([np.pi / 2, np.pi / 2, np.arccos(0.5)])
    mu = curvegeom.mu_field(q)
    target = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    assert min(np.linalg.norm(mu - target),
               np.linalg.norm(mu + target)) <= 1e-9
    # continuity across the switch: nearby on-curve points agree in direction
    eps = 5e-5
    near = np.array([np.pi / 2 - eps, np.pi / 2 + eps, np.arccos(0.5)])
    near, _, _ = curvegeom._project_to_gamma(near[None, :], A)
    mu_near = curvegeom.mu_field(near[0])
    assert abs(np.dot(mu, mu_near)) >= 1.0 - 1e-4


def test_d_omega_against_exhaustive_min(tset):
    assert curvegeom.d_omega(tset, tset.normals[0]) <= 1e-12
    omega = np.array([1.0, 0.0, 0.0])
    got = curvegeom.d_omega(tset, omega)
    brute = min(np.linalg.norm(np.cross(n, omega)) for n in tset.normals)
    assert got == pytest.approx(brute, abs=1e-15)
    assert got > 0.0


def test_preimage_count_convex_exactly_one():
    rng = np.random.default_rng(11)
    for a in (0.5, 1.2, 1.5):
        for _ in range(20):
            assert curvegeom.preimage_count(a, rng.normal(size=3)) == 1


def test_preimage_points_verified():
    # root-counting is verified against a brute-force normal-map scan:
    # count surface vertices whose normal is within the angular bin of omega
    rng = np.random.default_rng(5)
    omega = rng.normal(size=3)
    omega /= np.linalg.norm(omega)
    cnt = curvegeom.preimage_count(A, omega)
    assert 1 <= cnt <= 64
    mesh = levelset.extract_surface(A, 96)
    mis = np.linalg.norm(np.cross(mesh.geometry.normal, omega), axis=1)
    same_side = mesh.geometry.normal @ omega > 0.0
    clusters = mesh.vertices[(mis < 0.02) & same_side]
    # greedy cluster count of near-preimage vertices
    found = []
    for q in clusters:
        if not found or distance(np.array(found), q).min() > 0.3:
            found.append(q)
    assert cnt == len(found)


def test_certificate_window_positive():
    cert = curvegeom.check_assumptions((2.3, 2.7), n=32, samples=60, levels=3)
    assert cert.c2 > 0 and cert.c3 > 0 and cert.c6 > 0
    assert 0 < cert.c4 <= 64
    assert cert.metadata["directions"] == 60


def test_papw_lower_bound_along_curve(gamma, tset):
    # tangency residual grows at least linearly with the distance to the
    # tangential set; the fitted slope stays away from zero
    ratios = []
    for comp, w, da in zip(gamma.components, gamma.w, gamma.d_a):
        far = da >= 0.05
        assert far.any()
        ratios.append(float(
            (curvegeom.papw_norm(comp[far], w=w[far]) / da[far]).min()))
    assert min(ratios) > 0.2


def test_u_combination_positive_near_curve():
    for a in (2.5, 3.5):
        m = levelset.extract_surface(a, 64)
        g = curvegeom.extract_gamma(a, m)
        mv = dispersion.m_field(m.vertices)[0]
        pts = np.concatenate([g.all_samples(),
                              m.vertices[np.abs(mv) <= 1e-3]])
        s, c = np.sin(pts), np.cos(pts)
        u = (np.abs(s[:, 1] * s[:, 2] * (c[:, 1] - c[:, 2]))
             + np.abs(s[:, 0] * s[:, 2] * (c[:, 2] - c[:, 0]))
             + np.abs(s[:, 0] * s[:, 1] * (c[:, 0] - c[:, 1])))
        assert u.min() > 0.5


def test_grad_k_against_finite_differences():
    rng = np.random.default_rng(2)
    pts = rng.uniform(-np.pi, np.pi, size=(50, 3))
    keep = dispersion.grad_norm(pts) > 0.5
    pts = pts[keep]

    def k_of(p):
        g = dispersion.grad_norm(p)
        return dispersion.m_field(p)[0] / g ** 4

    h = 1e-6
    for j in range(3):
        dp = np.zeros(3)
        dp[j] = h
        fd = (k_of(pts + dp) - k_of(pts - dp)) / (2 * h)
        assert np.abs(curvegeom.grad_k(pts)[:, j] - fd).max() <= 1e-6


def test_phi_jacobian_against_finite_differences():
    rng = np.random.default_rng(4)
    for _ in range(20):
        c = rng.uniform(0.2, 0.95, size=3) * rng.choice([-1.0, 1.0], size=3)
        jac = curvegeom._phi_jacobian(c)
        h = 1e-7
        for j in range(3):
            dc = np.zeros(3)
            dc[j] = h
            fd = (curvegeom._phi_map(c + dc, A)
                  - curvegeom._phi_map(c - dc, A)) / (2 * h)
            assert np.abs(jac[:, j] - fd).max() <= 1e-4 * max(
                1.0, np.abs(jac[:, j]).max())


def test_refine_gamma_tightens_spacing(gamma):
    fine = curvegeom.refine_gamma(gamma, 0.02)
    for comp in fine.components:
        gaps = np.linalg.norm(wrap(np.roll(comp, -1, axis=0) - comp), axis=1)
        assert gaps.max() <= 0.02
    assert fine.n_samples > gamma.n_samples
    for res in fine.residual_m:
        assert res.max() <= 1e-8


def test_cap_branch2_at_tangential_normal(mesh, tset):
    q = curvegeom.CapQuery(eps=0.05, delta=0.05, zeta=tset.normals[0])
    cv = curvegeom.cap_volume(mesh, q, tset)
    assert cv.branch == 2
    assert cv.d_zeta <= 1e-12
    assert cv.volume >= 0.0


def test_cap_branch1_far_direction(mesh, tset):
    # hunt a direction far from every tangential normal
    rng = np.random.default_rng(9)
    dirs = rng.normal(size=(200, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ds = [curvegeom.d_omega(tset, d) for d in dirs]
    zeta = dirs[int(np.argmax(ds))]
    assert max(ds) > 0.5
    cv = curvegeom.cap_volume(
        mesh, curvegeom.CapQuery(eps=0.02, delta=0.02, zeta=zeta), tset)
    assert cv.branch == 1
    # far from the curvature band's normal image the cap is empty
    assert cv.volume == 0.0
    assert cv.constant == 0.0


def test_cap_query_validation():
    with pytest.raises(ValueError):
        curvegeom.CapQuery(eps=0.2, delta=0.05, zeta=np.array([1.0, 0, 0]))
    with pytest.raises(ValueError):
        curvegeom.CapQuery(eps=0.05, delta=0.0, zeta=np.array([1.0, 0, 0]))
    q = curvegeom.CapQuery(eps=0.05, delta=0.05, zeta=np.array([2.0, 0, 0]))
    assert np.linalg.norm(q.zeta) == pytest.approx(1.0)


@pytest.mark.xfail(
    strict=True,
    reason="pre-asymptotic at reachable resolutions: the cap/band "
    "intersection empties out as eps shrinks (band distance ~eps/|grad K| "
    "outruns cap width ~delta/kappa2); measured log-log slope ~1.4, "
    "stepwise 0.6 to 2.3, not 2 +- 0.3")
def test_cap_volume_quadratic_scaling(tset):
    mesh = levelset.extract_surface(A, 128)
    zeta = tset.normals[0]
    eps_list = [0.08, 0.04, 0.02, 0.01]
    vols = [curvegeom.cap_volume(
        mesh, curvegeom.CapQuery(eps=e, delta=e, zeta=zeta), tset).volume
        for e in eps_list]
    slope = np.polyfit(np.log(eps_list), np.log(vols), 1)[0]
    assert abs(slope - 2.0) <= 0.3
