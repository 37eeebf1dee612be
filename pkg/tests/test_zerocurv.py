import numpy as np
import pytest

from solgeo import cases, zerocurv
from solgeo import grid as sg
from solgeo.errors import DomainError


def _grid3(n=10, h=0.1):
    return sg.GridSpec.make(sg.Axis("x", n, h), sg.Axis("y", n, h),
                            sg.Axis("t", n, h))


def _grid4(n=8, h=0.1):
    return sg.GridSpec.make(*(sg.Axis(f"xi{i}", n, h) for i in (1, 2, 3, 4)))


def _zero_conn(g, names, m=3):
    data = np.zeros(g.shape + (m, m))
    return {n: sg.MatrixField(g, data.copy()) for n in names}


def test_zero_connection_gives_zero_residual_everywhere():
    g3 = _grid3(6)
    g4 = _grid4(6)
    for system, names, gg, params in [
        ("gmce", ("A", "B"), g3, None),
        ("mlxii", ("A", "B", "C"), g3, None),
        ("uvw", ("U", "V", "W"), g3, None),
        ("bogomolny", ("Phi", "A", "B", "C"), g3, None),
        ("mlxx3d", ("B", "D"), g4, {"b": 0.7}),
        ("sdym3d", ("A1", "A2", "A3", "A4"), g4, None),
        ("mlxii4d", ("A", "B", "C", "D"), g4, None),
        ("mlxx4d", ("A", "B", "C", "D"), g4, None),
        ("mlxx4d_scalar", ("B", "D"), g4, {"a": 0.3, "b": 0.7}),
        ("sdym4d", ("A1", "A2", "A3", "A4"), g4, None),
    ]:
        res = zerocurv.zc_residual(system, _zero_conn(gg, names), params)
        for key, arr in res.items():
            assert np.abs(arr).max() == 0, (system, key)


def test_unknown_system_and_missing_fields():
    g = _grid3(6)
    with pytest.raises(DomainError):
        zerocurv.zc_residual("nope", _zero_conn(g, ("A", "B")))
    with pytest.raises(DomainError):
        zerocurv.zc_residual("mlxii", _zero_conn(g, ("A", "B")))
    mixed = _zero_conn(g, ("A", "B"))
    mixed["C"] = sg.MatrixField(_grid3(7), np.zeros((7, 7, 7, 3, 3)))
    with pytest.raises(DomainError):
        zerocurv.zc_residual("mlxii", mixed)


def test_flat_connection_residual_converges():
    # the manufactured rotation-field connection is exactly flat, so the
    # residual of each line is pure second-order discretization error
    maxima = []
    for n in (9, 17, 33):
        conn = cases.pure_gauge_connection(cases.default_grid_gauge(n))
        res = zerocurv.zc_residual("mlxii", conn)
        maxima.append(max(np.abs(a).max() for a in res.values()))
    assert maxima[0] / maxima[1] == pytest.approx(4.0, rel=0.35)
    assert maxima[1] / maxima[2] == pytest.approx(4.0, rel=0.35)


def test_perturbed_connection_residual_stalls():
    maxima = []
    for n in (9, 17, 33):
        conn = cases.pure_gauge_connection(cases.default_grid_gauge(n),
                                           perturb=0.2)
        res = zerocurv.zc_residual("mlxii", conn)
        maxima.append(max(np.abs(a).max() for a in res.values()))
    assert maxima[-1] > 0.05
    assert abs(maxima[-1] - maxima[-2]) / maxima[-1] < 0.05


def test_bogomolny_zero_higgs_reduces_to_three_matrix_system():
    g = _grid3(8)
    rng = np.random.default_rng(3)
    conn = cases.random_connection(g, rng)
    conn4 = dict(conn)
    conn4["Phi"] = sg.MatrixField(g, np.zeros(g.shape + (3, 3), dtype=complex))
    rb = zerocurv.zc_residual("bogomolny", conn4)
    r3 = zerocurv.zc_residual("mlxii", conn)
    assert np.abs(rb["t"] - r3["xy"]).max() < 1e-13
    assert np.abs(rb["y"] + r3["xt"]).max() < 1e-13
    assert np.abs(rb["x"] - r3["yt"]).max() < 1e-13


def test_scalar_pencil_matches_four_potential_residuals():
    # for 1x1 potentials the two-potential pencil residual at parameter
    # values (a, b) = (lam, lam) is quadratic in lam; its coefficients are
    # exactly minus the three four-potential self-duality residual lines
    g = _grid4(8)
    rng = np.random.default_rng(4)
    pots = cases.random_connection(g, rng, names=("A1", "A2", "A3", "A4"), m=1)
    sd = zerocurv.zc_residual("sdym4d", pots)

    def pencil(lam):
        B = sg.MatrixField(g, pots["A1"].data - lam * pots["A3"].data)
        D = sg.MatrixField(g, pots["A2"].data - lam * pots["A4"].data)
        res = zerocurv.zc_residual("mlxx4d_scalar", {"B": B, "D": D},
                                   {"a": lam, "b": lam})
        return res["r"]

    r0, rp, rm = pencil(0.0), pencil(1.0), pencil(-1.0)
    c0 = r0
    c2 = 0.5 * (rp + rm) - c0
    c1 = 0.5 * (rp - rm)
    assert np.abs(c0 + sd["a"]).max() < 1e-13
    assert np.abs(c1 + sd["c"]).max() < 1e-13
    assert np.abs(c2 + sd["b"]).max() < 1e-13


# --- embedding ----------------------------------------------------------------

def test_embed_sdym_slots():
    g = _grid3(6)
    rng = np.random.default_rng(5)
    conn = cases.random_connection(g, rng)
    pot = zerocurv.embed_sdym(conn["A"], conn["B"], conn["C"])
    assert np.array_equal(pot["a"].data, -1j * conn["C"].data)
    assert np.array_equal(pot["abar"].data, -pot["a"].data)
    assert np.abs(pot["b"].data + pot["bbar"].data
                  - 2 * conn["A"].data).max() < 1e-14
    assert np.abs(pot["bbar"].data - pot["b"].data
                  - 2j * conn["B"].data).max() < 1e-14


@pytest.mark.parametrize("seed", range(5))
def test_embedding_identity_random_connections(seed):
    # algebraic identity between the complex-coordinate self-duality
    # residuals of the embedded potential and the three-matrix residuals;
    # exact at the discrete level, so machine precision on any smooth data
    g = _grid3(8)
    rng = np.random.default_rng(seed)
    conn = cases.random_connection(g, rng)
    defect = zerocurv.embedding_identity_defect(conn["A"], conn["B"], conn["C"])
    assert defect <= 1e-13


# --- curvature and duality ----------------------------------------------------

def test_curvature_abelian_gradient_is_flat():
    # A_mu = d_mu f for scalar (1x1) potentials has curl zero up to the
    # commuting of the two FD stencils, which is exact on this product form
    g = _grid4(9)
    m = g.meshes()
    f = m[0] * m[1] + 0.5 * m[2] ** 2 + m[3] * m[0]
    pot = {}
    for i in range(4):
        d = sg.partial_data(f, g, f"xi{i+1}")
        pot[f"A{i+1}"] = sg.MatrixField(g, d[..., None, None])
    F = zerocurv.curvature(pot)
    # quadratic f: stencils are exact and derivatives commute
    worst = max(np.abs(F.comps[k]).max() for k in F.comps)
    assert worst < 1e-12


def test_curvature_antisymmetry_access():
    g = _grid4(6)
    rng = np.random.default_rng(6)
    pot = cases.random_connection(g, rng, names=("A1", "A2", "A3", "A4"))
    F = zerocurv.curvature(pot)
    assert np.array_equal(F.get(2, 1), -F.get(1, 2))
    assert np.abs(F.get(3, 3)).max() == 0


def test_hodge_is_involution():
    g = _grid4(6)
    rng = np.random.default_rng(7)
    pot = cases.random_connection(g, rng, names=("A1", "A2", "A3", "A4"))
    F = zerocurv.curvature(pot)
    FF = zerocurv.hodge_dual(zerocurv.hodge_dual(F))
    for k in F.comps:
        assert np.array_equal(FF.comps[k], F.comps[k])


def test_selfdual_defect_hand_cases():
    g = _grid4(5)
    rng = np.random.default_rng(8)
    M = rng.normal(size=g.shape + (2, 2))
    M /= np.abs(M).max()
    zero = np.zeros_like(M)
    sd = zerocurv.Curvature2Form(g, {
        "12": M, "34": M, "13": zero, "14": zero, "23": zero, "24": zero})
    assert zerocurv.selfdual_defect(sd) == 0.0
    asd = zerocurv.Curvature2Form(g, {
        "12": M, "34": -M, "13": zero, "14": zero, "23": zero, "24": zero})
    assert zerocurv.selfdual_defect(asd) == pytest.approx(2.0)


# --- spectral-parameter fields ------------------------------------------------

def test_lambda_constant_case_exact():
    f = cases.rational_lambda({"n1": 0.0, "n3": 2.0, "m1": 0.0, "n4": 4.0})
    assert np.abs(f.lam - 0.5).max() == 0
    res = zerocurv.lambda_residual(f)
    for key in ("xi13", "xi24"):
        assert zerocurv.masked_norms(res[key], res["mask"])["max"] < 1e-14


@pytest.mark.parametrize("params", [
    {"n1": 1.0, "n3": 0.0, "m1": 0.0, "n4": 1.0},
    {"n1": 0.6, "n3": 0.3, "m1": 0.4, "n4": 1.2},
])
def test_lambda_rational_residual_converges(params):
    maxima = []
    for n in (12, 24, 48):
        h = 0.35 / (n - 1)
        g = sg.GridSpec.make(*(sg.Axis(f"xi{i}", n, h) for i in (1, 2, 3, 4)))
        f = zerocurv.lambda_field("sdym_xi", params, g)
        res = zerocurv.lambda_residual(f)
        worst = max(zerocurv.masked_norms(res[k], res["mask"])["max"]
                    for k in ("xi13", "xi24"))
        maxima.append(worst)
    # second-order stencils; the moving mask boundary loosens the ratio
    assert maxima[0] / maxima[1] == pytest.approx(4.0, rel=0.5)
    assert maxima[1] / maxima[2] == pytest.approx(4.0, rel=0.5)


def test_lambda_complex_coordinate_kind():
    n = 10
    h = 0.3 / (n - 1)
    g = sg.GridSpec.make(sg.Axis("x", n, h), sg.Axis("y", n, h),
                         sg.Axis("t", n, h), sg.Axis("xi1", n, h))
    f = zerocurv.lambda_field(
        "mlxii_complex", {"a1": 0.5, "a2": 0.2, "a3": 0.1, "a4": 1.0}, g)
    res = zerocurv.lambda_residual(f)
    for key in ("alpha", "beta"):
        assert zerocurv.masked_norms(res[key], res["mask"])["max"] < 5e-3


def test_lambda_pole_mask_and_errors():
    with pytest.raises(DomainError):
        zerocurv.lambda_field("bogus", {}, _grid4(6))
    # denominator identically zero: every point masked
    with pytest.raises(DomainError):
        cases.rational_lambda({"n1": 0.0, "n3": 1.0, "m1": 0.0, "n4": 0.0})
    # pole crossing the box: masked but usable
    f = cases.rational_lambda({"n1": 1.0, "n3": 0.5, "m1": 0.0, "n4": 0.2})
    assert f.mask.any() and not f.mask.all()
    assert np.all(np.isfinite(f.lam))


def test_masked_norms_requires_points():
    with pytest.raises(DomainError):
        zerocurv.masked_norms(np.zeros((3, 3)), np.ones((3, 3), dtype=bool))
