"""Frame propagation, fundamental-form coefficient maps, 2x2 gauge matrices
and surface reconstruction from first/second fundamental forms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from solgeo import grid as sg
from solgeo import liealg
from solgeo.errors import DomainError


@dataclass(frozen=True)
class FrameTriad:
    """Orthonormal (or pseudo-orthonormal for beta=-1) triad, rows e1,e2,e3."""

    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    beta: int = 1

    @classmethod
    def standard(cls, beta: int = 1):
        return cls(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                   np.array([0, 0, 1.0]), beta)

    def as_matrix(self) -> np.ndarray:
        return np.stack([self.e1, self.e2, self.e3])

    def gram_defect(self) -> float:
        """Max deviation of the pseudo-Gram matrix E eta E^T from
        eta = diag(beta, 1, 1); for beta=1 this is plain orthonormality."""
        e = self.as_matrix()
        eta = np.diag([float(self.beta), 1.0, 1.0])
        return float(np.abs(e @ eta @ e.T - eta).max())


@dataclass(frozen=True)
class FrameField:
    grid: sg.GridSpec
    data: np.ndarray  # grid.shape + (3, 3), rows e1,e2,e3
    beta: int = 1

    def triad(self, *idx) -> FrameTriad:
        m = self.data[idx]
        return FrameTriad(m[0], m[1], m[2], self.beta)


@dataclass(frozen=True)
class PositionField:
    grid: sg.GridSpec
    data: np.ndarray  # grid.shape + (3,)


def propagate_frenet(start: FrameTriad, coeffs, beta: int, h: float) -> FrameField:
    """Advance a frame along one axis with per-step exponentials of the
    midpoint-averaged skew matrix (Lie-group midpoint, order 2; exact for
    constant coefficients)."""
    coeffs = list(coeffs)
    if len(coeffs) < 2:
        raise DomainError("need at least two coefficient samples")
    n = len(coeffs)
    out = np.empty((n, 3, 3))
    out[0] = start.as_matrix()
    for i in range(n - 1):
        a, b = coeffs[i], coeffs[i + 1]
        mid = liealg.CoeffTriple(0.5 * (a.c1 + b.c1), 0.5 * (a.c2 + b.c2),
                                 0.5 * (a.c3 + b.c3), a.role)
        out[i + 1] = liealg.expm(h * liealg.skew_matrix(mid, beta)) @ out[i]
    gspec = sg.GridSpec.make(sg.Axis("x", n, h))
    return FrameField(gspec, out, beta)


def _propagate_line(frame0: np.ndarray, mats: np.ndarray, h: float) -> np.ndarray:
    """Step a 3x3 frame through a line of connection matrices (midpoint)."""
    f = frame0
    for i in range(mats.shape[0] - 1):
        f = liealg.expm(h * 0.5 * (mats[i] + mats[i + 1])) @ f
    return f


def commutation_defect_2d(start: FrameTriad, A: sg.MatrixField,
                          B: sg.MatrixField) -> float:
    """Max-norm difference between propagating the frame x-then-y and
    y-then-x across the full grid; a computable zero-curvature proxy."""
    if A.grid != B.grid:
        raise DomainError("A and B must share a grid")
    g = A.grid
    hx = g.axis("x").h
    hy = g.axis("y").h
    f0 = start.as_matrix()
    # x along y=0, then y along x=end
    fx = _propagate_line(f0, A.data[:, 0], hx)
    fxy = _propagate_line(fx, B.data[-1, :], hy)
    # y along x=0, then x along y=end
    fy = _propagate_line(f0, B.data[0, :], hy)
    fyx = _propagate_line(fy, A.data[:, -1], hx)
    return float(np.abs(fxy - fyx).max())


@dataclass(frozen=True)
class SurfaceData:
    """First/second fundamental forms, Christoffel symbols and Weingarten
    coefficients sampled on an (x, y) grid.

    gamma keys use upper-then-lower index strings, e.g. "211" for the symbol
    with upper index 2 and lower indices 1,1.  Time-direction coefficients
    ("201", "203", "301") are optional.  The three printed time-Christoffel
    formulas with suspect index placement are exposed as c01a/c01b/c01c by
    callers that need them; this container stores whatever it is given.
    """

    grid: sg.GridSpec
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    gamma: dict
    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray
    upsilon: dict = field(default_factory=dict)

    @property
    def g(self) -> np.ndarray:
        return self.E * self.G - self.F**2

    def check_metric(self):
        if np.any(self.E <= 0):
            idx = np.unravel_index(int(np.argmax(self.E <= 0)), self.E.shape)
            raise DomainError(f"E <= 0 first at grid index {idx}")
        gg = self.g
        if np.any(gg <= 0):
            idx = np.unravel_index(int(np.argmax(gg <= 0)), gg.shape)
            raise DomainError(f"EG - F^2 <= 0 first at grid index {idx}")


def coeffs_from_surface(s: SurfaceData) -> dict:
    """Pointwise frame coefficients from the fundamental forms:

    k = L/sqrt(E), sigma = (g/E) G^2_11, tau = -(g/sqrt(E)) p12,
    m1 = -(g/sqrt(E)) p22, m2 = (g/E) G^2_12, m3 = M/sqrt(E);
    with time data also w1 = -(g/sqrt(E)) G^2_03, w2 = (g/E) G^2_03,
    w3 = G^3_01 / sqrt(E).
    """
    s.check_metric()
    g = s.g
    sqE = np.sqrt(s.E)
    out = {
        "k": s.L / sqE,
        "sigma": (g / s.E) * s.gamma["211"],
        "tau": -(g / sqE) * s.p12,
        "m1": -(g / sqE) * s.p22,
        "m2": (g / s.E) * s.gamma["212"],
        "m3": s.M / sqE,
    }
    if "203" in s.gamma and "301" in s.gamma:
        out["w1"] = -(g / sqE) * s.gamma["203"]
        out["w2"] = (g / s.E) * s.gamma["203"]
        out["w3"] = s.gamma["301"] / sqE
    return out


def build_uvw(s: SurfaceData):
    """Traceless anti-Hermitian 2x2 gauge matrices of the frame linear
    problem.  W is returned only when the time-direction Christoffels are
    present."""
    s.check_metric()
    g = s.g
    sqE = np.sqrt(s.E)
    sq_gE = np.sqrt(g / s.E)
    sqg = np.sqrt(g)
    pref = 1.0 / (2j * sqE)

    def mat(diag, off_re, off_im_sign):
        m = np.empty(s.E.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = pref * (-sqg * diag)
        m[..., 0, 1] = pref * (off_re + 1j * off_im_sign)
        m[..., 1, 0] = pref * (off_re - 1j * off_im_sign)
        m[..., 1, 1] = pref * (sqg * diag)
        return sg.MatrixField(s.grid, m)

    U = mat(s.p12, s.L, sq_gE * s.gamma["211"])
    V = mat(s.p22, s.M, -sq_gE * s.gamma["212"])
    W = None
    if "203" in s.gamma and "301" in s.gamma and "201" in s.gamma:
        W = mat(s.gamma["203"], s.gamma["301"], -sq_gE * s.gamma["201"])
    return U, V, W


def gwe_matrices(s: SurfaceData):
    """3x3 connection matrices of the position-vector linear problem
    Z = (r_x, r_y, n):  Z_x = A Z, Z_y = B Z."""
    shape = s.E.shape
    A = np.zeros(shape + (3, 3))
    B = np.zeros(shape + (3, 3))
    A[..., 0, 0] = s.gamma["111"]
    A[..., 0, 1] = s.gamma["211"]
    A[..., 0, 2] = s.L
    A[..., 1, 0] = s.gamma["112"]
    A[..., 1, 1] = s.gamma["212"]
    A[..., 1, 2] = s.M
    A[..., 2, 0] = s.p11
    A[..., 2, 1] = s.p12
    B[..., 0, 0] = s.gamma["112"]
    B[..., 0, 1] = s.gamma["212"]
    B[..., 0, 2] = s.M
    B[..., 1, 0] = s.gamma["122"]
    B[..., 1, 1] = s.gamma["222"]
    B[..., 1, 2] = s.N
    B[..., 2, 0] = s.p21
    B[..., 2, 1] = s.p22
    return sg.MatrixField(s.grid, A), sg.MatrixField(s.grid, B)


def gmce_residual(A: sg.MatrixField, B: sg.MatrixField) -> np.ndarray:
    """A_y - B_x + [A, B] on the shared grid."""
    Ay = sg.partial_data(A.data, A.grid, "y")
    Bx = sg.partial_data(B.data, B.grid, "x")
    return Ay - Bx + liealg.commutator(A.data, B.data)


@dataclass(frozen=True)
class ReconstructionResult:
    position: PositionField
    normal: np.ndarray           # grid.shape + (3,)
    mixed_partial_defect: float  # || d_y r_x - d_x r_y ||_inf from the Z rows
    gmce_residual_max: float
    gmce_flagged: bool


def reconstruct_surface(s: SurfaceData, r0=(0.0, 0.0, 0.0), frame0=None,
                        orientation: int = 1,
                        gmce_threshold_factor: float = 10.0) -> ReconstructionResult:
    """Integrate the position-vector linear problem along x at y_min, then
    along y for every x (fixed sweep order), and recover r by trapezoidal
    integration of the propagated tangents.

    orientation is the sign of n relative to r_x ^ r_y in the data.
    """
    s.check_metric()
    g = s.grid
    hx = g.axis("x").h
    hy = g.axis("y").h
    nx, ny = g.shape
    A, B = gwe_matrices(s)

    if frame0 is None:
        frame0 = FrameTriad.standard()
    e1, e2, e3 = frame0.e1, frame0.e2, frame0.e3
    E0 = s.E[0, 0]
    F0 = s.F[0, 0]
    g0 = s.g[0, 0]
    Z0 = np.stack([
        np.sqrt(E0) * e1,
        (F0 / np.sqrt(E0)) * e1 - orientation * np.sqrt(g0 / E0) * e3,
        e2,
    ])

    Z = np.empty((nx, ny, 3, 3))
    Z[0, 0] = Z0
    for i in range(nx - 1):
        Z[i + 1, 0] = liealg.expm(hx * 0.5 * (A.data[i, 0] + A.data[i + 1, 0])) @ Z[i, 0]
    for i in range(nx):
        for j in range(ny - 1):
            Z[i, j + 1] = liealg.expm(hy * 0.5 * (B.data[i, j] + B.data[i, j + 1])) @ Z[i, j]

    rx = Z[..., 0, :]
    ry = Z[..., 1, :]
    nrm = Z[..., 2, :]

    r = np.empty((nx, ny, 3))
    base = np.asarray(r0, dtype=float) + np.concatenate(
        [np.zeros((1, 3)), np.cumsum(0.5 * hx * (rx[:-1, 0] + rx[1:, 0]), axis=0)]
    )
    r[:, 0] = base
    incr = np.cumsum(0.5 * hy * (ry[:, :-1] + ry[:, 1:]), axis=1)
    r[:, 1:] = r[:, :1] + incr

    rx_y = sg.partial_data(rx, g, "y")
    ry_x = sg.partial_data(ry, g, "x")
    mixed = float(np.abs(rx_y - ry_x).max())

    res = gmce_residual(A, B)
    res_max = float(np.abs(res).max())
    hmin = min(hx, hy)
    flagged = res_max > gmce_threshold_factor * hmin**2

    return ReconstructionResult(
        position=PositionField(g, r),
        normal=nrm,
        mixed_partial_defect=mixed,
        gmce_residual_max=res_max,
        gmce_flagged=flagged,
    )


def time_christoffels(s: SurfaceData, accuracy: int = 2) -> dict:
    """The three printed time-direction Christoffel formulas, exposed under
    neutral names because their upper-index labels look misprinted (the
    right-hand sides of the second and third suggest upper indices 2 and 3):

    c01a = Y1_x + Y1 G^1_11 + Y2 G^1_12 + Y3 p11
    c01b = Y2_x + Y1 G^2_11 + Y2 G^2_12 + Y3 p12
    c01c = Y3_x + Y1 L + Y2 M

    plus p01 = F c3/g and p02 = -E c3/g for a caller-supplied "302" entry.
    Requires upsilon keys "1", "2", "3".
    """
    missing = [k for k in ("1", "2", "3") if k not in s.upsilon]
    if missing:
        raise DomainError(f"upsilon fields missing {missing}")
    y1, y2, y3 = s.upsilon["1"], s.upsilon["2"], s.upsilon["3"]
    dx = lambda f: sg.partial_data(f, s.grid, "x", accuracy)
    out = {
        "c01a": dx(y1) + y1 * s.gamma["111"] + y2 * s.gamma["112"] + y3 * s.p11,
        "c01b": dx(y2) + y1 * s.gamma["211"] + y2 * s.gamma["212"] + y3 * s.p12,
        "c01c": dx(y3) + y1 * s.L + y2 * s.M,
    }
    if "302" in s.gamma:
        out["p01"] = s.F * s.gamma["302"] / s.g
        out["p02"] = -s.E * s.gamma["302"] / s.g
    return out


def mI_velocities(s: SurfaceData, u: np.ndarray | None = None):
    """Velocity coefficients of the position-flow form of the isotropic spin
    equation: Y1 = u + M F / sqrt(g), Y2 = -M / sqrt(g), Y3 = G^2_12 sqrt(g),
    with u integrated from sqrt(g) (L G^2_12 - M G^2_11) when omitted."""
    s.check_metric()
    sqg = np.sqrt(s.g)
    if u is None:
        integrand = sqg * (s.L * s.gamma["212"] - s.M * s.gamma["211"])
        u = sg.antider_x_data(integrand, s.grid)
    y1 = u + s.M * s.F / sqg
    y2 = -s.M / sqg
    y3 = s.gamma["212"] * sqg
    return y1, y2, y3


def export_obj(path, pos: PositionField):
    """Wavefront OBJ export: grid vertices plus quad faces."""
    nx, ny = pos.grid.shape
    with open(path, "w") as fh:
        for i in range(nx):
            for j in range(ny):
                v = pos.data[i, j]
                fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
        for i in range(nx - 1):
            for j in range(ny - 1):
                a = i * ny + j + 1
                b = (i + 1) * ny + j + 1
                fh.write(f"f {a} {b} {b + 1} {a + 1}\n")
