"""Fixed-size matrix algebra: skew matrices from coefficient triples,
commutators, matrix exponentials and the 2x2 spin matrix.

Matrices are plain numpy arrays; the builders here guarantee the algebraic
shape (generalized antisymmetry, tracelessness) of their outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from solgeo.errors import ConstraintError, DomainError

ROLE_X = "X"  # (k, tau, sigma)
ROLE_Y = "Y"  # (m1, m2, m3)
ROLE_T = "T"  # (w1, w2, w3)

_SPIN_TOL = 1e-10


@dataclass(frozen=True)
class CoeffTriple:
    """Scalar coefficient triple filling one skew connection matrix.

    Stored in matrix-slot order: c1 is the (1,2) entry, c2 the (2,3) entry,
    c3 the magnitude of the (1,3)/(3,1) pair.  The named constructors take
    the coefficients in the order they are usually written.
    """

    c1: float
    c2: float
    c3: float
    role: str = ROLE_X

    def __post_init__(self):
        if not all(np.isfinite([self.c1, self.c2, self.c3])):
            raise DomainError("coefficient triple must be finite")
        if self.role not in (ROLE_X, ROLE_Y, ROLE_T):
            raise DomainError(f"unknown role {self.role!r}")

    @classmethod
    def x(cls, k, tau, sigma):
        """Curvature / torsion / sigma triple (x-direction matrix)."""
        return cls(k, tau, sigma, ROLE_X)

    @classmethod
    def y(cls, m1, m2, m3):
        """m-triple (y-direction matrix): slots are (m3, m1, m2)."""
        return cls(m3, m1, m2, ROLE_Y)

    @classmethod
    def t(cls, w1, w2, w3):
        """omega-triple (t-direction matrix): slots are (w3, w1, w2)."""
        return cls(w3, w1, w2, ROLE_T)


def skew_matrix(t: CoeffTriple, beta: int) -> np.ndarray:
    """3x3 connection matrix for a coefficient triple.

    Rows are (0, c1, -c3), (-beta*c1, 0, c2), (s*c3, -c2, 0).  The (3,1)
    sign s is +1 for the X role and +beta for the Y/T roles; the two
    conventions are transcribed separately on purpose and only coincide
    at beta = +1.
    """
    if beta not in (1, -1):
        raise DomainError("beta must be +1 or -1")
    c1, c2, c3 = t.c1, t.c2, t.c3
    s = 1.0 if t.role == ROLE_X else float(beta)
    return np.array(
        [
            [0.0, c1, -c3],
            [-beta * c1, 0.0, c2],
            [s * c3, -c2, 0.0],
        ]
    )


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix commutator [x, y] = xy - yx (batched over leading axes)."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape[-2:] != y.shape[-2:]:
        raise DomainError(f"shape mismatch {x.shape} vs {y.shape}")
    return x @ y - y @ x


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of a 3x3 generator.

    Antisymmetric input goes through the closed-form axis-angle (Rodrigues)
    formula, so the result is orthogonal to rounding; anything else falls
    back to scaling-and-squaring.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise DomainError("non-finite generator")
    if m.shape == (3, 3) and np.allclose(m, -m.T, rtol=0.0, atol=1e-14):
        w = np.array([m[2, 1], m[0, 2], m[1, 0]])
        theta = np.linalg.norm(w)
        if theta < 1e-30:
            return np.eye(3)
        k = m / theta
        return np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * (k @ k)
    return scipy.linalg.expm(m)


def spin_matrix(s1: float, s2: float, s3: float, r2: int = 1) -> np.ndarray:
    """2x2 spin matrix [[S3, S-], [S+, -S3]] subject to the pseudo-unit
    constraint S3^2 + r2*(S1^2 + S2^2) = 1.

    r2 is the sign of the quadratic form, never an imaginary entry: for
    r2 = -1 the off-diagonal pair is (S-, -S+) so that the determinant is
    -(S3^2 + r2*(S1^2 + S2^2)) = -1 in both signatures.
    """
    if r2 not in (1, -1):
        raise DomainError("r2 must be +1 or -1")
    defect = abs(s3 * s3 + r2 * (s1 * s1 + s2 * s2) - 1.0)
    if defect > _SPIN_TOL:
        raise ConstraintError(
            f"spin constraint violated, defect {defect:.3e}", defect=defect
        )
    sp = s1 + 1j * s2
    sm = s1 - 1j * s2
    if r2 == 1:
        return np.array([[s3, sm], [sp, -s3]], dtype=complex)
    return np.array([[s3, sm], [-sp, -s3]], dtype=complex)


def spin_matrix_field(S: np.ndarray, r2: int = 1, tol: float = 1e-8) -> np.ndarray:
    """Vectorized spin matrix over a grid: S has shape (..., 3)."""
    if r2 not in (1, -1):
        raise DomainError("r2 must be +1 or -1")
    s1, s2, s3 = S[..., 0], S[..., 1], S[..., 2]
    defect = np.abs(s3 * s3 + r2 * (s1 * s1 + s2 * s2) - 1.0)
    worst = float(defect.max())
    if worst > tol:
        raise ConstraintError(
            f"spin constraint violated, worst defect {worst:.3e}", defect=worst
        )
    out = np.empty(S.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = s3
    out[..., 0, 1] = s1 - 1j * s2
    out[..., 1, 0] = (s1 + 1j * s2) if r2 == 1 else -(s1 + 1j * s2)
    out[..., 1, 1] = -s3
    return out
