"""Second-moment machinery for two-mode Gaussian states.

Conventions
-----------
Phase-space ordering is ``(x_A, p_A, x_B, p_B)`` and the vacuum covariance
matrix is the identity, so a state is physical only if its local
diagonals are at least one. A rotated quadrature is
``x^theta = cos(theta) x - sin(theta) p``.

Standard form::

    gamma = [[lambda_a*I, delta], [delta.T, lambda_b*I]],  delta = diag(c_x, -c_p)

with ``c_x >= |c_p|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .config import DEFAULT, Settings
from .errors import (
    DomainError,
    ExhaustedAttempts,
    NonSymmetric,
    NotSymplectic,
    OutOfRange,
    Unphysical,
)

OMEGA = np.array([[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """A 4x4 real symmetric covariance matrix, vacuum = identity."""

    entries: np.ndarray

    def __post_init__(self):
        g = np.array(self.entries, dtype=float)
        if g.shape != (4, 4):
            raise ValueError(f"covariance matrix must be 4x4, got {g.shape}")
        scale = max(np.abs(g).max(), 1.0)
        if np.abs(g - g.T).max() > DEFAULT.symmetry_tol * scale:
            raise NonSymmetric("covariance matrix is not symmetric")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "entries", g)

    @property
    def alpha(self) -> np.ndarray:
        return self.entries[:2, :2]

    @property
    def beta(self) -> np.ndarray:
        return self.entries[2:, 2:]

    @property
    def delta(self) -> np.ndarray:
        return self.entries[:2, 2:]

    @classmethod
    def vacuum(cls) -> "CovarianceMatrix":
        return cls(np.eye(4))

    def __repr__(self):
        return f"CovarianceMatrix({self.entries.tolist()!r})"


@dataclass(frozen=True)
class StandardForm:
    """Standard-form parameters ``(lambda_a, lambda_b, c_x, c_p)``.

    Construction normalizes the pair ``(c_x, c_p)`` so that ``c_x >= |c_p|``.
    Swapping the roles of the two correlations and flipping both signs are
    local rotations, so the normalized state is locally equivalent.
    """

    lambda_a: float
    lambda_b: float
    c_x: float
    c_p: float

    def __post_init__(self):
        cx, cp = float(self.c_x), float(self.c_p)
        big, small = (cx, cp) if abs(cx) >= abs(cp) else (cp, cx)
        sign = 1.0 if big >= 0 else -1.0
        object.__setattr__(self, "lambda_a", float(self.lambda_a))
        object.__setattr__(self, "lambda_b", float(self.lambda_b))
        object.__setattr__(self, "c_x", abs(big))
        object.__setattr__(self, "c_p", sign * small)

    def to_cm(self) -> CovarianceMatrix:
        g = np.diag([self.lambda_a, self.lambda_a, self.lambda_b, self.lambda_b])
        g[0, 2] = g[2, 0] = self.c_x
        g[1, 3] = g[3, 1] = -self.c_p
        return CovarianceMatrix(g)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.lambda_a, self.lambda_b, self.c_x, self.c_p)


class GaussianInvariants(NamedTuple):
    Delta: float
    DeltaTilde: float
    nuTilde: float
    detGamma: float


def _as_cm(state) -> CovarianceMatrix:
    if isinstance(state, StandardForm):
        return state.to_cm()
    if isinstance(state, CovarianceMatrix):
        return state
    return CovarianceMatrix(np.asarray(state, dtype=float))


def _sym_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(w)) @ v.T


def standard_form(cm: CovarianceMatrix) -> StandardForm:
    """Reduce ``cm`` to standard form by local symplectic operations.

    Each local block is first brought to a multiple of the identity by a
    symmetric symplectic squeeze, then the off-diagonal block is
    diagonalized by a rotation on each mode (signed SVD).
    """
    cm = _as_cm(cm)
    alpha, beta, delta = cm.alpha, cm.beta, cm.delta
    det_a, det_b = np.linalg.det(alpha), np.linalg.det(beta)
    if det_a <= 0 or det_b <= 0 or alpha[0, 0] <= 0 or beta[0, 0] <= 0:
        raise Unphysical("local blocks are not positive definite")
    la, lb = np.sqrt(det_a), np.sqrt(det_b)
    sa = _sym_sqrt(la * np.linalg.inv(alpha))
    sb = _sym_sqrt(lb * np.linalg.inv(beta))
    d = sa @ delta @ sb.T
    u, s, vt = np.linalg.svd(d)
    s = s.copy()
    if np.linalg.det(u) < 0:
        u[:, 1] *= -1
        s[1] *= -1
    if np.linalg.det(vt) < 0:
        vt[1, :] *= -1
        s[1] *= -1
    return StandardForm(la, lb, s[0], -s[1])


def local_invariants(cm: CovarianceMatrix) -> tuple[float, float, float, float]:
    """``(det alpha, det beta, det delta, det gamma)``."""
    cm = _as_cm(cm)
    return (
        float(np.linalg.det(cm.alpha)),
        float(np.linalg.det(cm.beta)),
        float(np.linalg.det(cm.delta)),
        float(np.linalg.det(cm.entries)),
    )


def _sf_invariants(sf: StandardForm) -> tuple[float, float, float]:
    la, lb, cx, cp = sf.as_tuple()
    det_delta = -cx * cp
    det_gamma = (la * lb - cx**2) * (la * lb - cp**2)
    delta_sum = la**2 + lb**2 + 2 * det_delta
    return det_delta, det_gamma, delta_sum


def is_physical(cm: CovarianceMatrix, tol: float = DEFAULT.physical_tol) -> bool:
    """Physicality of a two-mode covariance matrix.

    Uses ``lambda_{a,b} >= 1`` and ``Delta <= 1 + det(gamma)``, completed by
    positivity of both correlation blocks and ``det(gamma) >= 1``; without
    these the two inequalities also admit unphysical matrices whose
    symplectic eigenvalues are both below one.
    """
    cm = _as_cm(cm)
    try:
        sf = standard_form(cm)
    except Unphysical:
        return False
    la, lb, cx, cp = sf.as_tuple()
    _, det_gamma, delta_sum = _sf_invariants(sf)
    return bool(
        la >= 1 - tol
        and lb >= 1 - tol
        and la * lb - cx**2 > 0
        and det_gamma >= 1 - tol
        and delta_sum <= 1 + det_gamma + tol * max(1.0, det_gamma)
    )


def gaussian_invariants(cm: CovarianceMatrix) -> GaussianInvariants:
    """Symplectic invariants, evaluated on the standard form.

    The discriminant of ``nu^4 - DeltaTilde nu^2 + det(gamma)`` is written as
    ``(la^2 - lb^2)^2 + 4 (la c_x + lb c_p)(lb c_x + la c_p)``, which avoids
    the cancellation of ``DeltaTilde^2 - 4 det(gamma)`` for strongly
    squeezed states.
    """
    la, lb, cx, cp = standard_form(cm).as_tuple()
    det_gamma = (la * lb - cx**2) * (la * lb - cp**2)
    delta_sum = la**2 + lb**2 - 2 * cx * cp
    delta_tilde = la**2 + lb**2 + 2 * cx * cp
    disc = max((la**2 - lb**2) ** 2 + 4 * (la * cx + lb * cp) * (lb * cx + la * cp), 0.0)
    # stable smaller root
    nu2 = 2 * det_gamma / (delta_tilde + np.sqrt(disc))
    return GaussianInvariants(float(delta_sum), float(delta_tilde), float(np.sqrt(nu2)), float(det_gamma))


def _nu_noise(cm: CovarianceMatrix) -> float:
    """Forward-error scale of ``nuTilde``: ``la lb - c_x^2`` loses digits as ``c_x^2 -> la lb``."""
    la, lb, cx, _ = standard_form(cm).as_tuple()
    return 8 * np.finfo(float).eps * la * lb / max(la * lb - cx**2, np.finfo(float).tiny)


def negativity_gaussian(cm: CovarianceMatrix) -> tuple[float, GaussianInvariants]:
    """Negativity from the smallest partially-transposed symplectic eigenvalue.

    Returns
    -------
    (N, invariants)
        ``N = max(0, (1 - nu)/(2 nu))`` and the :class:`GaussianInvariants`
        used to compute it. A ``nu`` within rounding noise of one counts
        as one, so boundary-of-separability states report exactly zero.
    """
    cm = _as_cm(cm)
    if not is_physical(cm):
        raise Unphysical("negativity requested for an unphysical covariance matrix")
    inv = gaussian_invariants(cm)
    nu = inv.nuTilde
    if 1 - nu <= _nu_noise(cm):
        return 0.0, inv
    return (1 - nu) / (2 * nu), inv


def q_gaussian_closed(sf: StandardForm) -> float:
    """Closed-form bit quadrature correlations of a Gaussian standard form."""
    la, lb, cx, _ = sf.as_tuple()
    gap = la * lb - cx**2
    if gap <= 0:
        raise DomainError("lambda_a*lambda_b - c_x^2 must be positive")
    return float(2 / np.pi * np.arctan(cx / np.sqrt(gap)))


def rotated_correlation(cm: CovarianceMatrix, theta, phi):
    """Correlation coefficient of ``(x_A^theta, x_B^phi)``; broadcasts over angles."""
    cm = _as_cm(cm)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ua = np.stack([np.cos(theta), -np.sin(theta)], axis=-1)
    ub = np.stack([np.cos(phi), -np.sin(phi)], axis=-1)
    cov = np.einsum("...i,ij,...j->...", ua, cm.delta, ub)
    var_a = np.einsum("...i,ij,...j->...", ua, cm.alpha, ua)
    var_b = np.einsum("...i,ij,...j->...", ub, cm.beta, ub)
    return cov / np.sqrt(var_a * var_b)


def e_gaussian(cm: CovarianceMatrix, theta, phi):
    """Sign-binned quadrature correlation ``(2/pi) arcsin(rho)``.

    Scalars in give a float out; arrays broadcast.
    """
    rho = rotated_correlation(cm, theta, phi)
    if np.any(np.abs(rho) > 1 + 1e-12):
        raise DomainError("rotated correlation coefficient exceeds one")
    e = 2 / np.pi * np.arcsin(np.clip(rho, -1.0, 1.0))
    return float(e) if np.ndim(e) == 0 else e


def tmsv_standard_form(r: float) -> StandardForm:
    return StandardForm(np.cosh(2 * r), np.cosh(2 * r), np.sinh(2 * r), np.sinh(2 * r))


def q_pure_of_negativity(n: float) -> float:
    """Q of the two-mode squeezed vacuum whose negativity is ``n``.

    Inverts ``N = (1 - nu)/(2 nu)`` with ``nu = exp(-2r)`` and evaluates the
    closed form on that state.
    """
    if n < 0:
        raise OutOfRange("negativity must be non-negative")
    r = 0.5 * np.log1p(2 * n)
    return q_gaussian_closed(tmsv_standard_form(r))


def scaled_negativity(n):
    """``2N/(1+2N)``, mapping ``[0, inf)`` onto ``[0, 1)``."""
    return 2 * np.asarray(n) / (1 + 2 * np.asarray(n))


@dataclass(frozen=True)
class SamplingRanges:
    lambda_min: float = 1.0
    lambda_max: float = DEFAULT.lambda_max


def _draw_standard_form(rng: np.random.Generator, ranges: SamplingRanges) -> StandardForm:
    la, lb = rng.uniform(ranges.lambda_min, ranges.lambda_max, size=2)
    cx = rng.uniform(0.0, np.sqrt(la * lb))
    cp = rng.uniform(-cx, cx)
    return StandardForm(la, lb, cx, cp)


def random_gaussian_cm(
    rng_seed,
    ranges: SamplingRanges | None = None,
    max_attempts: int = DEFAULT.max_attempts,
) -> CovarianceMatrix:
    """Rejection-sample a physical standard-form covariance matrix.

    ``rng_seed`` is an integer seed or a :class:`numpy.random.Generator`
    (pass a generator to draw a reproducible sequence of states).
    """
    ranges = ranges or SamplingRanges()
    if not 1.0 <= ranges.lambda_min < ranges.lambda_max:
        raise OutOfRange("need 1 <= lambda_min < lambda_max")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    for _ in range(max_attempts):
        sf = _draw_standard_form(rng, ranges)
        cm = sf.to_cm()
        if is_physical(cm):
            return cm
    raise ExhaustedAttempts(f"no physical state after {max_attempts} draws")


def boundary_family(
    kind: Literal["separable", "perfect"],
    epsilon: float,
    lam: float = DEFAULT.boundary_lambda,
) -> StandardForm:
    """Symmetric boundary states of the Q-versus-negativity plane.

    ``separable``: ``c_p = 0``, ``c_x = eps (lam^2 - 1)/lam``.
    ``perfect``: ``c_x = (lam^2 - 1)/lam``, ``c_p = eps c_x``.
    Both only reach their limiting line as ``lam -> inf``; at the default
    ``lam = 1e3`` Q falls short of one by about ``(2/pi)/(lam*sqrt(2))``.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise OutOfRange("epsilon must lie in [0, 1]")
    if not lam > 1.0:
        raise OutOfRange("lambda must exceed 1")
    edge = (lam**2 - 1) / lam
    if kind == "separable":
        return StandardForm(lam, lam, epsilon * edge, 0.0)
    if kind == "perfect":
        return StandardForm(lam, lam, edge, epsilon * edge)
    raise OutOfRange(f"unknown boundary family {kind!r}")


def apply_local_symplectic(cm: CovarianceMatrix, s_a, s_b) -> CovarianceMatrix:
    """Congruence ``(S_A + S_B) gamma (S_A + S_B)^T`` by local symplectics."""
    cm = _as_cm(cm)
    s_a = np.asarray(s_a, dtype=float)
    s_b = np.asarray(s_b, dtype=float)
    for s in (s_a, s_b):
        if s.shape != (2, 2) or abs(np.linalg.det(s) - 1) > 1e-10:
            raise NotSymplectic("local operations must be 2x2 with unit determinant")
    big = np.zeros((4, 4))
    big[:2, :2] = s_a
    big[2:, 2:] = s_b
    return CovarianceMatrix(big @ cm.entries @ big.T)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeezer(r: float) -> np.ndarray:
    """``diag(1/r, r)``, the local squeeze with scale factor ``r > 0``."""
    return np.diag([1.0 / r, r])
