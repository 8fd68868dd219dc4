"""State families with their analytic negativity and bit correlations.

Squeezing ``r`` is in natural units; ``r_dB = (20/ln 10) r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy.special import gammaln

from . import gaussian
from .config import DEFAULT, Settings
from .errors import CutoffCapExceeded, NotConverged, OutOfRange, SpecParseError
from .fock import FockDensityMatrix, FockPureState

KINDS = (
    "tmsv",
    "bell_phi_plus",
    "bell_phi_minus",
    "bell_psi_plus",
    "bell_psi_minus",
    "photon_subtracted",
    "mixture",
    "qutrit_h",
)

# parameters each family takes
FAMILY_KEYS = {
    "tmsv": ("r",),
    "bell_phi_plus": ("p",),
    "bell_phi_minus": ("p",),
    "bell_psi_plus": ("p",),
    "bell_psi_minus": ("p",),
    "photon_subtracted": ("r", "T"),
    "mixture": ("r", "p"),
    "qutrit_h": (),
}


def squeezing_db(r: float) -> float:
    return 20.0 / math.log(10.0) * r


@dataclass(frozen=True)
class FamilyParams:
    kind: str
    r: float | None = None
    T: float | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise OutOfRange(f"unknown family {self.kind!r}")
        if self.r is not None and self.r < 0:
            raise OutOfRange("r must be non-negative")
        if self.T is not None and not 0 <= self.T <= 1:
            raise OutOfRange("T must lie in [0, 1]")
        if self.p is not None and not 0 <= self.p <= 1:
            raise OutOfRange("p must lie in [0, 1]")
        for key in FAMILY_KEYS[self.kind]:
            if getattr(self, key) is None:
                raise OutOfRange(f"family {self.kind} needs {key}")

    @property
    def Lambda(self) -> float | None:
        return None if self.r is None else math.tanh(self.r)

    def replace(self, **changes) -> "FamilyParams":
        return FamilyParams(**{**self.__dict__, **changes})

    def spec(self) -> str:
        parts = [f"kind={self.kind}"]
        parts += [f"{k}={getattr(self, k)!r}" for k in FAMILY_KEYS[self.kind]]
        return ";".join(parts)


def parse_family_spec(text: str) -> FamilyParams:
    """Parse ``kind=...;r=...;T=...;p=...`` (order-insensitive).

    ``Lambda`` may be given instead of ``r`` (``r = artanh Lambda``). Keys the
    family does not use are rejected, as are unknown keys and duplicates.
    """
    fields: dict[str, str] = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise SpecParseError(f"expected key=value, got {chunk!r}")
        key, value = (s.strip() for s in chunk.split("=", 1))
        if key in fields:
            raise SpecParseError(f"duplicate key {key!r}")
        fields[key] = value
    kind = fields.pop("kind", None)
    if kind is None:
        raise SpecParseError("missing kind")
    if kind not in KINDS:
        raise SpecParseError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    allowed = set(FAMILY_KEYS[kind])
    if "r" in allowed:
        allowed.add("Lambda")
    unknown = set(fields) - allowed
    if unknown:
        raise SpecParseError(f"keys not accepted by {kind}: {', '.join(sorted(unknown))}")
    values = {}
    for key, raw in fields.items():
        try:
            values[key] = float(raw)
        except ValueError:
            raise SpecParseError(f"{key}: not a number: {raw!r}") from None
    if "Lambda" in values:
        lam = values.pop("Lambda")
        if not 0 <= lam < 1:
            raise SpecParseError("Lambda must lie in [0, 1)")
        r_from_lambda = math.atanh(lam)
        if "r" in values and abs(values["r"] - r_from_lambda) > 1e-12 * max(1.0, r_from_lambda):
            raise SpecParseError("r and Lambda disagree")
        values["r"] = r_from_lambda
    try:
        return FamilyParams(kind, **values)
    except OutOfRange as exc:
        raise SpecParseError(str(exc)) from None


# ----------------------------------------------------------------------------
# truncation helpers


def _truncate(cn: np.ndarray, tail: np.ndarray, settings: Settings) -> tuple[np.ndarray, float]:
    """Smallest truncation whose discarded norm is below ``tail_tol``.

    ``tail[d]`` is the mass discarded when keeping ``cn[:d]``.
    """
    ok = np.flatnonzero(tail < settings.tail_tol)
    if ok.size == 0 or ok[0] > settings.cutoff_cap:
        raise CutoffCapExceeded(f"tail mass stays above {settings.tail_tol:g} up to cutoff {settings.cutoff_cap}")
    d = max(int(ok[0]), 1)
    kept = cn[:d] / np.sqrt(np.sum(cn[:d] ** 2))
    return kept, float(tail[d])


def _tail_masses(cn: np.ndarray) -> np.ndarray:
    """``tail[d] = sum_{n >= d} cn[n]^2``, summed from the small end."""
    sq = cn**2
    return np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])


def _horizon(settings: Settings) -> int:
    # compute coefficients well past the cap so tail sums are accurate
    return 2 * settings.cutoff_cap + 400


# ----------------------------------------------------------------------------
# two-mode squeezed vacuum


def tmsv_coefficients(r: float, count: int) -> np.ndarray:
    """Schmidt coefficients ``tanh(r)^n / cosh(r)``."""
    n = np.arange(count)
    if r == 0:
        return (n == 0).astype(float)
    return np.exp(n * math.log(math.tanh(r)) - math.log(math.cosh(r)))


def tmsv(r: float, settings: Settings = DEFAULT) -> tuple[gaussian.CovarianceMatrix, FockPureState]:
    """Two-mode squeezed vacuum in both representations."""
    if r < 0:
        raise OutOfRange("r must be non-negative")
    cm = gaussian.tmsv_standard_form(r).to_cm()
    if r == 0:
        return cm, FockPureState.from_diagonal([1.0], 0.0)
    d = math.ceil(math.log(settings.tail_tol) / (2 * math.log(math.tanh(r))))
    d = max(d, 1)
    while math.tanh(r) ** (2 * d) >= settings.tail_tol:
        d += 1
    while d > 1 and math.tanh(r) ** (2 * (d - 1)) < settings.tail_tol:
        d -= 1
    if d > settings.cutoff_cap:
        raise CutoffCapExceeded(f"TMSV r={r} needs cutoff {d} > {settings.cutoff_cap}")
    cn = tmsv_coefficients(r, d)
    tail = math.tanh(r) ** (2 * d)
    return cm, FockPureState.from_diagonal(cn / np.linalg.norm(cn), tail)


def tmsv_negativity(r: float) -> float:
    return math.expm1(2 * r) / 2


def tmsv_q(r: float) -> float:
    return 2 / math.pi * math.atan(math.sinh(2 * r))


# ----------------------------------------------------------------------------
# Bell-like states


def bell_state(kind: str, p: float) -> tuple[FockPureState, tuple[float, float]]:
    """Photonic Bell-like state and its analytic ``(N_B, Q_B)``."""
    if not 0 <= p <= 1:
        raise OutOfRange("p must lie in [0, 1]")
    a, b = math.sqrt(p), math.sqrt(1 - p)
    c = np.zeros((2, 2))
    if kind == "bell_phi_plus":
        c[0, 0], c[1, 1] = a, b
    elif kind == "bell_phi_minus":
        c[0, 0], c[1, 1] = a, -b
    elif kind == "bell_psi_plus":
        c[0, 1], c[1, 0] = a, b
    elif kind == "bell_psi_minus":
        c[0, 1], c[1, 0] = a, -b
    else:
        raise OutOfRange(f"unknown Bell kind {kind!r}")
    n_b = math.sqrt(p * (1 - p))
    return FockPureState(c, 0.0), (n_b, 4 / math.pi * n_b)


# ----------------------------------------------------------------------------
# photon-subtracted states


def ps_log_coefficients(r: float, T: float, count: int) -> np.ndarray:
    x = T * math.tanh(r)
    n = np.arange(count)
    if x == 0:
        out = np.full(count, -np.inf)
        out[0] = 0.0
        return out
    return np.log(n + 1) + n * math.log(x) + 1.5 * math.log1p(-x * x) - 0.5 * math.log1p(x * x)


def ps_coefficients(r: float, T: float, count: int) -> np.ndarray:
    """Raw ``c_n = (n+1) x^n (1 - x^2)^{3/2} / sqrt(1 + x^2)``, ``x = T tanh r``."""
    return np.exp(ps_log_coefficients(r, T, count))


def ps_negativity(r: float, T: float) -> float:
    x = T * math.tanh(r)
    return 2 / (1 - x) - 1 / (1 + x * x) - 1


def photon_subtracted(r: float, T: float, settings: Settings = DEFAULT) -> tuple[FockPureState, float]:
    """Photon-subtracted two-mode squeezed state and its closed-form negativity."""
    if r < 0 or not 0 <= T <= 1:
        raise OutOfRange("need r >= 0 and T in [0, 1]")
    cn = ps_coefficients(r, T, _horizon(settings))
    kept, tail = _truncate(cn, _tail_masses(cn), settings)
    return FockPureState.from_diagonal(kept, tail), ps_negativity(r, T)


def ps_series_band(logc: np.ndarray, n: int) -> np.ndarray:
    """Terms ``m < n`` (opposite parity only) of the Gamma-function series for Q.

    Exactly one of ``F(m, n)``, ``F(n, m)`` survives for opposite parities
    (``1/Gamma`` vanishes at its poles), so each term is one squared
    reciprocal-Gamma product, assembled in log space.
    """
    m = np.arange(1 - n % 2, n, 2)
    odd = np.where(m % 2 == 1, m, n)
    even = np.where(m % 2 == 1, n, m)
    # log|F(odd, even)| = -log|Gamma(-odd/2)| - log|Gamma((1 - even)/2)|
    log_f = -gammaln(-odd / 2) - gammaln((1 - even) / 2)
    log_term = (
        (m + n + 3) * math.log(2.0)
        + math.log(math.pi)
        + 2 * log_f
        + logc[m]
        + logc[n]
        - 2 * np.log(n - m)
        - gammaln(m + 1)
        - gammaln(n + 1)
    )
    return np.exp(log_term)


def q_ps_series(r: float, T: float, n_max: int | None = None, settings: Settings = DEFAULT) -> float:
    """Bit quadrature correlations of the photon-subtracted state by series.

    Terms are added in bands of fixed larger index ``n``; the sum stops once
    the last five bands together add less than ``series_tol``. Raises
    :class:`NotConverged` if that has not happened by ``n_max``.
    """
    limit = settings.series_nmax
    n_max = limit if n_max is None else n_max
    if n_max > limit:
        raise OutOfRange(f"n_max is capped at {limit}")
    if T * math.tanh(r) == 0:
        return 0.0
    logc = ps_log_coefficients(r, T, n_max + 1)
    bands = []
    for n in range(1, n_max + 1):
        bands.append(float(ps_series_band(logc, n).sum()))
        if n >= 5 and sum(bands[-5:]) < settings.series_tol:
            return math.fsum(bands)
    raise NotConverged(f"series for r={r}, T={T} not converged by n_max={n_max}")


# ----------------------------------------------------------------------------
# mixtures with the vacuum


def mixture_analytic(r: float, p: float) -> tuple[float, float]:
    """``(N_m, Q_m)`` of ``p |phi_r><phi_r| + (1-p)|00><00|``."""
    n_m = p * tmsv_negativity(r)
    if p == 0:
        return 0.0, 0.0
    q_m = 2 * p / math.pi * math.atan(n_m * (1 / (2 * n_m + p) + 1 / p))
    return n_m, q_m


def mixture_tmsv_vacuum(r: float, p: float, settings: Settings = DEFAULT):
    """Mixture of a two-mode squeezed vacuum with the vacuum.

    Returns ``(rho, (N_m, Q_m))``.
    """
    if r < 0 or not 0 <= p <= 1:
        raise OutOfRange("need r >= 0 and p in [0, 1]")
    _, psi = tmsv(r, settings)
    vac = FockPureState.from_diagonal([1.0], 0.0)
    rho = FockDensityMatrix.mixture([p, 1 - p], [psi, vac])
    return rho, mixture_analytic(r, p)


# ----------------------------------------------------------------------------
# qutrit counterexample


def qutrit_h() -> FockPureState:
    """``|00>/sqrt(2) + (|02> + |20>)/2``: entangled yet sign-uncorrelated."""
    c = np.zeros((3, 3))
    c[0, 0] = 1 / math.sqrt(2)
    c[0, 2] = c[2, 0] = 0.5
    return FockPureState(c, 0.0)


# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BuiltState:
    """A constructed family member with whatever reference values exist."""

    params: FamilyParams
    state: object
    negativity: float | None = None
    q: float | None = None

    @property
    def cutoff(self) -> int | None:
        return getattr(self.state, "cutoff", None) if not isinstance(self.state, gaussian.CovarianceMatrix) else None

    @property
    def tail_mass(self) -> float:
        return float(getattr(self.state, "tail_mass", 0.0) or 0.0)


def build(params: FamilyParams, representation: str = "auto", settings: Settings = DEFAULT) -> BuiltState:
    """Construct a family member.

    ``representation`` selects ``"gaussian"`` or ``"fock"`` for the two-mode
    squeezed vacuum; ``"auto"`` picks the covariance matrix for it and the
    Fock basis for everything else.
    """
    kind = params.kind
    if kind == "tmsv":
        cm, psi = tmsv(params.r, settings)
        state = psi if representation == "fock" else cm
        return BuiltState(params, state, tmsv_negativity(params.r), tmsv_q(params.r))
    if representation == "gaussian":
        raise OutOfRange(f"{kind} has no Gaussian representation")
    if kind.startswith("bell_"):
        psi, (n_b, q_b) = bell_state(kind, params.p)
        return BuiltState(params, psi, n_b, q_b)
    if kind == "photon_subtracted":
        psi, n_ps = photon_subtracted(params.r, params.T, settings)
        try:
            q = q_ps_series(params.r, params.T, settings=settings)
        except NotConverged:
            q = None
        return BuiltState(params, psi, n_ps, q)
    if kind == "mixture":
        rho, (n_m, q_m) = mixture_tmsv_vacuum(params.r, params.p, settings)
        return BuiltState(params, rho, n_m, q_m)
    return BuiltState(params, qutrit_h(), None, 0.0)
