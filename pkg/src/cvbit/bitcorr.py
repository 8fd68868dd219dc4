"""Bit-correlation strength and its optimization over local quadrature angles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fock, gaussian
from .config import DEFAULT, Settings
from .errors import AllZero

INV_PHI = (math.sqrt(5) - 1) / 2
# |E| values closer than this are treated as ties (rounding noise on ridges)
TIE_TOL = 1e-13


def strength_from_probabilities(p_pp: float, p_pm: float, p_mp: float, p_mm: float) -> float:
    """Normalized strength ``|P= - P!=|`` of sign-bit correlations."""
    probs = np.array([p_pp, p_pm, p_mp, p_mm], dtype=float)
    if np.any(probs < 0):
        raise ValueError("probabilities must be non-negative")
    total = probs.sum()
    if total <= 0:
        raise AllZero("all four joint probabilities are zero")
    p_equal = (p_pp + p_mm) / total
    p_differ = (p_pm + p_mp) / total
    return float(abs(p_equal - p_differ))


@dataclass(frozen=True)
class AnglePair:
    """Local quadrature angles, reduced modulo pi on construction.

    Shifting either angle by pi only flips the sign of E, so ``[0, pi)^2``
    covers every value of ``|E|``.
    """

    theta: float
    phi: float

    def __post_init__(self):
        for name in ("theta", "phi"):
            value = float(np.mod(getattr(self, name), np.pi))
            # mod of a tiny negative angle rounds up to pi itself
            object.__setattr__(self, name, 0.0 if value >= np.pi else value)


@dataclass(frozen=True)
class CorrelationResult:
    q: float
    theta_star: float
    phi_star: float
    e_at_optimum: float
    grid_resolution: int
    refine_iterations: int

    @property
    def angles(self) -> AnglePair:
        return AnglePair(self.theta_star, self.phi_star)


def correlation_function(state, settings: Settings = DEFAULT) -> Callable:
    """Return ``E(theta, phi)`` for ``state`` as an outer-grid evaluator.

    The callable takes 1-d angle arrays and returns ``E`` on their outer
    product. Gaussian states use the closed arcsine law; Fock states use the
    trigonometric-polynomial form of the sign-overlap contraction.
    """
    if isinstance(state, (gaussian.CovarianceMatrix, gaussian.StandardForm)):
        cm = state.to_cm() if isinstance(state, gaussian.StandardForm) else state
        alpha, beta, delta = cm.alpha, cm.beta, cm.delta

        def evaluate(theta, phi):
            ua = np.stack([np.cos(theta), -np.sin(theta)], axis=-1).reshape(-1, 2)
            ub = np.stack([np.cos(phi), -np.sin(phi)], axis=-1).reshape(-1, 2)
            cov = ua @ delta @ ub.T
            var_a = np.einsum("ij,jk,ik->i", ua, alpha, ua)
            var_b = np.einsum("ij,jk,ik->i", ub, beta, ub)
            rho = cov / np.sqrt(np.outer(var_a, var_b))
            return 2 / np.pi * np.arcsin(np.clip(rho, -1.0, 1.0))

        return evaluate
    ks, g = fock.correlation_coefficients(state, settings.tail_tol)
    return lambda theta, phi: fock.evaluate_coefficients(ks, g, theta, phi)


def _golden_max(f, lo: float, hi: float, iterations: int, tol: float):
    """Golden-section search for the maximum of ``f`` on ``[lo, hi]``."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if hi - lo <= tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_q(state, settings: Settings = DEFAULT) -> CorrelationResult:
    """Maximize ``|E(theta, phi)|`` over local quadrature angles.

    A ``grid_resolution``-square grid over ``[0, pi)^2`` picks the best cell
    (ties go to the lexicographically smallest angles). Golden-section line
    searches, one cell wide on each side, then climb from it along both
    axes, both diagonals and the net move of each sweep, until a sweep gains
    less than ``value_tol``. Moves are accepted only on strict improvement,
    so the result never falls below the grid value and the whole procedure
    is deterministic.
    """
    evaluate = correlation_function(state, settings)
    n = settings.grid_resolution
    axis = np.arange(n) * (np.pi / n)
    grid = np.abs(evaluate(axis, axis))
    first = int(np.flatnonzero(grid.ravel() >= grid.max() - TIE_TOL)[0])
    i, j = np.unravel_index(first, grid.shape)
    theta, phi = float(axis[i]), float(axis[j])
    best = float(grid[i, j])
    h = np.pi / n

    # Axes plus both diagonals, then the net move of the sweep (as in
    # Powell's method) so that curved ridges are followed instead of zigzagged.
    directions = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0))

    def line_search(t0, p0, dt, dp):
        def along(s):
            return abs(float(evaluate(t0 + s * dt, p0 + s * dp)[0, 0]))

        step, val = _golden_max(along, -h, h, settings.refine_iterations, settings.angle_tol)
        return t0 + step * dt, p0 + step * dp, val

    for _ in range(settings.max_sweeps):
        start, t_start, p_start = best, theta, phi
        for dt, dp in directions:
            t, p, val = line_search(theta, phi, dt, dp)
            if val > best + TIE_TOL:
                theta, phi, best = t, p, val
        move = math.hypot(theta - t_start, phi - p_start)
        if move > 0:
            t, p, val = line_search(theta, phi, (theta - t_start) / move, (phi - p_start) / move)
            if val > best + TIE_TOL:
                theta, phi, best = t, p, val
        if best - start <= settings.value_tol:
            break

    angles = AnglePair(theta, phi)
    e = float(evaluate(angles.theta, angles.phi)[0, 0])
    return CorrelationResult(
        q=abs(e),
        theta_star=angles.theta,
        phi_star=angles.phi,
        e_at_optimum=e,
        grid_resolution=n,
        refine_iterations=settings.refine_iterations,
    )


def fairness_check(state, angles: AnglePair) -> float:
    """Largest single-mode sign bias ``|P+ - P-|`` at the given angles.

    Gaussian states are taken with zero first moments, whose rotated
    marginals are centred normals, so the bias is identically zero.
    """
    if isinstance(state, (gaussian.CovarianceMatrix, gaussian.StandardForm)):
        return 0.0
    bias_a, bias_b = fock.marginal_sign_bias(state, angles.theta, angles.phi)
    return max(abs(bias_a), abs(bias_b))
