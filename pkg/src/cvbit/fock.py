"""Truncated number-basis engine for non-Gaussian two-mode states.

Oscillator eigenfunctions use the vacuum-variance-one convention
``x = a + a^dagger``. A local phase-space rotation by ``theta`` multiplies
the Fock amplitude of ``|m>`` by ``exp(i m theta)``, so that measuring
``x`` on the rotated state is measuring ``x^theta`` on the original.

Only position-space marginals are ever needed: with the sign-overlap
matrix ``S[m, k] = int sgn(x) psi_m(x) psi_k(x) dx`` the sign-binned
correlation is a contraction of the state with ``S (x) S``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .config import DEFAULT
from .errors import NotHermitian, NotNormalized, TailMassExceeded


def hermite_psi_table(nmax: int, x) -> np.ndarray:
    """Eigenfunctions ``psi_0 .. psi_nmax`` at points ``x``, shape ``(len(x), nmax+1)``.

    Three-term recurrence ``psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1)``;
    no factorials or Hermite polynomials are formed.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, nmax + 1))
    out[:, 0] = (2 * np.pi) ** -0.25 * np.exp(-0.25 * x**2)
    if nmax >= 1:
        out[:, 1] = x * out[:, 0]
    for n in range(1, nmax):
        out[:, n + 1] = (x * out[:, n] - np.sqrt(n) * out[:, n - 1]) / np.sqrt(n + 1)
    return out


def hermite_psi(n: int, x):
    """Normalized oscillator eigenfunction ``psi_n(x)`` (vacuum variance 1)."""
    vals = hermite_psi_table(n, x)[:, n]
    return float(vals[0]) if np.ndim(x) == 0 else vals


@lru_cache(maxsize=32)
def _sign_overlap(dim: int) -> np.ndarray:
    nmax = dim - 1
    # psi_n lives inside |x| < sqrt(4n+2); beyond that the Gaussian factor kills it
    upper = np.sqrt(4 * nmax + 2) + 14.0
    nodes, weights = np.polynomial.legendre.leggauss(max(4 * dim, 96))
    x = 0.5 * upper * (nodes + 1)
    w = 0.5 * upper * weights
    psi = hermite_psi_table(nmax, x)
    half = psi.T @ (w[:, None] * psi)
    idx = np.arange(dim)
    odd = (idx[:, None] + idx[None, :]) % 2 == 1
    s = np.where(odd, 2 * half, 0.0)
    s = 0.5 * (s + s.T)
    s.setflags(write=False)
    return s


def sign_overlap_matrix(cutoff: int) -> np.ndarray:
    """``S[m, k] = int sgn(x) psi_m psi_k dx`` for ``m, k < cutoff``.

    Equal-parity entries are exactly zero; opposite-parity ones are twice
    the half-line overlap, computed by Gauss-Legendre quadrature with
    ``4 * cutoff`` nodes. Cached per cutoff, returned read-only.
    """
    if not 1 <= cutoff <= 201:
        raise ValueError("cutoff must lie in [1, 201]")
    return _sign_overlap(int(cutoff))


def _check_tail(tail_mass: float, tol: float):
    if tail_mass > tol:
        raise TailMassExceeded(f"truncation tail mass {tail_mass:.3g} exceeds {tol:.3g}")


@dataclass(frozen=True, eq=False)
class FockPureState:
    """Pure state ``sum c[m, n] |m, n>`` with ``m, n < cutoff``.

    ``tail_mass`` is the norm discarded by truncation. Constructors that
    know it (catalog families) pass it explicitly; otherwise the mass on the
    outermost index layer is used as a proxy.
    """

    coeffs: np.ndarray
    tail_mass: float | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("coefficients must form a square matrix")
        norm = np.sum(np.abs(c) ** 2)
        if abs(norm - 1) > DEFAULT.norm_tol:
            raise NotNormalized(f"state norm {norm!r} differs from 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.tail_mass is None:
            edge = np.sum(np.abs(c[-1, :]) ** 2) + np.sum(np.abs(c[:-1, -1]) ** 2)
            object.__setattr__(self, "tail_mass", float(edge))

    @property
    def cutoff(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_diagonal(cls, cn, tail_mass: float | None = None) -> "FockPureState":
        return cls(np.diag(np.asarray(cn, dtype=complex)), tail_mass)

    def padded(self, cutoff: int) -> "FockPureState":
        d = self.cutoff
        if cutoff < d:
            raise ValueError("can only pad to a larger cutoff")
        c = np.zeros((cutoff, cutoff), dtype=complex)
        c[:d, :d] = self.coeffs
        return FockPureState(c, self.tail_mass)


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Two-mode density matrix stored as ``rho[m, n, m', n'] = <m n|rho|m' n'>``."""

    entries: np.ndarray
    tail_mass: float = 0.0
    _validated: bool = field(default=True, repr=False)

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim == 2:
            d = int(round(np.sqrt(rho.shape[0])))
            rho = rho.reshape(d, d, d, d)
        d = rho.shape[0]
        if rho.shape != (d, d, d, d):
            raise ValueError("density matrix must have shape (d, d, d, d) or (d^2, d^2)")
        mat = rho.reshape(d * d, d * d)
        if np.abs(mat - mat.conj().T).max() > DEFAULT.hermitian_tol:
            raise NotHermitian("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1) > DEFAULT.norm_tol:
            raise NotNormalized(f"trace {tr!r} differs from 1")
        if self._validated and np.linalg.eigvalsh(mat).min() < -DEFAULT.psd_tol:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        d = self.cutoff
        return self.entries.reshape(d * d, d * d)

    @classmethod
    def from_pure(cls, state: FockPureState) -> "FockDensityMatrix":
        v = state.coeffs.reshape(-1)
        d = state.cutoff
        rho = np.outer(v, v.conj()).reshape(d, d, d, d)
        return cls(rho, state.tail_mass or 0.0, _validated=False)

    @classmethod
    def mixture(cls, weights, states) -> "FockDensityMatrix":
        """Convex combination of pure or mixed states, padded to a common cutoff."""
        states = list(states)
        d = max(s.cutoff for s in states)
        total = np.zeros((d, d, d, d), dtype=complex)
        tail = 0.0
        for w, s in zip(weights, states):
            if isinstance(s, FockPureState):
                s = cls.from_pure(s.padded(d))
            else:
                k = s.cutoff
                pad = np.zeros((d, d, d, d), dtype=complex)
                pad[:k, :k, :k, :k] = s.entries
                s = cls(pad, s.tail_mass, _validated=False)
            total += w * s.entries
            tail += w * s.tail_mass
        return cls(total, tail)


def rotate_mode_phases(state, theta: float, phi: float):
    """Local phase-space rotations: ``c[m, n] -> exp(i(m theta + n phi)) c[m, n]``."""
    d = state.cutoff
    k = np.arange(d)
    pa = np.exp(1j * k * theta)
    pb = np.exp(1j * k * phi)
    if isinstance(state, FockPureState):
        return FockPureState(pa[:, None] * state.coeffs * pb[None, :], state.tail_mass)
    rho = (
        pa[:, None, None, None]
        * pb[None, :, None, None]
        * pa.conj()[None, None, :, None]
        * pb.conj()[None, None, None, :]
        * state.entries
    )
    return FockDensityMatrix(rho, state.tail_mass, _validated=False)


def e_fock(state, theta: float, phi: float, tail_tol: float = DEFAULT.tail_tol) -> float:
    """Sign-binned quadrature correlation of a Fock-basis state."""
    _check_tail(state.tail_mass or 0.0, tail_tol)
    s = sign_overlap_matrix(state.cutoff)
    rotated = rotate_mode_phases(state, theta, phi)
    if isinstance(rotated, FockPureState):
        c = rotated.coeffs
        val = np.sum(c.conj() * (s @ c @ s))
    else:
        val = np.einsum("abcd,ca,db->", rotated.entries, s, s)
    return float(val.real)


def correlation_coefficients(state, tail_tol: float = DEFAULT.tail_tol) -> tuple[np.ndarray, np.ndarray]:
    """Trigonometric-polynomial form of ``E(theta, phi)``.

    Returns ``(k, G)`` such that
    ``E(theta, phi) = Re sum_{i,j} G[i, j] exp(1j*(k[i]*theta + k[j]*phi))``.
    Only odd frequency differences survive the parity selection rule, so
    ``k`` holds the odd integers in ``(-cutoff, cutoff)``.
    """
    _check_tail(state.tail_mass or 0.0, tail_tol)
    d = state.cutoff
    s = sign_overlap_matrix(d)
    ks = np.arange(-(d - 1), d)
    g = np.zeros((2 * d - 1, 2 * d - 1), dtype=complex)
    if isinstance(state, FockPureState):
        c = state.coeffs
        for dm in range(-(d - 1), d):
            if dm % 2 == 0:
                continue
            rows = np.arange(max(0, dm), min(d, d + dm))
            a = c[rows, :] * s[rows, rows - dm][:, None]
            m = a.T @ c[rows - dm, :].conj()
            ms = m * s
            for dn in range(-(d - 1), d, 1):
                if dn % 2 == 0:
                    continue
                g[dm + d - 1, dn + d - 1] = np.trace(ms, offset=-dn)
    else:
        rho = state.entries
        k = rho * s.T[:, None, :, None] * s.T[None, :, None, :]
        idx = np.arange(d)
        dm = idx[:, None, None, None] - idx[None, None, :, None] + d - 1
        dn = idx[None, :, None, None] - idx[None, None, None, :] + d - 1
        flat = np.broadcast_to(dm * (2 * d - 1) + dn, k.shape).ravel()
        size = (2 * d - 1) ** 2
        g = (
            np.bincount(flat, weights=k.real.ravel(), minlength=size)
            + 1j * np.bincount(flat, weights=k.imag.ravel(), minlength=size)
        ).reshape(2 * d - 1, 2 * d - 1)
    odd = ks % 2 != 0
    return ks[odd], g[np.ix_(odd, odd)]


def evaluate_coefficients(ks: np.ndarray, g: np.ndarray, theta, phi) -> np.ndarray:
    """Evaluate the trigonometric polynomial on the outer grid ``theta x phi``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    a = np.exp(1j * np.outer(theta, ks))
    b = np.exp(1j * np.outer(ks, phi))
    return (a @ g @ b).real


def marginal_sign_bias(state, theta: float, phi: float) -> tuple[float, float]:
    """``(P+ - P-)`` of each single-mode sign outcome at the given angles."""
    s = sign_overlap_matrix(state.cutoff)
    rotated = rotate_mode_phases(state, theta, phi)
    if isinstance(rotated, FockPureState):
        c = rotated.coeffs
        rho_a = c @ c.conj().T
        rho_b = c.T @ c.conj()
    else:
        rho_a = np.einsum("abcb->ac", rotated.entries)
        rho_b = np.einsum("abad->bd", rotated.entries)
    return float(np.sum(rho_a * s.T).real), float(np.sum(rho_b * s.T).real)


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose on mode B of a ``(d, d, d, d)`` tensor, returned as a matrix."""
    d = rho.shape[0]
    return rho.transpose(0, 3, 2, 1).reshape(d * d, d * d)


def _block_eigvalsh(mat) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, diagonalizing its decoupled blocks separately.

    Blocks are the connected components of the sparsity pattern; blocks of
    equal size are stacked and diagonalized in one batched call.
    """
    coo = sparse.coo_matrix(mat)
    keep = coo.data != 0
    rows, cols, data = coo.row[keep], coo.col[keep], coo.data[keep]
    size = coo.shape[0]
    pattern = sparse.coo_matrix((np.ones(rows.size), (rows, cols)), shape=coo.shape)
    ncomp, labels = connected_components(pattern.tocsr(), directed=False)
    order = np.argsort(labels, kind="stable")
    block_size = np.bincount(labels, minlength=ncomp)
    start = np.concatenate([[0], np.cumsum(block_size)[:-1]])
    local = np.empty(size, dtype=np.int64)
    local[order] = np.arange(size) - start[labels[order]]
    out = []
    for k in np.unique(block_size):
        blocks = np.flatnonzero(block_size == k)
        slot = np.full(ncomp, -1)
        slot[blocks] = np.arange(blocks.size)
        stack = np.zeros((blocks.size, k, k), dtype=data.dtype)
        sel = slot[labels[rows]] >= 0
        stack[slot[labels[rows[sel]]], local[rows[sel]], local[cols[sel]]] = data[sel]
        out.append(np.linalg.eigvalsh(stack).ravel())
    return np.concatenate(out)


def _pure_partial_transpose(state: FockPureState):
    """Sparse ``rho^{T_B}`` of a pure state, built from the coefficient support.

    ``<m n|rho^{T_B}|m' n'> = c[m, n'] conj(c[m', n])``.
    """
    d = state.cutoff
    c = state.coeffs
    m, n = np.nonzero(c)
    vals = c[m, n]
    # pair every support point (m, n') with every (m', n)
    row = (m[:, None] * d + n[None, :]).ravel()
    col = (m[None, :] * d + n[:, None]).ravel()
    data = (vals[:, None] * vals.conj()[None, :]).ravel()
    return sparse.csr_matrix((data, (row, col)), shape=(d * d, d * d))


def negativity_fock(rho) -> float:
    """``(||rho^{T_B}||_1 - 1)/2`` from the eigenvalues of the partial transpose.

    The partial transpose is split into its decoupled blocks (connected
    components of its sparsity pattern) before diagonalization. Pure states
    are handled without forming the full density matrix.
    """
    if isinstance(rho, FockPureState):
        pt = _pure_partial_transpose(rho)
    else:
        mat = rho.matrix
        if np.abs(mat - mat.conj().T).max() > DEFAULT.hermitian_tol:
            raise NotHermitian("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1) > DEFAULT.norm_tol:
            raise NotNormalized(f"trace {tr!r} differs from 1")
        pt = partial_transpose(rho.entries)
        pt = 0.5 * (pt + pt.conj().T)
    eig = _block_eigvalsh(pt)
    return float(max(0.0, (np.abs(eig).sum() - 1) / 2))


def schmidt_negativity(state: FockPureState) -> float:
    """Pure-state negativity ``((sum_i s_i)^2 - 1)/2`` from Schmidt coefficients."""
    s = np.linalg.svd(state.coeffs, compute_uv=False)
    return float(max(0.0, (s.sum() ** 2 - 1) / 2))
