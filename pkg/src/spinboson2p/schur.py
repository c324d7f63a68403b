"""Discretized Schur complement and eigenvalue counting below the edge.

With radial profiles the coupling kernel maps everything into radial
functions and the diagonal part preserves the radial/non-radial split;
below the sector's spectral edge the diagonal part is strictly
positive, so every negative direction of

    S(z) = D(z) - alpha^2 K(z)

lives in the radial sector. All operators here are therefore assembled
on the one-dimensional radial grid, symmetrized by sqrt-weights so
that eigenvalue counts are plain matrix inertia.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, NonPositiveDelta, ValidationError
from .model import Model
from .nevanlinna import (DEFAULT_QUAD_TOL, _check_sigma, _resolvent_integral,
                         sector_bottom)
from .quad import QuadratureRule, integrate_adaptive_rows

ONE_PHOTON = "one-photon-radial"
TWO_PHOTON = "two-photon-symmetric"

#: relative threshold below which an eigenvalue counts as zero
INERTIA_ZERO_THRESHOLD = 1e-12

#: nodes this close to the dispersion infimum belong to the level set
LEVEL_SET_TOL = 1e-14


@dataclass(frozen=True)
class DiscretizedOperator:
    """Dense symmetric matrix over a labeled grid sector.

    The matrix represents the operator in the sqrt-weight orthonormal
    basis; node i of the rule corresponds to row i (possibly after the
    level-set restriction, see ``nodes``).
    """

    rule: QuadratureRule
    matrix: np.ndarray
    sector: str
    z: float
    sigma: int
    nodes: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.nodes.setflags(write=False)

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def _grid_arrays(model: Model, rule: QuadratureRule):
    above = model.omega_above_m(rule.nodes)
    lamw = model.lam_values(rule.nodes) * np.sqrt(rule.weights)
    return above, lamw


def _pair_gap(model: Model, sigma: int, z: float) -> float:
    """2m + sigma*eps - z, the distance to the pair-sector threshold."""
    gap = 2.0 * model.m + sigma * model.epsilon - z
    if gap <= 0.0:
        raise DomainError(
            f"z={z!r} is not below the pair threshold {2.0 * model.m + sigma * model.epsilon!r}")
    return gap


def delta_values(model: Model, sigma: int, alpha: float, z: float,
                 rule: QuadratureRule, *, rel_tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """Diagonal multiplier at the rule nodes: phi evaluated at z - omega(r).

    Computed through the same adaptive resolvent integral as phi, with
    the boundary distances (omega(r_i) - m) + (2m + sigma*eps - z) formed
    without cancellation.
    """
    sigma = _check_sigma(sigma)
    gap = _pair_gap(model, sigma, z)
    above, _ = _grid_arrays(model, rule)
    linear = above + gap - 2.0 * sigma * model.epsilon - model.m
    if alpha == 0.0:
        return linear
    return linear - alpha ** 2 * _resolvent_integral(model, sigma, above + gap, rel_tol)


def delta_diag(model: Model, sigma: int, alpha: float, z: float,
               rule: QuadratureRule, *, rel_tol: float = DEFAULT_QUAD_TOL) -> DiscretizedOperator:
    """Diagonal part of the Schur complement as a dense operator."""
    vals = delta_values(model, sigma, alpha, z, rule, rel_tol=rel_tol)
    return DiscretizedOperator(rule, np.diag(vals), ONE_PHOTON, float(z),
                               sigma, np.arange(len(rule)))


def kernel_K(model: Model, sigma: int, alpha: float, z: float,
             rule: QuadratureRule) -> DiscretizedOperator:
    """Nystrom matrix of the coupling kernel (alpha^2 left to callers)."""
    sigma = _check_sigma(sigma)
    gap = _pair_gap(model, sigma, z)
    above, lamw = _grid_arrays(model, rule)
    mat = _kernels.coupling_kernel(above, lamw, gap)
    return DiscretizedOperator(rule, mat, ONE_PHOTON, float(z), sigma,
                               np.arange(len(rule)))


def split_K(model: Model, sigma: int, alpha: float, z: float,
            rule: QuadratureRule) -> tuple[DiscretizedOperator, DiscretizedOperator]:
    """Split K into a rank-two part and a smooth remainder.

    K1 uses the separable surrogate 1/(a+c) + 1/(b+c) - 1/c of the pair
    resolvent; K2 = K - K1 entrywise, so K1 + K2 = K holds exactly. On
    the dispersion level set both K2 factors collapse and its entries
    vanish identically.
    """
    sigma = _check_sigma(sigma)
    gap = _pair_gap(model, sigma, z)
    above, lamw = _grid_arrays(model, rule)
    full = _kernels.coupling_kernel(above, lamw, gap)
    k1 = _kernels.rank_two_kernel(above, lamw, gap)
    k2 = full - k1
    nodes = np.arange(len(rule))
    return (DiscretizedOperator(rule, k1, ONE_PHOTON, float(z), sigma, nodes),
            DiscretizedOperator(rule, k2, ONE_PHOTON, float(z), sigma, nodes))


def _admissible_nodes(model: Model, rule: QuadratureRule) -> np.ndarray:
    """Indices off the dispersion level set (omega(r) > m)."""
    above = model.omega_above_m(rule.nodes)
    return np.nonzero(above > LEVEL_SET_TOL)[0]


def factored_delta_at_edge(model: Model, sigma: int, alpha: float, z0: float,
                           rule: QuadratureRule, nodes: np.ndarray, *,
                           rel_tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """Diagonal multiplier exactly at the sector edge, in factored form.

    At z0 = m + E the multiplier equals (omega(r) - m) times a strictly
    positive factor; evaluating that product avoids the cancellation
    that the direct difference suffers near the level set.
    """
    gap = _pair_gap(model, sigma, z0)  # equals (m + sigma*eps) - E at the edge
    above = model.omega_above_m(rule.nodes)[nodes]

    factor = np.empty(above.size)
    chunk = 64
    for k in range(0, above.size, chunk):
        sel = slice(k, min(k + chunk, above.size))
        sub = above[sel]

        def rows_sub(s, sub=sub):
            lam2 = model.lam_values(s) ** 2
            sa = model.omega_above_m(s)
            return lam2[None, :] / ((sa[None, :] + gap) * (sa[None, :] + sub[:, None] + gap))

        factor[sel] = integrate_adaptive_rows(
            model.support_radius, rows_sub, rel_tol,
            d=model.dimension, breakpoints=model.breakpoints())
    return above * (1.0 + alpha ** 2 * factor)


def birman_schwinger_T(model: Model, sigma: int, alpha: float, z: float,
                       rule: QuadratureRule, which: str = "full-K", *,
                       rel_tol: float = DEFAULT_QUAD_TOL) -> DiscretizedOperator:
    """Weighted kernel D^{-1/2} K_sel D^{-1/2}.

    which = "full-K": all nodes, requires the diagonal multiplier to be
    strictly positive (z strictly below the sector edge); eigenvalue
    counts of D - alpha^2 K equal the number of eigenvalues of this
    operator exceeding 1/alpha^2.

    which = "K2-only": level-set nodes are dropped and only the smooth
    kernel remainder enters; at z exactly equal to the sector edge the
    diagonal is evaluated in factored form, which makes the entries the
    bounded edge kernel that controls the finiteness of the count.
    """
    sigma = _check_sigma(sigma)
    if which not in ("full-K", "K2-only"):
        raise ValidationError(f"which must be 'full-K' or 'K2-only', got {which!r}")
    gap = _pair_gap(model, sigma, z)
    above_all, lamw_all = _grid_arrays(model, rule)

    if which == "full-K":
        nodes = np.arange(len(rule))
        dvals = delta_values(model, sigma, alpha, z, rule, rel_tol=rel_tol)
        if np.any(dvals <= 0.0):
            raise NonPositiveDelta(
                "diagonal multiplier is not positive; z must be strictly "
                "below the sector's essential bottom for full-K mode")
        kmat = _kernels.coupling_kernel(above_all, lamw_all, gap)
    else:
        nodes = _admissible_nodes(model, rule)
        bottom, _ = sector_bottom(model, sigma, alpha, rel_tol=rel_tol)
        at_edge = abs(z - bottom) <= 1e-12 * max(1.0, abs(bottom))
        if z > bottom and not at_edge:
            raise DomainError(
                f"K2-only mode needs z <= sector bottom {bottom!r}, got {z!r}")
        if at_edge:
            dvals = factored_delta_at_edge(model, sigma, alpha, bottom, rule,
                                           nodes, rel_tol=rel_tol)
        else:
            dvals = delta_values(model, sigma, alpha, z, rule, rel_tol=rel_tol)[nodes]
            if np.any(dvals <= 0.0):
                raise NonPositiveDelta("diagonal multiplier not positive off the level set")
        above = above_all[nodes]
        lamw = lamw_all[nodes]
        kmat = lamw[:, None] * lamw[None, :] * _kernels.psi2_matrix(above, gap)

    scal = 1.0 / np.sqrt(dvals)
    mat = scal[:, None] * kmat * scal[None, :]
    return DiscretizedOperator(rule, mat, ONE_PHOTON, float(z), sigma, nodes)


def _count_negative(matrix: np.ndarray) -> int:
    eigs = np.linalg.eigvalsh(matrix)
    threshold = INERTIA_ZERO_THRESHOLD * max(np.max(np.abs(eigs)), 1e-300)
    return int(np.count_nonzero(eigs < -threshold))


def schur_matrix(model: Model, sigma: int, alpha: float, z: float,
                 rule: QuadratureRule, *, rel_tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """Dense D - alpha^2 K at the given z."""
    sigma = _check_sigma(sigma)
    gap = _pair_gap(model, sigma, z)
    above, lamw = _grid_arrays(model, rule)
    dvals = delta_values(model, sigma, alpha, z, rule, rel_tol=rel_tol)
    mat = -(alpha ** 2) * _kernels.coupling_kernel(above, lamw, gap)
    mat[np.diag_indices_from(mat)] += dvals
    return mat


def count_below(model: Model, sigma: int, alpha: float, z: float,
                rule: QuadratureRule, *, rel_tol: float = DEFAULT_QUAD_TOL,
                _bottom: float | None = None) -> int:
    """Eigenvalue count of the coupled sector operator below z.

    Valid strictly below the sector's essential bottom, where the count
    equals the negative inertia of D - alpha^2 K on the radial grid.
    """
    sigma = _check_sigma(sigma)
    bottom = _bottom if _bottom is not None else sector_bottom(model, sigma, alpha,
                                                               rel_tol=rel_tol)[0]
    if z >= bottom:
        raise DomainError(
            f"count_below needs z < sector bottom {bottom!r}, got {z!r}")
    return _count_negative(schur_matrix(model, sigma, alpha, z, rule, rel_tol=rel_tol))


def discrete_eigenvalues(model: Model, sigma: int, alpha: float,
                         rule: QuadratureRule, gap: float = 1e-3, *,
                         location_tol: float = 1e-8,
                         rel_tol: float = DEFAULT_QUAD_TOL) -> list[float]:
    """Jump locations of z -> count_below on (-inf, bottom - gap).

    Returned with multiplicity (a jump of size k contributes k copies);
    near-degenerate jumps closer than the location tolerance merge.
    """
    if gap <= 0:
        raise ValidationError("gap must be positive")
    sigma = _check_sigma(sigma)
    bottom, _ = sector_bottom(model, sigma, alpha, rel_tol=rel_tol)
    z_hi = bottom - gap

    def count(z):
        return count_below(model, sigma, alpha, z, rule, rel_tol=rel_tol, _bottom=bottom)

    c_hi = count(z_hi)
    if c_hi == 0:
        return []
    width = max(1.0, model.epsilon)
    z_lo = z_hi - width
    while count(z_lo) > 0:
        width *= 2.0
        z_lo = z_hi - width
        if width > 1e12:
            raise DomainError("counting function does not vanish far below the edge")

    found: list[float] = []

    def refine(lo, hi, c_lo, c_hi):
        if c_hi == c_lo:
            return
        if hi - lo <= location_tol:
            mid = 0.5 * (lo + hi)
            found.extend([mid] * (c_hi - c_lo))
            return
        mid = 0.5 * (lo + hi)
        c_mid = count(mid)
        refine(lo, mid, c_lo, c_mid)
        refine(mid, hi, c_mid, c_hi)

    refine(z_lo, z_hi, 0, c_hi)
    return sorted(found)


def full_count_bound_check(model: Model, alpha: float, z: float,
                           rule: QuadratureRule, *,
                           rel_tol: float = DEFAULT_QUAD_TOL) -> bool:
    """Rank-bound sanity check between the full and reduced operators.

    Counts for the full operator (both sectors, vacuum included) must
    not exceed the two reduced-sector counts plus 4.
    """
    from . import oracle

    lhs = 0
    rhs = 0
    for sigma in (1, -1):
        trunc = oracle.truncate_full(model, sigma, alpha, rule)
        lhs += oracle.count_below_threshold(trunc, z)
        rhs += count_below(model, sigma, alpha, z, rule, rel_tol=rel_tol)
    return lhs <= rhs + 4
