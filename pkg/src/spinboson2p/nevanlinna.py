"""Sector scalar functions and the bottom of the essential spectrum.

For each sector sigma = +-1 the function

    phi(z) = -sigma*eps - z - alpha^2 * S int |lam|^2 r^{d-1} dr / (omega(r) + sigma*eps - z)

is strictly decreasing on (-inf, m + sigma*eps), tends to +inf on the
left, and its unique zero (when it has one) marks the sector's spectral
edge shifted by the photon mass: the essential spectrum of the coupled
sector operator starts at m + zero. Everything in this module is a
consequence of that monotone structure: root bracketing by doubling,
the boundary limits, the regime split, and the weak-coupling expansion
of the lowest zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import quad
from .errors import BracketFailure, DomainError, NoConvergence, ValidationError
from .model import (CASE2, CouplingClass, Model, _infrared_norm_sq,
                    alpha_critical, classify, weighted_l2_norm_sq)

SIGMA_PLUS = 1
SIGMA_MINUS = -1

#: tags for how a sector's essential bottom was obtained
ROOT = "root"
UNPERTURBED = "unperturbed-branch"
BOUNDARY_DEGENERATE = "boundary-degenerate"

#: refusal distance to the domain boundary, relative to max(1, |boundary|)
BOUNDARY_GUARD = 1e-12

DEFAULT_QUAD_TOL = 1e-11
DEFAULT_ROOT_RESIDUAL = 1e-9


class _NotApplicable:
    """Marker for queries that do not apply to the model's regime."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NOT_APPLICABLE"


NOT_APPLICABLE = _NotApplicable()


def _check_sigma(sigma) -> int:
    if sigma not in (1, -1):
        raise ValidationError(f"sigma must be +1 or -1, got {sigma!r}")
    return int(sigma)


def _resolvent_integral(model: Model, sigma: int, gaps, rel_tol: float) -> np.ndarray:
    """S int |lam|^2 r^{d-1} / ((omega(r)-m) + gap) dr for each gap > 0.

    gap = (m + sigma*eps) - z is kept as a single number so the
    denominator never suffers cancellation as z approaches the boundary.
    """
    gaps = np.atleast_1d(np.asarray(gaps, dtype=float))
    out = np.empty(gaps.size)
    chunk = 64
    for k in range(0, gaps.size, chunk):
        sel = slice(k, min(k + chunk, gaps.size))
        sub = gaps[sel]

        def rows_sub(r, sub=sub):
            lam2 = model.lam_values(r) ** 2
            above = model.omega_above_m(r)
            return lam2[None, :] / (above[None, :] + sub[:, None])

        out[sel] = quad.integrate_adaptive_rows(
            model.support_radius, rows_sub, rel_tol,
            d=model.dimension, breakpoints=model.breakpoints())
    return out


def _phi_from_gap(model, sigma, alpha, gaps, rel_tol) -> np.ndarray:
    """phi at z = boundary - gap, vectorized over gaps."""
    gaps = np.atleast_1d(np.asarray(gaps, dtype=float))
    linear = gaps - 2.0 * sigma * model.epsilon - model.m
    if alpha == 0.0:
        return linear
    return linear - alpha ** 2 * _resolvent_integral(model, sigma, gaps, rel_tol)


def phi(model: Model, sigma: int, alpha: float, z: float, *,
        rel_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Evaluate the sector function at z < m + sigma*eps.

    Refuses z within a guard distance of the boundary; callers that
    need the boundary value use phi_boundary_limit instead.
    """
    sigma = _check_sigma(sigma)
    if alpha < 0:
        raise ValidationError("alpha must be >= 0")
    boundary = model.sector_boundary(sigma)
    gap = boundary - z
    if gap <= BOUNDARY_GUARD * max(1.0, abs(boundary)):
        raise DomainError(
            f"z={z!r} is at or beyond the sector boundary {boundary!r}")
    return float(_phi_from_gap(model, sigma, alpha, gap, rel_tol)[0])


def phi_many(model: Model, sigma: int, alpha: float, z_values, *,
             rel_tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """Vectorized phi over a batch of z values (shared refinement loop)."""
    sigma = _check_sigma(sigma)
    boundary = model.sector_boundary(sigma)
    z_values = np.asarray(z_values, dtype=float)
    gaps = boundary - z_values
    if np.any(gaps <= BOUNDARY_GUARD * max(1.0, abs(boundary))):
        raise DomainError("a batch entry is at or beyond the sector boundary")
    return _phi_from_gap(model, sigma, alpha, gaps, rel_tol)


def phi_boundary_limit(model: Model, sigma: int, alpha: float) -> float:
    """Limit of phi as z approaches m + sigma*eps from the left.

    -inf for declared-divergent models; otherwise the finite value
    -2*sigma*eps - m - alpha^2 ||lam/sqrt(omega-m)||^2.
    """
    sigma = _check_sigma(sigma)
    if model.is_case1():
        return -math.inf
    return float(-2.0 * sigma * model.epsilon - model.m
                 - alpha ** 2 * _infrared_norm_sq(model))


def find_zero(model: Model, sigma: int, alpha: float, *,
              rel_tol: float = DEFAULT_QUAD_TOL,
              residual_tol: float = DEFAULT_ROOT_RESIDUAL) -> Optional[float]:
    """Unique zero of the sector function, or None when it has none.

    None occurs exactly in the integrable regime with sigma = -1 and
    alpha <= alpha_cr (boundary limit >= 0, no sign change available).
    Bracketing starts one unit left of the boundary and doubles the
    distance until the function is positive; the right end marches
    toward the boundary until the function is negative. A BracketFailure
    on the right side means the zero sits closer to the boundary than
    the evaluation guard allows, which happens for weakly coupled
    divergent-class models where the approach is exponentially slow.
    """
    sigma = _check_sigma(sigma)
    if alpha <= 0:
        raise ValidationError("find_zero requires alpha > 0")
    boundary = model.sector_boundary(sigma)
    scale = max(1.0, model.epsilon)

    if not model.is_case1() and phi_boundary_limit(model, sigma, alpha) >= 0.0:
        return None

    def f(z):
        return float(_phi_from_gap(model, sigma, alpha, boundary - z, rel_tol)[0])

    # right bracket: march toward the boundary until phi < 0
    step = scale
    v_hi = f(boundary - step)
    while v_hi >= 0.0:
        if v_hi == 0.0:
            return boundary - step
        step *= 0.5
        if step <= 2.0 * BOUNDARY_GUARD * max(1.0, abs(boundary)):
            raise BracketFailure(
                "no sign change before the boundary guard; the zero is "
                "numerically indistinguishable from the sector boundary")
        v_hi = f(boundary - step)
    z_hi = boundary - step

    # left bracket: double the distance until phi > 0
    width = scale
    z_lo = z_hi - width
    v_lo = f(z_lo)
    for _ in range(200):
        if v_lo > 0.0:
            break
        width *= 2.0
        z_lo = z_hi - width
        v_lo = f(z_lo)
    else:
        raise BracketFailure("no positive value found while doubling leftward")

    root = brentq(f, z_lo, z_hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    residual = abs(f(root))
    if residual >= residual_tol * (1.0 + abs(root)):
        raise BracketFailure(
            f"root residual {residual!r} exceeds tolerance at z={root!r}")
    return float(root)


def _phi_minus_sign_at(model: Model, alpha: float, z: float, rel_tol: float) -> float:
    """Sign probe of the sigma=-1 function at z, tolerant of tiny gaps.

    Used to decide which sector attains the minimum without computing
    the sigma=-1 zero. The gap may be below the public evaluation
    guard; the integral is still well defined for positive gaps, and a
    divergent refinement is reported as -inf (the strongly singular
    class drives the function to -inf at the boundary).
    """
    gap = model.sector_boundary(-1) - z
    if gap <= 0.0:
        return -math.inf
    try:
        return float(_phi_from_gap(model, -1, alpha, gap, rel_tol)[0])
    except NoConvergence:
        return -math.inf


def _bottom_core(model: Model, alpha: float, rel_tol: float):
    """(energy, e_plus, regime) with the sigma=-1 zero solved only if lower.

    The sign of the sigma=-1 function at the sigma=+1 zero decides
    whether the sigma=-1 zero lies below it; when it does, it is
    bracketed on (-inf, e_plus] where evaluation never approaches the
    boundary.
    """
    regime = classify(model, alpha)
    e_plus = find_zero(model, SIGMA_PLUS, alpha, rel_tol=rel_tol)
    if regime.tag == "Case2b":
        return e_plus, e_plus, regime
    s = _phi_minus_sign_at(model, alpha, e_plus, rel_tol)
    if s >= 0.0:
        # sigma=-1 zero (if any is reachable) lies right of e_plus
        return e_plus, e_plus, regime
    if not math.isfinite(s):
        raise BracketFailure(
            "sector comparison is degenerate at machine precision")
    boundary = model.sector_boundary(-1)

    def f(z):
        return float(_phi_from_gap(model, -1, alpha, boundary - z, rel_tol)[0])

    width = max(1.0, model.epsilon)
    z_lo = e_plus - width
    for _ in range(200):
        if f(z_lo) > 0.0:
            break
        width *= 2.0
        z_lo = e_plus - width
    else:
        raise BracketFailure("no positive value bracketing the sigma=-1 zero")
    e_minus = brentq(f, z_lo, e_plus, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    return float(min(e_plus, e_minus)), e_plus, regime


def bottom_energy(model: Model, alpha: float, *,
                  rel_tol: float = DEFAULT_QUAD_TOL) -> tuple[float, CouplingClass]:
    """Lowest sector zero E(alpha) together with the regime tag.

    In the integrable small-coupling regime only the sigma=+1 zero
    exists and defines E; otherwise E is the smaller of the two sector
    zeros.
    """
    energy, _, regime = _bottom_core(model, alpha, rel_tol)
    return energy, regime


@dataclass(frozen=True)
class EssentialSpectrum:
    """Bottom of the essential spectrum and its per-sector branches.

    sigma_bottoms maps sigma to the bottom of that sector's essential
    spectrum; sigma_kinds records whether the branch came from a sector
    zero, from the unperturbed pair branch (integrable small-coupling
    regime), or from a boundary-degenerate zero that cannot be resolved
    in floating point.
    """

    bottom: float
    attaining_sigma: int
    sigma_bottoms: dict
    sigma_kinds: dict
    energy: float
    regime: CouplingClass


def essential_spectrum(model: Model, alpha: float, *,
                       rel_tol: float = DEFAULT_QUAD_TOL) -> EssentialSpectrum:
    """Assemble the essential spectrum report for (model, alpha)."""
    energy, e_plus, regime = _bottom_core(model, alpha, rel_tol)
    bottoms = {SIGMA_PLUS: model.m + e_plus}
    kinds = {SIGMA_PLUS: ROOT}
    if regime.tag == "Case2b":
        bottoms[SIGMA_MINUS] = 2.0 * model.m - model.epsilon
        kinds[SIGMA_MINUS] = UNPERTURBED
    else:
        try:
            e_minus = find_zero(model, SIGMA_MINUS, alpha, rel_tol=rel_tol)
            bottoms[SIGMA_MINUS] = model.m + e_minus
            kinds[SIGMA_MINUS] = ROOT
        except BracketFailure:
            # the zero hugs the boundary closer than machine resolution
            bottoms[SIGMA_MINUS] = 2.0 * model.m - model.epsilon
            kinds[SIGMA_MINUS] = BOUNDARY_DEGENERATE
    attaining = min(bottoms, key=bottoms.get)
    return EssentialSpectrum(model.m + energy, attaining, bottoms, kinds,
                             energy, regime)


def asymptotic_coefficient(model: Model, *, rel_tol: float = DEFAULT_QUAD_TOL) -> float:
    """||lam / sqrt(omega + 2*eps)||^2, the weak-coupling slope.

    The lowest zero satisfies E_plus(alpha) = -eps - alpha^2 * c + o(alpha^2)
    with this coefficient c; the integrand is bounded since
    omega + 2*eps >= 2*eps > 0.
    """
    shift = model.m + 2.0 * model.epsilon
    return weighted_l2_norm_sq(model, lambda r: 1.0 / (model.omega_above_m(r) + shift),
                               rel_tol=rel_tol)


def check_small_alpha_regime(model: Model, alpha: float):
    """True when alpha is small enough that the sigma=+1 zero is lowest.

    Applies to integrable models only: the condition is
    alpha <= sqrt(2*eps) / ||lam/sqrt(omega-m)||. Divergent-class
    models get the NOT_APPLICABLE marker.
    """
    if model.is_case1():
        return NOT_APPLICABLE
    norm_sq = _infrared_norm_sq(model)
    return bool(alpha ** 2 * norm_sq <= 2.0 * model.epsilon)


def sector_bottom(model: Model, sigma: int, alpha: float, *,
                  rel_tol: float = DEFAULT_QUAD_TOL) -> tuple[float, str]:
    """Bottom of the sigma-sector essential spectrum, with its kind tag."""
    sigma = _check_sigma(sigma)
    if sigma == SIGMA_PLUS:
        return model.m + find_zero(model, sigma, alpha, rel_tol=rel_tol), ROOT
    if classify(model, alpha).tag == "Case2b":
        return 2.0 * model.m - model.epsilon, UNPERTURBED
    try:
        return model.m + find_zero(model, sigma, alpha, rel_tol=rel_tol), ROOT
    except BracketFailure:
        return 2.0 * model.m - model.epsilon, BOUNDARY_DEGENERATE


# -- alpha sweeps --------------------------------------------------------------

@dataclass(frozen=True)
class ScanPoint:
    alpha: float
    e_plus: float
    e_minus: Optional[float]
    minus_kind: str
    energy: float
    ess_bottom: float
    regime: str


def scan_alpha(model: Model, alphas, *, rel_tol: float = DEFAULT_QUAD_TOL) -> list[ScanPoint]:
    """Sweep the coupling grid and tabulate zeros, E and the bottom."""
    points = []
    for a in alphas:
        rep = essential_spectrum(model, float(a), rel_tol=rel_tol)
        e_plus = rep.sigma_bottoms[SIGMA_PLUS] - model.m
        kind = rep.sigma_kinds[SIGMA_MINUS]
        e_minus = rep.sigma_bottoms[SIGMA_MINUS] - model.m if kind == ROOT else None
        points.append(ScanPoint(float(a), e_plus, e_minus, kind,
                                rep.energy, rep.bottom, rep.regime.tag))
    return points


def format_float(x: float) -> str:
    return f"{x:.17g}"


def scan_csv(points) -> str:
    """RFC-4180 CSV (CRLF lines, 17 significant digits, empty = absent)."""
    lines = ["alpha,E_plus,E_minus,E,ess_bottom"]
    for p in points:
        e_minus = "" if p.e_minus is None else format_float(p.e_minus)
        lines.append(",".join([format_float(p.alpha), format_float(p.e_plus),
                               e_minus, format_float(p.energy),
                               format_float(p.ess_bottom)]))
    return "\r\n".join(lines) + "\r\n"
