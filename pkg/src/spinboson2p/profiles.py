"""Radial profile functions for dispersion and coupling.

All model data is radial: a profile maps r = |k| >= 0 to a real value.
Dispersion kinds must expose their infimum m exactly and evaluate
omega(r) - m without cancellation, because that difference enters
denominators that are driven to zero near spectral boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

DISPERSION_KINDS = ("abs", "relativistic", "flat-bottom", "tabulated")
COUPLING_KINDS = ("box", "sqrt-omega-box", "tabulated")


@dataclass(frozen=True)
class RadialProfile:
    """One radial parameter function.

    kind:
        "abs"            omega(r) = r
        "relativistic"   omega(r) = sqrt(r^2 + mass^2)
        "flat-bottom"    omega(r) = max(r - knee, 0) + floor
        "box"            lam(r) = 1 for r <= support_radius, else 0
        "sqrt-omega-box" lam(r) = sqrt(omega(r)) for r <= support_radius
        "tabulated"      linear interpolation of (r, value) pairs;
                         constant beyond the last node when used as a
                         dispersion, zero beyond the support when used
                         as a coupling

    Tabulated data is stored as tuples so profiles stay hashable and
    safely shareable across threads.
    """

    kind: str
    params: dict = field(default_factory=dict)
    table_r: tuple = ()
    table_v: tuple = ()

    def __post_init__(self):
        if self.kind == "tabulated":
            r = np.asarray(self.table_r, dtype=float)
            v = np.asarray(self.table_v, dtype=float)
            if r.size < 2 or r.size != v.size:
                raise ValidationError("tabulated profile needs >= 2 (r, value) pairs")
            if np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ValidationError("tabulated radii must be nonnegative and strictly increasing")
            object.__setattr__(self, "table_r", tuple(float(x) for x in r))
            object.__setattr__(self, "table_v", tuple(float(x) for x in v))
        object.__setattr__(self, "params", dict(self.params))

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items())), self.table_r, self.table_v))

    def __eq__(self, other):
        if not isinstance(other, RadialProfile):
            return NotImplemented
        return (self.kind, self.params, self.table_r, self.table_v) == (
            other.kind, other.params, other.table_r, other.table_v)

    # -- dispersion interface ------------------------------------------------

    def dispersion_infimum(self) -> float:
        """Exact infimum per kind (table minimum for tabulated data)."""
        if self.kind == "abs":
            return 0.0
        if self.kind == "relativistic":
            return float(self.params["mass"])
        if self.kind == "flat-bottom":
            return float(self.params["floor"])
        if self.kind == "tabulated":
            return float(min(self.table_v))
        raise ValidationError(f"{self.kind!r} is not a dispersion kind")

    def dispersion(self, r):
        """omega(r), vectorized."""
        r = np.asarray(r, dtype=float)
        if self.kind == "abs":
            return r.copy()
        if self.kind == "relativistic":
            mass = float(self.params["mass"])
            return np.hypot(r, mass)
        if self.kind == "flat-bottom":
            knee = float(self.params["knee"])
            floor = float(self.params["floor"])
            return np.maximum(r - knee, 0.0) + floor
        if self.kind == "tabulated":
            return np.interp(r, self.table_r, self.table_v)
        raise ValidationError(f"{self.kind!r} is not a dispersion kind")

    def dispersion_above_infimum(self, r):
        """omega(r) - m, computed without subtractive cancellation."""
        r = np.asarray(r, dtype=float)
        if self.kind == "abs":
            return r.copy()
        if self.kind == "relativistic":
            # sqrt(r^2+mass^2)-mass = r^2/(sqrt(r^2+mass^2)+mass)
            mass = float(self.params["mass"])
            return r * r / (np.hypot(r, mass) + mass)
        if self.kind == "flat-bottom":
            return np.maximum(r - float(self.params["knee"]), 0.0)
        if self.kind == "tabulated":
            return np.interp(r, self.table_r, self.table_v) - min(self.table_v)
        raise ValidationError(f"{self.kind!r} is not a dispersion kind")

    # -- coupling interface --------------------------------------------------

    def coupling(self, r, support_radius, dispersion=None):
        """lam(r), vectorized; identically zero beyond support_radius."""
        r = np.asarray(r, dtype=float)
        inside = r <= support_radius
        if self.kind == "box":
            return inside.astype(float)
        if self.kind == "sqrt-omega-box":
            if dispersion is None:
                raise ValidationError("sqrt-omega-box coupling needs the model dispersion")
            return np.where(inside, np.sqrt(np.maximum(dispersion.dispersion(r), 0.0)), 0.0)
        if self.kind == "tabulated":
            v = np.interp(r, self.table_r, self.table_v)
            return np.where(inside, v, 0.0)
        raise ValidationError(f"{self.kind!r} is not a coupling kind")

    def breakpoints(self, radius) -> tuple:
        """Interior radii in (0, radius) where the profile has a kink."""
        pts = []
        if self.kind == "flat-bottom":
            knee = float(self.params["knee"])
            if 0.0 < knee < radius:
                pts.append(knee)
        elif self.kind == "tabulated":
            pts.extend(x for x in self.table_r if 0.0 < x < radius)
        return tuple(sorted(set(pts)))


def dispersion_profile(kind, **params) -> RadialProfile:
    if kind not in DISPERSION_KINDS:
        raise ValidationError(f"unknown dispersion kind {kind!r}; expected one of {DISPERSION_KINDS}")
    if kind == "tabulated":
        return RadialProfile("tabulated", {}, tuple(params["r"]), tuple(params["v"]))
    return RadialProfile(kind, params)


def coupling_profile(kind, **params) -> RadialProfile:
    if kind not in COUPLING_KINDS:
        raise ValidationError(f"unknown coupling kind {kind!r}; expected one of {COUPLING_KINDS}")
    if kind == "tabulated":
        return RadialProfile("tabulated", {}, tuple(params["r"]), tuple(params["v"]))
    return RadialProfile(kind, params)
