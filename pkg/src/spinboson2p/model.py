"""Model data: parameter functions, physical constants, regime classification.

A model couples a two-level atom (levels +-epsilon) to a bosonic field
with radial dispersion omega (infimum m) and radial coupling lam with
compact support. Whether lam/sqrt(omega - m) is square integrable
splits the theory into a strongly infrared-singular class and an
integrable class with a critical coupling; that dichotomy is a property
of the true functions, so model files declare it and a dyadic
refinement probe only warns on contradiction.
"""
from __future__ import annotations

import dataclasses
import functools
import json
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quad
from .errors import (BoundedDispersion, DivergentIntegral,
                     IntegrabilityMismatchWarning, NegativeEpsilon,
                     NoConvergence, ValidationError, ZeroCoupling)
from .profiles import RadialProfile, coupling_profile, dispersion_profile

CASE1 = "case1-divergent"
CASE2 = "case2-integrable"

#: default relative tolerance for adaptive integrals
INTEGRAL_REL_TOL = 1e-10
#: default absolute tolerance for root finding
ROOT_ABS_TOL = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """Raw model data as it appears in a model file, before validation."""

    name: str
    dimension: int
    epsilon: float
    omega: RadialProfile
    lam: RadialProfile
    support_radius: float
    integrability: str


@dataclass(frozen=True)
class Model:
    """Validated model with the exact dispersion infimum attached."""

    name: str
    dimension: int
    epsilon: float
    omega: RadialProfile
    lam: RadialProfile
    support_radius: float
    integrability: str
    m: float
    coupling_norm_sq: float

    # -- evaluation helpers ----------------------------------------------

    def omega_values(self, r):
        return self.omega.dispersion(r)

    def omega_above_m(self, r):
        """omega(r) - m without cancellation."""
        return self.omega.dispersion_above_infimum(r)

    def lam_values(self, r):
        return self.lam.coupling(r, self.support_radius, dispersion=self.omega)

    def breakpoints(self) -> tuple:
        """Interior kink radii of either profile, for panel placement."""
        pts = set(self.omega.breakpoints(self.support_radius))
        pts.update(self.lam.breakpoints(self.support_radius))
        return tuple(sorted(pts))

    def sector_boundary(self, sigma: int) -> float:
        """m + sigma*epsilon, the right end of the scalar function's domain."""
        return self.m + sigma * self.epsilon

    def is_case1(self) -> bool:
        return self.integrability == CASE1


@dataclass(frozen=True)
class CouplingClass:
    """Regime tag for a (model, alpha) pair.

    tag is "Case1", "Case2a" or "Case2b"; alpha_cr is present exactly
    when the model is integrable with m < 2*epsilon.
    """

    tag: str
    alpha_cr: Optional[float] = None


def validate_model(spec: ModelSpec, *, check_integrability: bool = True,
                   rel_tol: float = INTEGRAL_REL_TOL) -> Model:
    """Check the standing hypotheses and attach derived constants.

    Raises NegativeEpsilon, ZeroCoupling or BoundedDispersion; other
    structural defects raise ValidationError. The integrability
    declaration is probed dyadically and contradictions produce an
    IntegrabilityMismatchWarning, never a silent override.
    """
    if spec.epsilon <= 0:
        raise NegativeEpsilon(f"epsilon must be > 0, got {spec.epsilon}")
    if int(spec.dimension) < 1:
        raise ValidationError(f"dimension must be >= 1, got {spec.dimension}")
    if spec.support_radius <= 0:
        raise ValidationError("coupling support radius must be positive")
    if spec.integrability not in (CASE1, CASE2):
        raise ValidationError(
            f"integrability must be {CASE1!r} or {CASE2!r}, got {spec.integrability!r}")

    m = spec.omega.dispersion_infimum()
    if m < 0:
        raise ValidationError(f"dispersion infimum must be >= 0, got {m}")

    _check_unbounded(spec, m)

    model = Model(spec.name, int(spec.dimension), float(spec.epsilon), spec.omega,
                  spec.lam, float(spec.support_radius), spec.integrability,
                  float(m), 0.0)
    norm_sq = weighted_l2_norm_sq(model, lambda r: np.ones_like(r), rel_tol=rel_tol)
    if norm_sq <= 0.0:
        raise ZeroCoupling("coupling profile integrates to zero")
    model = dataclasses.replace(model, coupling_norm_sq=float(norm_sq))

    if check_integrability:
        verify_integrability_declaration(model)
    return model


def _check_unbounded(spec: ModelSpec, m: float):
    """Sample test for unboundedness of the dispersion.

    Analytic kinds grow without bound by construction; tabulated data
    is constant beyond its last node, so it passes when the table top
    already clears the desk-scale threshold m + max(1, 2*epsilon) and
    is understood to keep growing past the tabulated range.
    """
    threshold = m + max(1.0, 2.0 * spec.epsilon)
    r_hi = max(10.0 * spec.support_radius, 1e3)
    samples = spec.omega.dispersion(np.geomspace(max(spec.support_radius, 1.0), r_hi, 12))
    if float(np.max(samples)) < threshold:
        raise BoundedDispersion(
            f"dispersion stays below {threshold} on the sampled range up to r={r_hi}")


def weighted_l2_norm_sq(model: Model, weight, *, rel_tol: float = INTEGRAL_REL_TOL) -> float:
    """S_{d-1} * int_0^R weight(r) |lam(r)|^2 r^{d-1} dr.

    The weight is an arbitrary radial function, finite at interior
    nodes; non-integrable singularities surface as DivergentIntegral.
    """
    def f(r):
        lam = model.lam_values(r)
        return weight(r) * lam * lam

    try:
        return quad.integrate_adaptive(model.support_radius, f, rel_tol,
                                       d=model.dimension,
                                       breakpoints=model.breakpoints())
    except NoConvergence as exc:
        raise DivergentIntegral(
            "weighted coupling norm did not converge; "
            "the weight appears non-integrable against |lam|^2") from exc


@functools.lru_cache(maxsize=256)
def _infrared_norm_sq(model: Model, rel_tol: float = INTEGRAL_REL_TOL) -> float:
    """||lam / sqrt(omega - m)||^2; DivergentIntegral when it diverges."""
    return weighted_l2_norm_sq(model, lambda r: 1.0 / model.omega_above_m(r),
                               rel_tol=rel_tol)


def alpha_critical(model: Model) -> Optional[float]:
    """sqrt(2*epsilon - m) / ||lam/sqrt(omega-m)||, when defined.

    Returns None for declared-divergent models and for m >= 2*epsilon.
    A declared-integrable model whose norm actually diverges propagates
    DivergentIntegral, signalling the contradiction to the caller.
    """
    if model.is_case1() or model.m >= 2.0 * model.epsilon:
        return None
    norm_sq = _infrared_norm_sq(model)
    return float(np.sqrt((2.0 * model.epsilon - model.m) / norm_sq))


def classify(model: Model, alpha: float) -> CouplingClass:
    """Regime of (model, alpha): Case1, Case2a or Case2b.

    Case2b is the closed set 0 < alpha <= alpha_cr (boundary included);
    it exists only when the model is integrable with m < 2*epsilon.
    """
    if alpha <= 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")
    if model.is_case1():
        return CouplingClass("Case1")
    a_cr = alpha_critical(model)
    if a_cr is None:
        return CouplingClass("Case2a")
    if alpha > a_cr:
        return CouplingClass("Case2a", a_cr)
    return CouplingClass("Case2b", a_cr)


def verify_integrability_declaration(model: Model) -> str:
    """Dyadic probe of the declared integrability class.

    Integrates |lam|^2 / max(omega - m, 2^-k) for k = 10..30; the
    sequence increases monotonically and converges exactly when
    lam/sqrt(omega-m) is square integrable. Returns the measured
    verdict and warns (never overrides) on contradiction.
    """
    rule = quad.composite_rule(
        _segments(model), quad.split_panels(_segments(model), 36), 12, model.dimension)
    lam2 = model.lam_values(rule.nodes) ** 2
    above = model.omega_above_m(rule.nodes)
    values = []
    for k in range(10, 31):
        g = float(rule.weights @ (lam2 / np.maximum(above, 2.0 ** -k)))
        values.append(g)
    late = values[-1] - values[-2]
    mid = values[10] - values[9]
    scale = max(abs(values[-1]), 1e-300)
    if late <= 1e-9 * scale:
        verdict = CASE2
    elif mid > 0 and late / mid > 0.25:
        verdict = CASE1
    else:
        verdict = CASE2
    if verdict != model.integrability:
        warnings.warn(
            f"model {model.name!r} declares {model.integrability} but the dyadic "
            f"probe suggests {verdict}; keeping the declaration",
            IntegrabilityMismatchWarning, stacklevel=2)
    return verdict


def _segments(model: Model):
    pts = list(model.breakpoints())
    return list(zip([0.0] + pts, pts + [model.support_radius]))


# -- scaling -----------------------------------------------------------------

def scaled_coupling(model: Model, c: float) -> Model:
    """Model with lam replaced by c*lam.

    Only the product alpha^2 |lam|^2 enters any computation, so this is
    the covariance partner of rescaling alpha. Box and tabulated
    couplings scale exactly (node for node); sqrt-omega-box couplings
    are resampled onto a dense table, exact only where the dispersion
    is piecewise linear.
    """
    if c <= 0:
        raise ValidationError("coupling scale must be positive")
    R = model.support_radius
    if model.lam.kind == "box":
        lam = coupling_profile("tabulated", r=(0.0, R), v=(c, c))
    elif model.lam.kind == "tabulated":
        lam = coupling_profile("tabulated", r=model.lam.table_r,
                               v=tuple(c * v for v in model.lam.table_v))
    else:
        r_grid = np.linspace(0.0, R, 513)
        vals = c * model.lam_values(r_grid)
        lam = coupling_profile("tabulated", r=tuple(r_grid), v=tuple(vals))
    spec = ModelSpec(f"{model.name}*{c:g}", model.dimension, model.epsilon,
                     model.omega, lam, R, model.integrability)
    return validate_model(spec, check_integrability=False)


# -- JSON model files ---------------------------------------------------------

_TOP_KEYS = {"name", "dimension", "epsilon", "omega", "lambda", "integrability"}
_OMEGA_KEYS = {
    "abs": set(),
    "relativistic": {"mass"},
    "flat-bottom": {"knee", "floor"},
    "tabulated": {"r", "v"},
}
_LAMBDA_KEYS = {
    "box": {"support_radius"},
    "sqrt-omega-box": {"support_radius"},
    "tabulated": {"r", "v", "support_radius"},
}


def _reject_unknown(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"unknown field(s) {sorted(unknown)} in {where}")


def model_from_dict(data: dict) -> ModelSpec:
    """Parse the strict model-file schema; unknown fields are rejected."""
    if not isinstance(data, dict):
        raise ValidationError("model file must contain a JSON object")
    _reject_unknown(data, _TOP_KEYS, "model")
    missing = _TOP_KEYS - set(data)
    if missing:
        raise ValidationError(f"missing field(s) {sorted(missing)} in model")

    om = dict(data["omega"])
    kind = om.pop("kind", None)
    if kind not in _OMEGA_KEYS:
        raise ValidationError(f"unknown omega kind {kind!r}")
    _reject_unknown(om, _OMEGA_KEYS[kind], "omega")
    omega = dispersion_profile(kind, **om)

    lm = dict(data["lambda"])
    kind = lm.pop("kind", None)
    if kind not in _LAMBDA_KEYS:
        raise ValidationError(f"unknown lambda kind {kind!r}")
    _reject_unknown(lm, _LAMBDA_KEYS[kind], "lambda")
    support = lm.pop("support_radius", None)
    if support is None:
        raise ValidationError("lambda requires a support_radius")
    lam = coupling_profile(kind, **lm) if kind == "tabulated" else coupling_profile(kind)

    return ModelSpec(str(data["name"]), int(data["dimension"]), float(data["epsilon"]),
                     omega, lam, float(support), str(data["integrability"]))


def model_to_dict(model: Model) -> dict:
    om: dict = {"kind": model.omega.kind}
    if model.omega.kind == "tabulated":
        om["r"] = list(model.omega.table_r)
        om["v"] = list(model.omega.table_v)
    else:
        om.update(model.omega.params)
    lm: dict = {"kind": model.lam.kind, "support_radius": model.support_radius}
    if model.lam.kind == "tabulated":
        lm["r"] = list(model.lam.table_r)
        lm["v"] = list(model.lam.table_v)
    return {"name": model.name, "dimension": model.dimension,
            "epsilon": model.epsilon, "omega": om, "lambda": lm,
            "integrability": model.integrability}


def load_model(path, **kwargs) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return validate_model(model_from_dict(data), **kwargs)


# -- bundled presets ----------------------------------------------------------

_PRESETS = {
    "box1d": {
        "name": "box1d", "dimension": 1, "epsilon": 1.0,
        "omega": {"kind": "abs"},
        "lambda": {"kind": "box", "support_radius": 1.0},
        "integrability": CASE1,
    },
    "box3d": {
        "name": "box3d", "dimension": 3, "epsilon": 1.0,
        "omega": {"kind": "abs"},
        "lambda": {"kind": "box", "support_radius": 1.0},
        "integrability": CASE2,
    },
    "flatbottom1d": {
        "name": "flatbottom1d", "dimension": 1, "epsilon": 1.0,
        "omega": {"kind": "flat-bottom", "knee": 1.0, "floor": 0.0},
        "lambda": {"kind": "box", "support_radius": 2.0},
        "integrability": CASE1,
    },
    "relmassive3d": {
        "name": "relmassive3d", "dimension": 3, "epsilon": 1.0,
        "omega": {"kind": "relativistic", "mass": 3.0},
        "lambda": {"kind": "box", "support_radius": 1.0},
        "integrability": CASE2,
    },
}

PRESET_NAMES = tuple(sorted(_PRESETS))


@functools.lru_cache(maxsize=None)
def preset(name: str) -> Model:
    """One of the bundled models, passed through the strict loader."""
    if name not in _PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    return validate_model(model_from_dict(_PRESETS[name]), check_integrability=False)
