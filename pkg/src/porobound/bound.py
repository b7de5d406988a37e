"""Closed-form translation bound, optimal translation, phase averages and moduli.

Every formula here is evaluated for an explicitly requested region family so
that neighbouring formulas can be compared on shared boundaries; ``bound``
picks the family from the classifier. Region E has no closed form: its energy
and translation come from the numerical oracle and it carries no moduli.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BoundaryTooCloseError, RegionUndefinedError
from .oracle import translation_max
from .regions import Classification, Region, classify
from .tensor import SQRT2, CompositeSpec, Loading, Material, PhaseAverages


@dataclass(frozen=True)
class BoundResult:
    region: Region
    U_tr: float
    alpha_star: float
    K_star: float | None
    L_star: float | None
    averages: PhaseAverages
    margin: float
    conjectured: bool = False  # True in region E: bound is not known to be attained


@dataclass(frozen=True)
class HSBounds:
    K_HS: float
    L_HS: float
    alpha_K: float
    alpha_L: float


def _region(spec: CompositeSpec, region: Region | str | None) -> Region:
    return classify(spec).region if region is None else Region(region)


def mirror_spec(spec: CompositeSpec) -> CompositeSpec:
    """Reflection sigma22 -> -sigma22: swaps K with L in both phases and rho with -rho."""
    return CompositeSpec(Material(spec.mat1.L, spec.mat1.K), Material(spec.mat2.L, spec.mat2.K),
                         spec.m1, spec.m2, Loading(-spec.rho))


def _parts(spec: CompositeSpec):
    return spec.mat1.K, spec.mat1.L, spec.mat2.K, spec.mat2.L, spec.m1, spec.m2, spec.rho


def _harm(m1: float, m2: float, c1: float, c2: float) -> float:
    """(m1/c1 + m2/c2)^-1 written without the reciprocals."""
    return c1 * c2 / (m1 * c2 + m2 * c1)


def energy_formula(spec: CompositeSpec, region: Region | str) -> float:
    """Closed-form U_tr of a region family evaluated at ``spec`` (no membership check)."""
    K1, L1, K2, L2, m1, m2, rho = _parts(spec)
    k1, ka = K1 + L1, K2 + L2
    fam = Region(region).family
    if fam == "A":
        return 0.5 * (1 + rho) ** 2 * _harm(m1, m2, k1, ka) - 2 * rho * L2
    if fam == "A'":
        return 0.5 * (1 - rho) ** 2 * _harm(m1, m2, k1, ka) + 2 * rho * K2
    if fam == "B":
        q = math.sqrt(rho * m2)
        return (1 + rho - 2 * q) ** 2 / (2 * m1) * k1 + 2 * rho * K2
    if fam == "B'":
        q = math.sqrt(-rho * m2)
        return (1 - rho - 2 * q) ** 2 / (2 * m1) * k1 - 2 * rho * L2
    if fam in ("C", "C'"):
        return (ka * rho**2 / (2 * m2) + (K2 - L2) * rho
                + (k1 * (1 - m2) ** 2 + ka * m1 * m2) / (2 * m1))
    if fam == "D":
        return 0.5 * (1 + rho) ** 2 * _harm(m1, m2, k1, K2 + L1) - 2 * rho * L1
    if fam == "D'":
        return 0.5 * (1 - rho) ** 2 * _harm(m1, m2, k1, K1 + L2) + 2 * rho * K1
    raise RegionUndefinedError(f"region {region} has no closed-form energy")


def alpha_star(spec: CompositeSpec, region: Region | str | None = None) -> float:
    """Optimal translation; region E falls back to the oracle's argmax."""
    region = _region(spec, region)
    K1, L1, K2, L2, m1, m2, rho = _parts(spec)
    k1, ka = K1 + L1, K2 + L2
    fam = region.family
    if fam == "A":
        return L2
    if fam == "A'":
        return -K2
    if fam == "D":
        return L1
    if fam == "D'":
        return -K1
    if fam == "B":
        q = math.sqrt(rho * m2)
        return 0.5 * q * (1 + rho - 2 * q) * k1 / (rho * m1) - K2
    if fam == "B'":
        q = math.sqrt(-rho * m2)
        return 0.5 * q * (1 - rho - 2 * q) * k1 / (rho * m1) + L2
    if fam in ("C", "C'"):
        # one stationarity condition serves both signs of rho
        return 0.5 * ((L2 - K2) + m2 / (rho * m1) * ((1 - m2) * k1 - m1 * ka))
    return translation_max(spec).alpha_star


def _e_averages(spec: CompositeSpec, alpha: float) -> PhaseAverages:
    K1, L1, K2, L2, m1, m2, _ = _parts(spec)
    S0, D0 = spec.loading.S0, spec.loading.D0
    den_s = m1 * (K2 + alpha) + m2 * (K1 + alpha)
    den_d = m1 * (L2 - alpha) + m2 * (L1 - alpha)
    return PhaseAverages((K2 + alpha) * S0 / den_s, (L2 - alpha) * D0 / den_d, 0.0,
                         (K1 + alpha) * S0 / den_s, (L1 - alpha) * D0 / den_d, 0.0,
                         f"stationary point of the convex translated energy at alpha={alpha!r}")


def a_laminate_split(spec: CompositeSpec, region: Region | str) -> tuple[float, float]:
    """Fractions of the cell where phase 1 carries e1e1 and e2e2 in the A-type laminate.

    In A1 phase 1 is loaded along e1 only. In A2 it is split between the two
    directions of the inner B-type core; see ``laminate.a2_parameters``.
    """
    from .laminate import a2_parameters  # laminate depends on this module

    region = Region(region)
    if region.unprimed is Region.A1:
        return spec.m1, 0.0
    p = a2_parameters(spec if not region.primed else mirror_spec(spec))
    b1, b2, b3, b4, b5 = p.betas
    return (1 - b5) * (1 - b4) * (1 - b3) * b1, (1 - b5) * b4 * b2


def phase_averages(spec: CompositeSpec, region: Region | str | None = None) -> PhaseAverages:
    region = _region(spec, region)
    K1, L1, K2, L2, m1, m2, rho = _parts(spec)
    k1, ka = K1 + L1, K2 + L2
    S0, D0 = spec.loading.S0, spec.loading.D0
    fam = region.family
    if fam == "A":
        den = m1 * ka + m2 * k1
        S1, S2 = (1 + rho) / SQRT2 * ka / den, (1 + rho) / SQRT2 * k1 / den
        f11, f12 = a_laminate_split(spec, region)
        D11 = S1 * (f11 - f12) / m1
        return PhaseAverages(S1, D11, 0.0, S2, (D0 - m1 * D11) / m2, 0.0,
                             f"{region}: S from the clamped translation, D from the laminate split "
                             "(phase 1 uniaxial, s = +|d|)")
    if fam == "A'":
        den = m1 * ka + m2 * k1
        D11, D21 = (1 - rho) / SQRT2 * ka / den, (1 - rho) / SQRT2 * k1 / den
        f11, f12 = a_laminate_split(spec, region)
        S1 = D11 * (f11 - f12) / m1
        return PhaseAverages(S1, D11, 0.0, (S0 - m1 * S1) / m2, D21, 0.0,
                             f"{region}: D from the clamped translation, S from the mirrored laminate split "
                             "(phase 1 uniaxial, s = +d1 on e1 layers, s = -d1 on e2 layers)")
    if fam == "B":
        q = math.sqrt(rho * m2)
        S1 = (1 + rho - 2 * q) / (SQRT2 * m1)
        return PhaseAverages(S1, (1 - rho) / (SQRT2 * m1), 0.0, SQRT2 * q / m2, 0.0, 0.0,
                             "B: phase 1 uniaxial along both axes, phase 2 spherical")
    if fam == "B'":
        q = math.sqrt(-rho * m2)
        return PhaseAverages((1 + rho) / (SQRT2 * m1), (1 - rho - 2 * q) / (SQRT2 * m1), 0.0,
                             0.0, SQRT2 * q / m2, 0.0,
                             "B': phase 1 uniaxial along both axes, phase 2 pure shear")
    if fam in ("C", "C'"):
        S1 = (1 - m2) / (SQRT2 * m1)
        return PhaseAverages(S1, S1, 0.0, (m2 + rho) / (SQRT2 * m2), (m2 - rho) / (SQRT2 * m2), 0.0,
                             f"{fam}: phase 1 uniaxial along e1 (S1 = +D11)")
    if fam == "D":
        den = m1 * (K2 + L1) + m2 * k1
        return PhaseAverages((K2 + L1) * (1 + rho) / (SQRT2 * den), (1 - rho) / (SQRT2 * m1), 0.0,
                             k1 * (1 + rho) / (SQRT2 * den), 0.0, 0.0,
                             "D: translation clamped at L1, phase 2 spherical")
    if fam == "D'":
        den = m1 * (K1 + L2) + m2 * k1
        return PhaseAverages((1 + rho) / (SQRT2 * m1), (K1 + L2) * (1 - rho) / (SQRT2 * den), 0.0,
                             0.0, k1 * (1 - rho) / (SQRT2 * den), 0.0,
                             "D': translation clamped at -K1, phase 2 pure shear")
    return _e_phase_averages(spec, translation_max(spec))


def _e_phase_averages(spec: CompositeSpec, orc) -> PhaseAverages:
    # the stationary point is the minimiser only while it stays inside the cone;
    # otherwise a cone constraint is active and the oracle's own minimiser is used
    av = _e_averages(spec, orc.alpha_star)
    scale = spec.loading.S0 ** 2 + spec.loading.D0 ** 2
    if av.cone_violation(spec.rho) <= 1e-12 * scale or orc.averages is None:
        return av
    return orc.averages


def moduli_formula(spec: CompositeSpec, region: Region | str) -> tuple[float, float]:
    """Closed-form (K*, L*) of a region family evaluated at ``spec``."""
    K1, L1, K2, L2, m1, m2, rho = _parts(spec)
    k1, ka = K1 + L1, K2 + L2
    fam = Region(region).family
    if fam == "A":
        return _harm(m1, m2, k1, ka) - L2, L2
    if fam == "A'":
        return K2, _harm(m1, m2, k1, ka) - K2
    if fam == "B":
        q = math.sqrt(rho * m2)
        w = 1 + rho - 2 * q
        K = K2 - ((1 + rho) * q - 2 * rho) * w / (2 * m1 * rho * (1 + rho)) * k1
        L = q * w / (2 * m1 * rho) * k1 - K2
        return K, L
    if fam == "B'":
        q = math.sqrt(-rho * m2)
        w = 1 - rho - 2 * q
        K = -q * w / (2 * m1 * rho) * k1 - L2
        L = L2 + ((1 - rho) * q + 2 * rho) * w / (2 * m1 * rho * (1 - rho)) * k1
        return K, L
    if fam in ("C", "C'"):
        K = 0.5 * ((K2 - L2) + (1 - m2) ** 2 / (m1 * (1 + rho)) * k1
                   + (m2 * m2 + rho) / (m2 * (1 + rho)) * ka)
        L = 0.5 * ((1 - m2) ** 2 / (m1 * (1 - rho)) * k1
                   + (m2 * m2 - rho) / (m2 * (1 - rho)) * ka - (K2 - L2))
        return K, L
    if fam == "D":
        return _harm(m1, m2, k1, K2 + L1) - L1, L1
    if fam == "D'":
        return K1, _harm(m1, m2, k1, K1 + L2) - K1
    raise RegionUndefinedError("effective moduli are not available in region E")


def effective_moduli(spec: CompositeSpec, region: Region | str | None = None) -> tuple[float, float]:
    return moduli_formula(spec, _region(spec, region))


def effective_moduli_from_envelope(spec: CompositeSpec, region: Region | str | None = None,
                                   step: float = 1e-6, min_step: float = 1e-9) -> tuple[float, float]:
    """(K*, L*) recovered from U_tr and a central difference of dU/drho.

    The stencil must stay inside the region; otherwise the step is divided by
    10 until it does, down to ``min_step``.
    """
    region = _region(spec, region)
    if region is Region.E:
        raise RegionUndefinedError("effective moduli are not available in region E")
    rho = spec.rho
    if abs(rho) >= 1.0:
        raise BoundaryTooCloseError("the envelope formulas divide by 1 -+ rho; rho must lie in (-1, 1)")
    h = step
    while h >= min_step * (1 - 1e-12):
        if -1.0 <= rho - h and rho + h <= 1.0:
            lo, hi = spec.with_point(rho=rho - h), spec.with_point(rho=rho + h)
            if classify(lo).region.family == region.family == classify(hi).region.family:
                dU = (energy_formula(hi, region) - energy_formula(lo, region)) / (2 * h)
                U = energy_formula(spec, region)
                K = U / (1 + rho) + (1 - rho) / (2 * (1 + rho)) * dU
                L = U / (1 - rho) - (1 + rho) / (2 * (1 - rho)) * dU
                return K, L
        h /= 10.0
    raise BoundaryTooCloseError(
        f"no single-region stencil around rho={rho} in {region} down to step {min_step}")


def hs_bounds(mat1: Material, mat2: Material, m1: float, m2: float) -> HSBounds:
    K1, L1, K2, L2 = mat1.K, mat1.L, mat2.K, mat2.L
    aK, aL = L1, 2 * K1 + L1
    return HSBounds(_harm(m1, m2, K1 + aK, K2 + aK) - aK, _harm(m1, m2, L1 + aL, L2 + aL) - aL, aK, aL)


def bound(spec: CompositeSpec, classification: Classification | None = None) -> BoundResult:
    cls = classify(spec) if classification is None else classification
    region = cls.region
    if region is Region.E:
        orc = translation_max(spec)
        return BoundResult(region, orc.U, orc.alpha_star, None, None,
                           _e_phase_averages(spec, orc), cls.margin, conjectured=True)
    K, L = moduli_formula(spec, region)
    return BoundResult(region, energy_formula(spec, region), alpha_star(spec, region), K, L,
                       phase_averages(spec, region), cls.margin)
