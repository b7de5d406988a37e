"""Region atlas: boundary functions in the (rho, m1) plane and point classification.

For rho >= 0 the high-porosity regions are A (split into A1/A2), C for rho <= m2
and B for rho > m2; beyond them lie D (translation clamped at L1) and E. The
rho < 0 half uses the primed analogues. On any boundary the label is chosen by
the priority A > C > B > D > E, and rho == 0 is treated as rho >= 0.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidRangeError, RootNotFoundError
from .tensor import CompositeSpec, Material


class Region(str, enum.Enum):
    A1 = "A1"
    A2 = "A2"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    A1p = "A1'"
    A2p = "A2'"
    Bp = "B'"
    Cp = "C'"
    Dp = "D'"

    def __str__(self) -> str:
        return self.value

    @property
    def primed(self) -> bool:
        return self.value.endswith("'")

    @property
    def family(self) -> str:
        """Closed-form family: A1/A2 share the A formulas, primes keep their prime."""
        base = self.value.rstrip("'")[0]
        return base + ("'" if self.primed else "")

    @property
    def unprimed(self) -> Region:
        return Region(self.value.rstrip("'"))

    @property
    def mirror(self) -> Region:
        if self is Region.E:
            return self
        return self.unprimed if self.primed else Region(self.value + "'")

    @property
    def attainable(self) -> bool:
        """Regions where a laminate reaching the bound is constructed."""
        return self.unprimed in (Region.A1, Region.A2, Region.B, Region.C)


ALL_REGIONS = tuple(Region)


class BoundaryKind(str, enum.Enum):
    AB = "A-B"
    BD = "B-D"
    AC = "A-C"
    CE = "C-E"
    ApBp = "A'-B'"
    BpDp = "B'-D'"
    ApCp = "A'-C'"
    CpE = "C'-E"
    DE = "D-E"
    DpE = "D'-E"
    A1A2 = "A1-A2"
    A1pA2p = "A1'-A2'"

    def __str__(self) -> str:
        return self.value

    @property
    def implicit(self) -> bool:
        return self in (BoundaryKind.DE, BoundaryKind.DpE)

    @property
    def sides(self) -> tuple[Region, Region]:
        """(label below, label above) the curve in the m1 direction."""
        return _SIDES[self]


_SIDES = {
    BoundaryKind.AB: (Region.A2, Region.B),
    BoundaryKind.BD: (Region.B, Region.D),
    BoundaryKind.AC: (Region.A1, Region.C),
    BoundaryKind.CE: (Region.C, Region.E),
    BoundaryKind.ApBp: (Region.A2p, Region.Bp),
    BoundaryKind.BpDp: (Region.Bp, Region.Dp),
    BoundaryKind.ApCp: (Region.A1p, Region.Cp),
    BoundaryKind.CpE: (Region.Cp, Region.E),
    BoundaryKind.DE: (Region.E, Region.D),
    BoundaryKind.DpE: (Region.E, Region.Dp),
    BoundaryKind.A1A2: (Region.A1, Region.A2),
    BoundaryKind.A1pA2p: (Region.A1p, Region.A2p),
}


def _sqrt_term(m2: float, r: float) -> float:
    # sqrt(r m2)(1 + r - 2 sqrt(r m2)) / (2 r), r = |rho| > 0
    q = math.sqrt(r * m2)
    return q * (1.0 + r - 2.0 * q) / (2.0 * r)


def _need(cond: bool, kind: BoundaryKind, rho: float, domain: str) -> None:
    if not cond:
        raise InvalidRangeError(f"boundary {kind} is defined for rho in {domain}, got rho={rho}")


def psi(kind: BoundaryKind | str, mat1: Material, mat2: Material, m2: float, rho: float,
        m1: float | None = None) -> float:
    """Boundary function of the given kind.

    Explicit kinds return the m1-value of the curve at ``(m2, rho)``; the
    implicit kinds D-E and D'-E return the signed residual at ``(m1, m2, rho)``
    whose zero set is the curve (it is the derivative of the translated
    objective with respect to alpha at alpha = L1, resp. alpha = -K1).
    """
    kind = BoundaryKind(kind)
    if not 0.0 < m2 < 1.0:
        raise InvalidRangeError(f"m2 must lie in (0, 1), got {m2}")
    K1, L1, K2, L2 = mat1.K, mat1.L, mat2.K, mat2.L
    k1, ka = K1 + L1, K2 + L2

    if kind in (BoundaryKind.AB, BoundaryKind.BD):
        _need(0.0 < rho <= 1.0, kind, rho, "(0, 1]")
        den = ka if kind is BoundaryKind.AB else K2 + L1
        return _sqrt_term(m2, rho) * k1 / den
    if kind in (BoundaryKind.ApBp, BoundaryKind.BpDp):
        _need(-1.0 <= rho < 0.0, kind, rho, "[-1, 0)")
        den = ka if kind is BoundaryKind.ApBp else K1 + L2
        return _sqrt_term(m2, -rho) * k1 / den
    if kind in (BoundaryKind.AC, BoundaryKind.A1A2):
        lo = 0.0 if kind is BoundaryKind.AC else m2
        _need(lo <= rho <= 1.0, kind, rho, f"[{lo}, 1]")
        return m2 * (1.0 - m2) * k1 / ((m2 + rho) * ka)
    if kind in (BoundaryKind.ApCp, BoundaryKind.A1pA2p):
        hi = 0.0 if kind is BoundaryKind.ApCp else -m2
        _need(-1.0 <= rho <= hi, kind, rho, f"[-1, {hi}]")
        return m2 * (1.0 - m2) * k1 / ((m2 - rho) * ka)
    if kind is BoundaryKind.CE:
        _need(0.0 <= rho <= 1.0, kind, rho, "[0, 1]")
        return m2 * (1.0 - m2) * k1 / ((m2 + rho) * ka - 2.0 * (L2 - L1) * rho)
    if kind is BoundaryKind.CpE:
        _need(-1.0 <= rho <= 0.0, kind, rho, "[-1, 0]")
        return m2 * (1.0 - m2) * k1 / ((m2 + rho) * ka - 2.0 * (L2 + K1) * rho)

    if m1 is None or not 0.0 < m1 < 1.0:
        raise InvalidRangeError(f"implicit boundary {kind} needs m1 in (0, 1), got {m1}")
    if kind is BoundaryKind.DE:
        _need(0.0 <= rho <= 1.0, kind, rho, "[0, 1]")
        hat = -(m2 * k1 * ((m1 + m2) * k1 + 2.0 * m1 * (K2 - K1))
                / (2.0 * m1 * (m1 * (K2 + L1) + m2 * k1) ** 2))
        return hat * (1.0 + rho) ** 2 + 2.0 * rho * (1.0 - m1) / m1
    _need(-1.0 <= rho <= 0.0, kind, rho, "[-1, 0]")
    hat = (m2 * k1 * ((m1 + m2) * k1 + 2.0 * m1 * (L2 - L1))
           / (2.0 * m1 * (m1 * (K1 + L2) + m2 * k1) ** 2))
    return hat * (1.0 - rho) ** 2 + 2.0 * rho * (1.0 - m1) / m1


@dataclass(frozen=True)
class Classification:
    region: Region
    margin: float  # smallest |m1 - curve| over the boundary curves present at this rho

    def __str__(self) -> str:
        return str(self.region)


def _low_porosity(mat1, mat2, m1, m2, rho) -> Region:
    if rho >= 0.0:
        return Region.D if psi(BoundaryKind.DE, mat1, mat2, m2, rho, m1) >= 0.0 else Region.E
    return Region.Dp if psi(BoundaryKind.DpE, mat1, mat2, m2, rho, m1) <= 0.0 else Region.E


def _explicit_curves(m2: float, rho: float) -> list[BoundaryKind]:
    if rho >= 0.0:
        if rho <= m2:
            return [BoundaryKind.AC, BoundaryKind.CE]
        return [BoundaryKind.AB, BoundaryKind.BD, BoundaryKind.A1A2]
    if rho >= -m2:
        return [BoundaryKind.ApCp, BoundaryKind.CpE]
    return [BoundaryKind.ApBp, BoundaryKind.BpDp, BoundaryKind.A1pA2p]


def classify_point(mat1: Material, mat2: Material, m1: float, m2: float, rho: float) -> Region:
    if rho >= 0.0:
        if rho <= m2:
            if m1 <= psi(BoundaryKind.AC, mat1, mat2, m2, rho):
                return Region.A1
            if m1 <= psi(BoundaryKind.CE, mat1, mat2, m2, rho):
                return Region.C
        else:
            if m1 <= psi(BoundaryKind.AB, mat1, mat2, m2, rho):
                a1 = m1 <= psi(BoundaryKind.A1A2, mat1, mat2, m2, rho)
                return Region.A1 if a1 else Region.A2
            if m1 <= psi(BoundaryKind.BD, mat1, mat2, m2, rho):
                return Region.B
    else:
        if rho >= -m2:
            if m1 <= psi(BoundaryKind.ApCp, mat1, mat2, m2, rho):
                return Region.A1p
            if m1 <= psi(BoundaryKind.CpE, mat1, mat2, m2, rho):
                return Region.Cp
        else:
            if m1 <= psi(BoundaryKind.ApBp, mat1, mat2, m2, rho):
                a1 = m1 <= psi(BoundaryKind.A1pA2p, mat1, mat2, m2, rho)
                return Region.A1p if a1 else Region.A2p
            if m1 <= psi(BoundaryKind.BpDp, mat1, mat2, m2, rho):
                return Region.Bp
    return _low_porosity(mat1, mat2, m1, m2, rho)


def implicit_roots(kind: BoundaryKind | str, mat1: Material, mat2: Material, m2: float,
                   rho: float, scan: int = 400) -> list[float]:
    """All m1 on the D-E (or D'-E) curve at fixed rho, in increasing order.

    The search runs over m1 above the high-porosity regions up to 1 - m2. The
    curve bends back below rho = m2 (resp. above -m2), so a rho can carry two
    roots; sign changes are bracketed on a uniform scan and polished by brentq.
    """
    kind = BoundaryKind(kind)
    if not kind.implicit:
        raise ValueError(f"{kind} is an explicit boundary")
    if kind is BoundaryKind.DE:
        _need(0.0 <= rho <= 1.0, kind, rho, "[0, 1]")
    else:
        _need(-1.0 <= rho <= 0.0, kind, rho, "[-1, 0]")
    top = 1.0 - m2
    lo = max(psi(c, mat1, mat2, m2, rho) for c in _explicit_curves(m2, rho))
    lo = min(max(lo, 1e-12), top)
    if lo >= top:
        return []
    f = lambda x: psi(kind, mat1, mat2, m2, rho, x)  # noqa: E731
    xs = np.linspace(lo, top, scan + 1)[1:-1]
    fs = np.array([f(float(x)) for x in xs])
    roots = []
    for i in range(xs.size - 1):
        if fs[i] == 0.0:
            roots.append(float(xs[i]))
        elif fs[i] * fs[i + 1] < 0.0:
            roots.append(float(brentq(f, xs[i], xs[i + 1], xtol=1e-15,
                                      rtol=4 * np.finfo(float).eps, maxiter=500)))
    return roots


def implicit_root(kind: BoundaryKind | str, mat1: Material, mat2: Material, m2: float,
                  rho: float) -> float:
    """Largest m1 on the implicit curve at rho (the D-E interface proper)."""
    roots = implicit_roots(kind, mat1, mat2, m2, rho)
    if not roots:
        raise RootNotFoundError(f"{BoundaryKind(kind)} does not cross the admissible m1 range at rho={rho}")
    return roots[-1]


def classify(spec: CompositeSpec) -> Classification:
    mat1, mat2, m1, m2, rho = spec.mat1, spec.mat2, spec.m1, spec.m2, spec.rho
    region = classify_point(mat1, mat2, m1, m2, rho)
    dists = [abs(m1 - psi(c, mat1, mat2, m2, rho)) for c in _explicit_curves(m2, rho)]
    kind = BoundaryKind.DE if rho >= 0.0 else BoundaryKind.DpE
    dists.extend(abs(m1 - r) for r in implicit_roots(kind, mat1, mat2, m2, rho))
    return Classification(region, min(dists))


def default_rho_range(kind: BoundaryKind, m2: float) -> tuple[float, float]:
    if kind in (BoundaryKind.AB, BoundaryKind.BD, BoundaryKind.A1A2):
        return (m2, 1.0)
    if kind in (BoundaryKind.AC, BoundaryKind.CE):
        return (0.0, m2)
    if kind in (BoundaryKind.ApBp, BoundaryKind.BpDp, BoundaryKind.A1pA2p):
        return (-1.0, -m2)
    if kind in (BoundaryKind.ApCp, BoundaryKind.CpE):
        return (-m2, 0.0)
    if kind is BoundaryKind.DE:
        return (0.0, 1.0)
    return (-1.0, 0.0)


def _rho_roots(kind: BoundaryKind, mat1: Material, mat2: Material, m2: float, m1: float,
               lo: float, hi: float, scan: int = 200) -> list[float]:
    """rho in [lo, hi] where the implicit curve passes through m1 above the explicit curves."""
    f = lambda r: psi(kind, mat1, mat2, m2, r, m1)  # noqa: E731
    rs = np.linspace(lo, hi, scan + 1)
    fs = np.array([f(float(r)) for r in rs])
    out = []
    for i in range(scan):
        if fs[i] * fs[i + 1] < 0.0:
            r = float(brentq(f, rs[i], rs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))
            if m1 > max(psi(c, mat1, mat2, m2, r) for c in _explicit_curves(m2, r)):
                out.append(r)
    return out


def boundary_samples(kind: BoundaryKind | str, mat1: Material, mat2: Material, m2: float,
                     count: int, rho_range: tuple[float, float] | None = None) -> list[tuple[float, float]]:
    """Points ``(rho, m1)`` on a boundary curve, equally spaced in rho.

    Explicit curves are clipped to ``m1 < 1 - m2``. For the implicit curves
    only the rho values where the curve crosses the admissible m1 interval are
    kept; if there are none :class:`RootNotFoundError` is raised.
    """
    kind = BoundaryKind(kind)
    if count < 2:
        raise ValueError("count must be at least 2")
    lo, hi = rho_range if rho_range is not None else default_rho_range(kind, m2)
    pts = []
    if kind.implicit:
        upper = []
        for rho in np.linspace(lo, hi, count):
            roots = implicit_roots(kind, mat1, mat2, m2, float(rho))
            if len(roots) > 1:
                pts.append((float(rho), roots[0]))
            if roots:
                upper.append((float(rho), roots[-1]))
        pts = pts + upper
        if pts:
            # the curve runs steeply in m1, so add points equally spaced in m1 as well;
            # it is a graph over m1, which also fixes the order of the polyline
            top = 1.0 - m2
            for m1 in np.linspace(0.0, top * (1.0 - 1e-9), count + 1)[1:]:
                pts.extend((r, float(m1)) for r in _rho_roots(kind, mat1, mat2, m2, float(m1), lo, hi))
            pts.sort(key=lambda p: p[1])
    else:
        for rho in np.linspace(lo, hi, count):
            m1 = psi(kind, mat1, mat2, m2, float(rho))
            if 0.0 < m1 < 1.0 - m2:
                pts.append((float(rho), m1))
    if not pts:
        raise RootNotFoundError(f"boundary {kind} has no points for m2={m2} in rho range [{lo}, {hi}]")
    return pts
