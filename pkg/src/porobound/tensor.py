"""Plane symmetric tensors in the spherical/deviatoric basis, materials and energy densities.

A stress is stored as ``(s, d1, d2)`` with respect to the orthonormal basis

    E1 = (e1e1 + e2e2)/sqrt2,  E2 = (e1e1 - e2e2)/sqrt2,  E3 = (e1e2 + e2e1)/sqrt2

so that ``s**2 - d1**2 - d2**2 == 2 det``. Cartesian components only appear at
I/O boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import SpecError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SymTensor2:
    s: float = 0.0
    d1: float = 0.0
    d2: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.s, self.d1, self.d2)):
            raise ValueError(f"non-finite tensor component in {self!r}")

    @classmethod
    def from_cartesian(cls, s11: float, s22: float, s12: float = 0.0) -> SymTensor2:
        return cls((s11 + s22) / SQRT2, (s11 - s22) / SQRT2, SQRT2 * s12)

    def __add__(self, other: SymTensor2) -> SymTensor2:
        return SymTensor2(self.s + other.s, self.d1 + other.d1, self.d2 + other.d2)

    def __sub__(self, other: SymTensor2) -> SymTensor2:
        return SymTensor2(self.s - other.s, self.d1 - other.d1, self.d2 - other.d2)

    def __mul__(self, k: float) -> SymTensor2:
        return SymTensor2(k * self.s, k * self.d1, k * self.d2)

    __rmul__ = __mul__

    def __neg__(self) -> SymTensor2:
        return SymTensor2(-self.s, -self.d1, -self.d2)

    @property
    def dev_norm2(self) -> float:
        return self.d1 * self.d1 + self.d2 * self.d2


ZERO = SymTensor2()


def to_cartesian(t: SymTensor2) -> tuple[float, float, float]:
    """Return ``(sigma11, sigma22, sigma12)``."""
    return ((t.s + t.d1) / SQRT2, (t.s - t.d1) / SQRT2, t.d2 / SQRT2)


def from_cartesian(s11: float, s22: float, s12: float = 0.0) -> SymTensor2:
    return SymTensor2.from_cartesian(s11, s22, s12)


def det(t: SymTensor2) -> float:
    return 0.5 * (t.s * t.s - t.d1 * t.d1 - t.d2 * t.d2)


def contract(t: SymTensor2, a: int, b: int) -> float:
    """Cartesian component ``t : (e_a (x) e_b)`` with axes numbered 1 and 2."""
    s11, s22, s12 = to_cartesian(t)
    if a == b:
        return s11 if a == 1 else s22
    return s12


@dataclass(frozen=True)
class Material:
    """Isotropic compliance pair: ``K = 1/bulk``, ``L = 1/shear``."""

    K: float
    L: float

    def __post_init__(self):
        for name, v in (("K", self.K), ("L", self.L)):
            if not (math.isfinite(v) and v > 0):
                raise SpecError(f"material compliance {name} must be positive and finite, got {v}")


def energy_density(mat: Material, t: SymTensor2) -> float:
    """Quadrupled stress energy ``4 tau:(A tau) = K s^2 + L |d|^2``."""
    return mat.K * t.s * t.s + mat.L * t.dev_norm2


def translated_density(mat: Material, t: SymTensor2, alpha: float) -> float:
    """Energy density with ``2 alpha det`` added back; differs from the energy by a null Lagrangian."""
    return (mat.K + alpha) * t.s * t.s + (mat.L - alpha) * t.dev_norm2


@dataclass(frozen=True)
class Loading:
    """Normalized average stress ``e1e1 + rho e2e2``."""

    rho: float
    tau0: SymTensor2 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.rho) and -1.0 <= self.rho <= 1.0):
            raise SpecError(f"anisotropy rho must lie in [-1, 1], got {self.rho}")
        object.__setattr__(
            self, "tau0", SymTensor2((1.0 + self.rho) / SQRT2, (1.0 - self.rho) / SQRT2, 0.0)
        )

    @property
    def S0(self) -> float:
        return self.tau0.s

    @property
    def D0(self) -> float:
        return self.tau0.d1


@dataclass(frozen=True)
class CompositeSpec:
    """Two well-ordered materials, their volume fractions, and the loading; the rest is void."""

    mat1: Material
    mat2: Material
    m1: float
    m2: float
    loading: Loading

    def __post_init__(self):
        if not (self.mat1.K < self.mat2.K and self.mat1.L < self.mat2.L):
            raise SpecError("materials must be well-ordered: K1 < K2 and L1 < L2")
        for name, v in (("m1", self.m1), ("m2", self.m2)):
            if not (math.isfinite(v) and v > 0.0):
                raise SpecError(f"volume fraction {name} must be positive, got {v}")
        if self.m1 + self.m2 >= 1.0:
            raise SpecError(
                f"fractions exceed 1: m1 + m2 = {self.m1 + self.m2} leaves no void (need m1 + m2 < 1)"
            )

    @classmethod
    def make(cls, K1: float, L1: float, K2: float, L2: float, m1: float, m2: float, rho: float) -> CompositeSpec:
        return cls(Material(K1, L1), Material(K2, L2), m1, m2, Loading(rho))

    @property
    def rho(self) -> float:
        return self.loading.rho

    @property
    def m3(self) -> float:
        return 1.0 - self.m1 - self.m2

    @property
    def materials(self) -> tuple[Material, Material]:
        return (self.mat1, self.mat2)

    def with_point(self, m1: float | None = None, m2: float | None = None, rho: float | None = None) -> CompositeSpec:
        return CompositeSpec(
            self.mat1,
            self.mat2,
            self.m1 if m1 is None else m1,
            self.m2 if m2 is None else m2,
            self.loading if rho is None else Loading(rho),
        )


DEFAULT_MATERIALS = (Material(1.0, 2.0), Material(3.0, 4.0))


@dataclass(frozen=True)
class PhaseAverages:
    """Average spherical and deviatoric stress in phases 1 and 2.

    ``provenance`` says where the numbers came from and which sign branch was taken.
    """

    S1: float
    D11: float
    D12: float
    S2: float
    D21: float
    D22: float
    provenance: str = ""

    def phase(self, i: int) -> SymTensor2:
        if i == 1:
            return SymTensor2(self.S1, self.D11, self.D12)
        if i == 2:
            return SymTensor2(self.S2, self.D21, self.D22)
        raise ValueError(f"phase must be 1 or 2, got {i}")

    def average_residual(self, spec: CompositeSpec) -> float:
        """Largest violation of m1 tau1 + m2 tau2 = tau0 (void carries no stress)."""
        t0 = spec.loading.tau0
        return max(
            abs(spec.m1 * self.S1 + spec.m2 * self.S2 - t0.s),
            abs(spec.m1 * self.D11 + spec.m2 * self.D21 - t0.d1),
            abs(spec.m1 * self.D12 + spec.m2 * self.D22 - t0.d2),
        )

    def cone_violation(self, rho: float) -> float:
        """Largest violation of S_i^2 >= |D_i|^2 (rho >= 0) or the reverse (rho < 0); <= 0 means none."""
        sign = 1.0 if rho >= 0.0 else -1.0
        return max(-sign * (self.S1**2 - self.D11**2 - self.D12**2),
                   -sign * (self.S2**2 - self.D21**2 - self.D22**2))

    def energy(self, spec: CompositeSpec) -> float:
        return (spec.m1 * energy_density(spec.mat1, self.phase(1))
                + spec.m2 * energy_density(spec.mat2, self.phase(2)))
