"""Hierarchical laminates and the four-rectangle cell that attain the bound.

A structure is a binary tree. Leaves hold a phase (1, 2 or 3 = void) with a
constant stress; a ``Layer`` stacks two sub-structures with an axis-aligned
normal, ``fraction`` being the share of ``a``. Sub-structures are treated as
homogeneous at the next scale, so every check is made on their averages.

Structures for the primed regions are the reflections sigma22 -> -sigma22 of
the unprimed ones built for the reflected problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .bound import energy_formula, mirror_spec, phase_averages
from .errors import RegionNotAttainedError, WrongRegionError
from .regions import BoundaryKind, Region, classify, psi
from .tensor import (SQRT2, ZERO, CompositeSpec, Loading, Material, PhaseAverages, SymTensor2,
                     det, energy_density, to_cartesian)

NORMALS = ("e1", "e2")


def diag(s11: float, s22: float) -> SymTensor2:
    return SymTensor2.from_cartesian(s11, s22, 0.0)


@dataclass(frozen=True)
class Leaf:
    phase: int
    stress: SymTensor2

    def __post_init__(self):
        if self.phase not in (1, 2, 3):
            raise ValueError(f"phase must be 1, 2 or 3, got {self.phase}")
        if self.phase == 3 and self.stress != ZERO:
            raise ValueError("void must carry zero stress")


@dataclass(frozen=True)
class Layer:
    normal: str
    fraction: float
    a: Node
    b: Node

    def __post_init__(self):
        if self.normal not in NORMALS:
            raise ValueError(f"only axis-aligned normals are supported, got {self.normal!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"layer fraction {self.fraction} outside [0, 1]")


Node = Union[Leaf, Layer]


def average(node: Node) -> SymTensor2:
    if isinstance(node, Leaf):
        return node.stress
    return node.fraction * average(node.a) + (1.0 - node.fraction) * average(node.b)


def leaves(node: Node, weight: float = 1.0):
    """Yield ``(volume share, leaf)`` pairs."""
    if isinstance(node, Leaf):
        yield weight, node
    else:
        yield from leaves(node.a, weight * node.fraction)
        yield from leaves(node.b, weight * (1.0 - node.fraction))


def layers(node: Node):
    if isinstance(node, Layer):
        yield node
        yield from layers(node.a)
        yield from layers(node.b)


def scale_rank(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(scale_rank(node.a), scale_rank(node.b))


def _traction(t: SymTensor2, normal: str) -> tuple[float, float]:
    s11, s22, s12 = to_cartesian(t)
    return (s11, s12) if normal == "e1" else (s22, s12)


def check_compatibility(node: Node) -> list[tuple[float, float]]:
    """Per interface: |(ta - tb):(n n)| and |(ta - tb):sym(n t)| from the sub-structure averages."""
    out = []
    for lay in layers(node):
        na, ta = _traction(average(lay.a), lay.normal)
        nb, tb = _traction(average(lay.b), lay.normal)
        out.append((abs(na - nb), abs(ta - tb)))
    return out


def check_univalence(node: Node, rho: float) -> float:
    """Largest leaf violation of sign(det tau) = sign(rho); <= 0 when univalent."""
    sign = 1.0 if rho >= 0.0 else -1.0
    return max(-sign * det(leaf.stress) for _, leaf in leaves(node))


@dataclass(frozen=True)
class LaminateReport:
    avg_stress: SymTensor2
    fractions: tuple[float, float, float]
    energy: float
    det_avg: float
    jump_residuals: list[tuple[float, float]]

    @property
    def max_residual(self) -> float:
        return max((max(r) for r in self.jump_residuals), default=0.0)


# ---------------------------------------------------------------- four-rectangle cell

@dataclass(frozen=True)
class SGCell:
    """Phase-2 rectangle (beta1 wide, beta2 tall) fed by two phase-1/void strips.

    The strip beside it (area (1 - beta1) beta2, phase-1 share beta3) carries
    tau11 along e1; the strip above it (area beta1 (1 - beta2), share beta4)
    carries tau12 along e2; the remaining corner is void.
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float
    tau11: SymTensor2
    tau12: SymTensor2
    tau2: SymTensor2

    def parts(self) -> list[tuple[float, Node]]:
        b1, b2, b3, b4 = self.beta1, self.beta2, self.beta3, self.beta4
        return [
            (b1 * b2, Leaf(2, self.tau2)),
            ((1 - b1) * b2, Layer("e2", b3, Leaf(1, self.tau11), Leaf(3, ZERO))),
            (b1 * (1 - b2), Layer("e1", b4, Leaf(1, self.tau12), Leaf(3, ZERO))),
            ((1 - b1) * (1 - b2), Leaf(3, ZERO)),
        ]

    def interface_residuals(self) -> list[tuple[float, float]]:
        """Homogenized traction jumps across the internal interfaces, plus those inside the strips."""
        (_, p2), (_, hs), (_, vs), (_, void) = self.parts()
        pairs = [(p2, hs, "e1"), (p2, vs, "e2"), (hs, void, "e2"), (vs, void, "e1")]
        out = []
        for x, y, n in pairs:
            nx, tx = _traction(average(x), n)
            ny, ty = _traction(average(y), n)
            out.append((abs(nx - ny), abs(tx - ty)))
        return out + check_compatibility(hs) + check_compatibility(vs)

    def flux_residuals(self) -> tuple[float, float]:
        b1, b2, b3, b4 = self.beta1, self.beta2, self.beta3, self.beta4
        rho = b1 * to_cartesian(self.tau2)[1]
        return (abs(1.0 / (b2 * b3) - to_cartesian(self.tau11)[0]),
                abs(rho / (b1 * b4) - to_cartesian(self.tau12)[1]))


Structure = Union[Leaf, Layer, SGCell]


def _flat(structure: Structure) -> list[tuple[float, Leaf]]:
    if isinstance(structure, SGCell):
        return [(w * v, leaf) for w, part in structure.parts() for v, leaf in leaves(part)]
    return list(leaves(structure))


def per_phase(structure: Structure) -> tuple[tuple[float, float, float], dict[int, SymTensor2]]:
    frac = {1: 0.0, 2: 0.0, 3: 0.0}
    acc = {1: ZERO, 2: ZERO, 3: ZERO}
    for w, leaf in _flat(structure):
        frac[leaf.phase] += w
        acc[leaf.phase] = acc[leaf.phase] + w * leaf.stress
    avg = {p: (acc[p] * (1.0 / frac[p]) if frac[p] > 0 else ZERO) for p in (1, 2, 3)}
    return (frac[1], frac[2], frac[3]), avg


def evaluate(structure: Structure, mat1: Material, mat2: Material) -> LaminateReport:
    mats = {1: mat1, 2: mat2}
    flat = _flat(structure)
    fr = {1: 0.0, 2: 0.0, 3: 0.0}
    avg = ZERO
    energy = det_avg = 0.0
    for w, leaf in flat:
        fr[leaf.phase] += w
        avg = avg + w * leaf.stress
        det_avg += w * det(leaf.stress)
        if leaf.phase != 3:
            energy += w * energy_density(mats[leaf.phase], leaf.stress)
    if isinstance(structure, SGCell):
        residuals = structure.interface_residuals()
    else:
        residuals = check_compatibility(structure)
    return LaminateReport(avg, (fr[1], fr[2], fr[3]), energy, det_avg, residuals)


# ---------------------------------------------------------------- optimal structures

@dataclass(frozen=True)
class Built:
    region: Region
    tree: Node
    betas: dict[str, float]


@dataclass(frozen=True)
class A2Parameters:
    S1: float
    S2: float
    betas: tuple[float, float, float, float, float]


def _a_S(spec: CompositeSpec) -> tuple[float, float, float]:
    K1, L1, K2, L2 = spec.mat1.K, spec.mat1.L, spec.mat2.K, spec.mat2.L
    m1, m2, rho = spec.m1, spec.m2, spec.rho
    den = m1 * (K2 + L2) + m2 * (K1 + L1)
    gamma = (K1 + L1) / (K2 + L2)
    return (1 + rho) / SQRT2 * (K2 + L2) / den, (1 + rho) / SQRT2 * (K1 + L1) / den, gamma


def a2_parameters(spec: CompositeSpec) -> A2Parameters:
    """Layering parameters of the coated B-type core used for rho >= 0 in A2."""
    S1, S2, gamma = _a_S(spec)
    m1, m2, rho = spec.m1, spec.m2, spec.rho
    x = gamma * (1 + rho)
    y = 2 * (m1 + m2 * gamma)
    b5 = (m2 * x * x - rho * y * y) / (x - y) ** 2
    b3 = x * ((m2 + rho) * y - 2 * m2 * x) / ((x - y) ** 2 * (1 - b5))
    b1 = S2 / (2 * S1)
    b2 = b3 * S2 / (2 * S1)
    b4 = 1 - SQRT2 / S2
    return A2Parameters(S1, S2, (b1, b2, b3, b4, b5))


def _void() -> Leaf:
    return Leaf(3, ZERO)


def _build_c(spec: CompositeSpec) -> Built:
    m1, m2, rho = spec.m1, spec.m2, spec.rho
    b1, b2 = m1 / (1 - m2), m2
    l13 = Layer("e2", b1, Leaf(1, diag((1 - m2) / m1, 0.0)), _void())
    tree = Layer("e1", b2, Leaf(2, diag(1.0, rho / m2)), l13)
    return Built(Region.C, tree, {"beta1": b1, "beta2": b2})


def _b_parts(m1: float, m2: float, rho: float):
    q = math.sqrt(rho * m2)
    w = 1 + rho - 2 * q
    betas = {"beta1": m1 * q / (m2 * w), "beta2": m1 * rho / w, "beta3": q,
             "beta4": 1 - math.sqrt(m2 / rho)}
    return w / m1, q / m2, betas


def _b_core(c1: float, c2: float, betas: dict[str, float]) -> Node:
    """L(13_1, 2, 13_2): phase 1 along e1 and e2, phase 2 spherical with s = sqrt2 c2."""
    l13_1 = Layer("e2", betas["beta1"], Leaf(1, diag(c1, 0.0)), _void())
    l13_2 = Layer("e1", betas["beta2"], Leaf(1, diag(0.0, c1)), _void())
    l13_1_2 = Layer("e1", betas["beta3"], Leaf(2, diag(c2, c2)), l13_1)
    return Layer("e2", betas["beta4"], l13_2, l13_1_2)


def _build_b(spec: CompositeSpec) -> Built:
    c1, c2, betas = _b_parts(spec.m1, spec.m2, spec.rho)
    return Built(Region.B, _b_core(c1, c2, betas), betas)


def _a1_betas(spec: CompositeSpec) -> dict[str, float]:
    _, _, gamma = _a_S(spec)
    m1, m2, rho = spec.m1, spec.m2, spec.rho
    return {"beta1": m1 / (1 - m2),
            "beta2": (m2 * (1 - m2) * gamma - m1 * (m2 + rho)) / ((1 + rho) * ((1 - m2) * gamma - m1)),
            "beta3": rho * (m1 + m2 * gamma) / ((1 + rho - m2) * gamma - m1)}


def _build_a1(spec: CompositeSpec) -> Built:
    S1, S2, _ = _a_S(spec)
    betas = _a1_betas(spec)
    l13 = Layer("e2", betas["beta1"], Leaf(1, diag(SQRT2 * S1, 0.0)), _void())
    l123 = Layer("e2", betas["beta2"], Leaf(2, diag(SQRT2 * S2, 0.0)), l13)
    tree = Layer("e1", betas["beta3"], Leaf(2, diag(1.0, SQRT2 * S2 - 1.0)), l123)
    return Built(Region.A1, tree, betas)


def _build_a2(spec: CompositeSpec) -> Built:
    p = a2_parameters(spec)
    b1, b2, b3, b4, b5 = p.betas
    betas = {"beta1": b1, "beta2": b2, "beta3": b3, "beta4": b4, "beta5": b5}
    core = _b_core(SQRT2 * p.S1, p.S2 / SQRT2, betas)
    tree = Layer("e1", b5, Leaf(2, diag(1.0, SQRT2 * p.S2 - 1.0)), core)
    return Built(Region.A2, tree, betas)


_BUILDERS = {Region.A1: _build_a1, Region.A2: _build_a2, Region.B: _build_b, Region.C: _build_c}


def reflect(node: Node) -> Node:
    """sigma22 -> -sigma22 on every leaf; geometry is unchanged."""
    if isinstance(node, Leaf):
        s11, s22, s12 = to_cartesian(node.stress)
        return Leaf(node.phase, SymTensor2.from_cartesian(s11, -s22, s12) if node.phase != 3 else ZERO)
    return Layer(node.normal, node.fraction, reflect(node.a), reflect(node.b))


def _params(spec: CompositeSpec, region: Region) -> dict[str, float]:
    if region is Region.A1:
        return _a1_betas(spec)
    if region is Region.A2:
        return dict(zip(("beta1", "beta2", "beta3", "beta4", "beta5"), a2_parameters(spec).betas))
    if region is Region.B:
        return _b_parts(spec.m1, spec.m2, spec.rho)[2]
    return {"beta1": spec.m1 / (1 - spec.m2), "beta2": spec.m2}


def laminate_parameters(spec: CompositeSpec, region: Region | str | None = None) -> dict[str, float]:
    """Layering parameters of the optimal structure, without building it."""
    region = classify(spec).region if region is None else Region(region)
    if not region.attainable:
        raise RegionNotAttainedError(
            f"region {region}: no attaining structure is known, attaining structure conjectured only")
    if region.primed:
        return _params(mirror_spec(spec), region.unprimed)
    return _params(spec, region)


def build_with_parameters(spec: CompositeSpec, region: Region | str | None = None) -> Built:
    region = classify(spec).region if region is None else Region(region)
    if not region.attainable:
        raise RegionNotAttainedError(
            f"region {region}: no attaining structure is known, attaining structure conjectured only")
    if region.primed:
        inner = _BUILDERS[region.unprimed](mirror_spec(spec))
        return Built(region, reflect(inner.tree), inner.betas)
    return _BUILDERS[region](spec)


def build(spec: CompositeSpec, region: Region | str | None = None) -> Node:
    return build_with_parameters(spec, region).tree


def build_sg(spec: CompositeSpec) -> SGCell:
    """Four-rectangle cell for region B; at rho = m2 it collapses to the C laminate."""
    region = classify(spec).region
    if not (region is Region.B or (region is Region.C and spec.rho == spec.m2)):
        raise WrongRegionError(f"the four-rectangle cell is built for region B, got {region}")
    m1, m2, rho = spec.m1, spec.m2, spec.rho
    q = math.sqrt(rho * m2)
    b1 = q
    b2 = math.sqrt(m2 / rho)
    b3 = rho * m1 / ((1 + rho - 2 * q) * q)
    return SGCell(b1, b2, b3, b3, diag(1.0 / (b2 * b3), 0.0), diag(0.0, rho / (b1 * b3)),
                  diag(1.0 / b2, rho / b1))


# ---------------------------------------------------------------- boundary morphing

@dataclass(frozen=True)
class MorphReport:
    boundary: str
    max_beta_jump: float     # one-sided limits, extrapolated linearly from offsets eps and 2 eps
    max_energy_jump: float
    raw_beta_diff: float     # plain difference between the +-eps structures (includes the slope)
    raw_energy_diff: float
    degenerate: dict[str, float]  # parameter -> largest |value| at the boundary (should vanish)
    points: int


# (side below, side above, offset axis, [(param below, param above)], degenerate params of one side)
_MORPHS = {
    "B-C": (Region.C, Region.B, "rho",
            [("beta1", "beta1"), ("beta2", "beta3")], (Region.B, ("beta4",))),
    "A1-A2": (Region.A1, Region.A2, "m1",
              [("beta3", "beta5"), ("beta1", "core_beta1"), ("beta2", "beta3")], (Region.A2, ("beta3",))),
    "A2-B": (Region.A2, Region.B, "m1",
             [("beta1", "beta1"), ("beta2", "beta2"), ("beta3", "beta3"), ("beta4", "beta4")],
             (Region.A2, ("beta5",))),
    "A1-C": (Region.A1, Region.C, "m1",
             [("beta1", "beta1"), ("beta3", "beta2")], (Region.A1, ("beta2",))),
}
MORPH_BOUNDARIES = tuple(_MORPHS) + ("B'-C'", "A1'-A2'", "A2'-B'", "A1'-C'")


def _morph_points(mat1, mat2, m2, base, count):
    """Boundary points (m1, rho) of the unprimed boundary ``base``, strictly inside its span."""
    pts = []
    t = (np.arange(count) + 0.5) / count
    if base == "B-C":
        lo = psi(BoundaryKind.AC, mat1, mat2, m2, m2)
        hi = psi(BoundaryKind.CE, mat1, mat2, m2, m2)
        pts = [(lo + (hi - lo) * s, m2) for s in t]
    elif base in ("A1-A2", "A2-B"):
        kind = BoundaryKind.A1A2 if base == "A1-A2" else BoundaryKind.AB
        pts = [(psi(kind, mat1, mat2, m2, r), r) for r in m2 + (1 - m2) * t]
    else:
        pts = [(psi(BoundaryKind.AC, mat1, mat2, m2, r), r) for r in m2 * t]
    return pts


def _with_derived(b: Built) -> dict[str, float]:
    out = dict(b.betas)
    if b.region.unprimed is Region.A2:
        out["core_beta1"] = (1 - out["beta4"]) * out["beta1"]
    return out


def morph_check(mat1: Material, mat2: Material, m2: float, boundary: str, count: int = 20,
                eps: float = 1e-8) -> MorphReport:
    """Build the structures on both sides of a boundary at +-eps and compare them.

    Returns the largest jump of corresponding layering parameters and of the
    energy, and the size of the parameters that must vanish at the boundary
    (evaluated on the boundary itself).
    """
    if boundary not in MORPH_BOUNDARIES:
        raise ValueError(f"morphing is tracked across {MORPH_BOUNDARIES}, got {boundary!r}")
    primed = "'" in boundary
    base = boundary.replace("'", "")
    below, above, axis, pairs, (deg_region, deg_names) = _MORPHS[base]
    if primed:
        below, above, deg_region = below.mirror, above.mirror, deg_region.mirror
    sgn = -1.0 if primed else 1.0
    beta_jump = energy_jump = raw_beta = raw_energy = 0.0
    degenerate = {n: 0.0 for n in deg_names}
    # the primed boundaries are the unprimed ones of the reflected materials
    pm1, pm2 = (Material(mat1.L, mat1.K), Material(mat2.L, mat2.K)) if primed else (mat1, mat2)

    def side(m1, r, region, off):
        if axis == "m1":
            spec = CompositeSpec(mat1, mat2, m1 + off, m2, Loading(r))
        else:  # rho = +-m2, C lies at |rho| < m2
            spec = CompositeSpec(mat1, mat2, m1, m2, Loading(r + sgn * off))
        b = build_with_parameters(spec, region)
        return _with_derived(b), evaluate(b.tree, mat1, mat2).energy

    for m1, r in _morph_points(pm1, pm2, m2, base, count):
        r = sgn * r
        (pl, el), (pl2, el2) = side(m1, r, below, -eps), side(m1, r, below, -2 * eps)
        (ph, eh), (ph2, eh2) = side(m1, r, above, eps), side(m1, r, above, 2 * eps)
        for a, b in pairs:
            raw_beta = max(raw_beta, abs(pl[a] - ph[b]))
            beta_jump = max(beta_jump, abs((2 * pl[a] - pl2[a]) - (2 * ph[b] - ph2[b])))
        raw_energy = max(raw_energy, abs(el - eh))
        energy_jump = max(energy_jump, abs((2 * el - el2) - (2 * eh - eh2)))
        on = laminate_parameters(CompositeSpec(mat1, mat2, m1, m2, Loading(r)), deg_region)
        for n in deg_names:
            degenerate[n] = max(degenerate[n], abs(on[n]))
    return MorphReport(boundary, float(beta_jump), float(energy_jump), float(raw_beta), float(raw_energy),
                       degenerate, count)


# ---------------------------------------------------------------- consistency helpers

def phase_average_residual(structure: Structure, spec: CompositeSpec, region: Region | None = None) -> float:
    """Distance between the structure's per-phase averages and the closed-form ones."""
    _, avg = per_phase(structure)
    ref: PhaseAverages = phase_averages(spec, region)
    return max(abs(avg[1].s - ref.S1), abs(avg[1].d1 - ref.D11), abs(avg[1].d2 - ref.D12),
               abs(avg[2].s - ref.S2), abs(avg[2].d1 - ref.D21), abs(avg[2].d2 - ref.D22))


def attainment_gap(spec: CompositeSpec, region: Region | None = None) -> float:
    """Relative difference between the built structure's energy and U_tr."""
    region = classify(spec).region if region is None else region
    e = evaluate(build(spec, region), spec.mat1, spec.mat2).energy
    u = energy_formula(spec, region)
    return abs(e - u) / abs(u)


# ---------------------------------------------------------------- random admissible trees

def random_tree(rng: np.random.Generator, rho: float, depth: int = 4,
                p_leaf: float = 0.25) -> Node:
    """Random statically admissible laminate with average e1e1 + rho e2e2.

    Built top-down: a node with target average tau is split across a normal n
    into tau + (1 - beta) c tt and tau - beta c tt, which keeps the traction
    continuous for any c. Whenever the target is uniaxial along t one child
    may be void.
    """
    return _grow(rng, diag(1.0, rho), depth, p_leaf)


def _grow(rng, tau: SymTensor2, depth: int, p_leaf: float) -> Node:
    s11, s22, _ = to_cartesian(tau)
    if depth == 0 or rng.random() < p_leaf:
        return Leaf(int(rng.integers(1, 3)), tau)
    normal = NORMALS[int(rng.integers(0, 2))]
    beta = float(rng.uniform(0.05, 0.95))
    along = s11 if normal == "e2" else s22  # component along the tangent t
    across = s22 if normal == "e2" else s11
    tt = diag(1.0, 0.0) if normal == "e2" else diag(0.0, 1.0)
    if abs(across) < 1e-14 and rng.random() < 0.6:
        # uniaxial along t: put the load in a layer next to void
        return Layer(normal, beta, _grow(rng, tau * (1.0 / beta), depth - 1, p_leaf), _void())
    r = rng.random()
    if r < 0.4:
        # make child b uniaxial across the interface so it can be voided deeper down
        c = along / beta
    else:
        c = float(rng.normal(0.0, 1.0 + abs(along)))
    ta = tau + ((1.0 - beta) * c) * tt
    tb = tau - (beta * c) * tt
    return Layer(normal, beta, _grow(rng, ta, depth - 1, p_leaf), _grow(rng, tb, depth - 1, p_leaf))


# ---------------------------------------------------------------- JSON

def to_json(structure: Structure) -> dict:
    if isinstance(structure, SGCell):
        return {"kind": "sg-cell",
                "beta1": structure.beta1, "beta2": structure.beta2,
                "beta3": structure.beta3, "beta4": structure.beta4,
                "tau11": list(to_cartesian(structure.tau11)),
                "tau12": list(to_cartesian(structure.tau12)),
                "tau2": list(to_cartesian(structure.tau2))}
    if isinstance(structure, Leaf):
        return {"kind": "phase", "id": structure.phase, "stress": list(to_cartesian(structure.stress))}
    return {"kind": "layer", "normal": structure.normal, "fraction": structure.fraction,
            "a": to_json(structure.a), "b": to_json(structure.b)}


def from_json(obj: dict) -> Structure:
    kind = obj.get("kind")
    if kind == "phase":
        pid = int(obj["id"])
        stress = SymTensor2.from_cartesian(*map(float, obj["stress"]))
        return Leaf(pid, ZERO if pid == 3 and stress == SymTensor2(0.0, 0.0, 0.0) else stress)
    if kind == "layer":
        return Layer(obj["normal"], float(obj["fraction"]), from_json(obj["a"]), from_json(obj["b"]))
    if kind == "sg-cell":
        return SGCell(float(obj["beta1"]), float(obj["beta2"]), float(obj["beta3"]), float(obj["beta4"]),
                      SymTensor2.from_cartesian(*obj["tau11"]), SymTensor2.from_cartesian(*obj["tau12"]),
                      SymTensor2.from_cartesian(*obj["tau2"]))
    raise ValueError(f"unknown structure kind {kind!r}")
