"""Exact lower bound on the stress energy of plane porous composites of two materials."""
from .bound import BoundResult, HSBounds, alpha_star, bound, effective_moduli, effective_moduli_from_envelope, hs_bounds, phase_averages
from .laminate import Layer, Leaf, SGCell, build, build_sg, evaluate
from .oracle import phi_inner, translation_max
from .regions import BoundaryKind, Region, boundary_samples, classify, psi
from .tensor import DEFAULT_MATERIALS, CompositeSpec, Loading, Material, PhaseAverages, SymTensor2

__version__ = "0.1.0"
