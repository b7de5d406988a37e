"""Independent numerical evaluation of the translation bound.

For a fixed translation parameter alpha each phase's translated energy reduces
to ``m_i (a_i S_i^2 + b_i |D_i|^2)`` (or is unbounded below), and the inner
problem becomes a quadratic program over the phase averages. Only the norms
``r_i = |D_i|`` matter, so with ``S2`` eliminated through the average
constraint the unknowns are ``(S1, r1, r2)``; the vector constraint
``m1 D1 + m2 D2 = D0 e1`` is feasible iff ``m1 r1, m2 r2, D0`` satisfy the
triangle inequalities. The sign cones on the averages split into at most four
polyhedra. On each one the QP is solved exactly by enumerating active sets of
size <= 3 and keeping the best feasible stationary point.

The outer maximisation of ``Phi - 2 rho alpha`` (concave in alpha) uses a
coarse grid on ``[-K2, L2]`` that includes the breakpoints, followed by a
golden-section refinement of the best bracket.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .tensor import CompositeSpec, Material, PhaseAverages

GRID_POINTS = 401
ALPHA_TOL = 1e-8
_FEAS_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class RegimeTag(str, enum.Enum):
    CONVEX = "convex"                    # -K < alpha < L
    SPHERICAL_CLAMPED = "IIb"            # alpha = L
    SPHERICAL = "IIa"                    # alpha > L, rho >= 0
    DEVIATORIC_CLAMPED = "IIIb"          # alpha = -K
    DEVIATORIC = "IIIa"                  # alpha < -K, rho < 0
    UNBOUNDED = "unbounded"              # energy unbounded below

    def __str__(self) -> str:
        return self.value


def regime_of(mat: Material, alpha: float, rho_nonneg: bool) -> RegimeTag:
    if alpha == mat.L:
        return RegimeTag.SPHERICAL_CLAMPED
    if alpha == -mat.K:
        return RegimeTag.DEVIATORIC_CLAMPED
    if -mat.K < alpha < mat.L:
        return RegimeTag.CONVEX
    if alpha > mat.L:
        return RegimeTag.SPHERICAL if rho_nonneg else RegimeTag.UNBOUNDED
    return RegimeTag.DEVIATORIC if not rho_nonneg else RegimeTag.UNBOUNDED


def _coeffs(mat: Material, alpha: np.ndarray, rho_nonneg: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, finite) such that the relaxed phase energy is m (a S^2 + b |D|^2)."""
    K, L = mat.K, mat.L
    a = np.clip(K + alpha, 0.0, K + L)
    b = np.clip(L - alpha, 0.0, K + L)
    ok = alpha >= -K if rho_nonneg else alpha <= L
    return a, b, ok


def _constraint_sets(spec: CompositeSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    """Polyhedra ``G x <= h`` in x = (S1, r1, r2) whose union is the feasible set."""
    m1, m2 = spec.m1, spec.m2
    S0, D0 = spec.loading.S0, spec.loading.D0
    k = m1 / m2
    common_G = [[0, -1, 0], [0, 0, -1], [0, -m1, -m2], [0, m1, -m2], [0, -m1, m2]]
    common_h = [0.0, 0.0, -D0, D0, D0]
    sets = []
    if spec.rho >= 0.0:
        # r1 <= s1 S1, r2 <= s2 S2 with S2 = (S0 - m1 S1)/m2
        for s1, s2 in itertools.product((1.0, -1.0), repeat=2):
            G = common_G + [[-s1, 1, 0], [s2 * k, 0, 1]]
            h = common_h + [0.0, s2 * S0 / m2]
            sets.append((np.array(G, float), np.array(h, float)))
    else:
        G = common_G + [[1, -1, 0], [-1, -1, 0], [-k, 0, -1], [k, 0, -1]]
        h = common_h + [0.0, 0.0, -S0 / m2, S0 / m2]
        sets.append((np.array(G, float), np.array(h, float)))
    return sets


@dataclass
class _Candidates:
    """Active-set KKT systems for one constraint polyhedron, independent of alpha."""

    G: np.ndarray
    h: np.ndarray
    base: np.ndarray  # (n_sets, 6, 6) with the Hessian block left zero
    rhs: np.ndarray   # (n_sets, 6) with the gradient part left zero

    @classmethod
    def build(cls, G: np.ndarray, h: np.ndarray) -> _Candidates:
        subsets = [c for size in range(4) for c in itertools.combinations(range(len(h)), size)]
        base = np.zeros((len(subsets), 6, 6))
        rhs = np.zeros((len(subsets), 6))
        for j, act in enumerate(subsets):
            for p in range(3):
                if p < len(act):
                    row = G[act[p]]
                    base[j, 3 + p, :3] = row
                    base[j, :3, 3 + p] = row
                    rhs[j, 3 + p] = h[act[p]]
                else:
                    base[j, 3 + p, 3 + p] = 1.0
        return cls(G, h, base, rhs)


class _InnerQP:
    """Exact minimiser of the reduced inner problem, vectorised over alpha."""

    def __init__(self, spec: CompositeSpec):
        self.spec = spec
        self.cands = [_Candidates.build(G, h) for G, h in _constraint_sets(spec)]

    def quad(self, alpha: np.ndarray):
        spec = self.spec
        m1, m2, S0 = spec.m1, spec.m2, spec.loading.S0
        nonneg = spec.rho >= 0.0
        a1, b1, ok1 = _coeffs(spec.mat1, alpha, nonneg)
        a2, b2, ok2 = _coeffs(spec.mat2, alpha, nonneg)
        H = np.stack([2.0 * (m1 * a1 + m1 * m1 * a2 / m2), 2.0 * m1 * b1, 2.0 * m2 * b2], axis=-1)
        c = np.stack([-2.0 * a2 * S0 * m1 / m2, np.zeros_like(alpha), np.zeros_like(alpha)], axis=-1)
        const = a2 * S0 * S0 / m2
        return H, c, const, ok1 & ok2

    def solve(self, alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Minimum value and minimiser (S1, r1, r2) for every alpha; -inf where unbounded."""
        alpha = np.atleast_1d(np.asarray(alpha, float))
        n = alpha.size
        H, c, const, ok = self.quad(alpha)
        best = np.full(n, np.inf)
        best_x = np.full((n, 3), np.nan)
        for cand in self.cands:
            ns = cand.base.shape[0]
            M = np.broadcast_to(cand.base, (n, ns, 6, 6)).copy()
            idx = np.arange(3)
            M[:, :, idx, idx] = H[:, None, :]
            b = np.broadcast_to(cand.rhs, (n, ns, 6)).copy()
            b[:, :, :3] = -c[:, None, :]
            scale = np.prod(np.linalg.norm(M, axis=-1), axis=-1)
            det = np.linalg.det(M)
            good = np.abs(det) > 1e-11 * scale
            x = np.full((n, ns, 3), np.nan)
            if good.any():
                sol = np.linalg.solve(M[good], b[good][..., None])[..., 0]
                x[good] = sol[:, :3]
            viol = np.einsum("kj,nsj->nsk", cand.G, x) - cand.h
            feas = good & np.all(viol <= _FEAS_TOL * (1.0 + np.abs(cand.h)), axis=-1)
            val = 0.5 * np.einsum("nj,nsj->ns", H, x * x) + np.einsum("nj,nsj->ns", c, x) + const[:, None]
            val = np.where(feas, val, np.inf)
            j = np.argmin(val, axis=1)
            v = val[np.arange(n), j]
            upd = v < best
            best[upd] = v[upd]
            best_x[upd] = x[np.arange(n), j][upd]
        best[~ok] = -np.inf
        return best, best_x

    def averages(self, x: np.ndarray, provenance: str) -> PhaseAverages:
        spec = self.spec
        m1, m2 = spec.m1, spec.m2
        S0, D0 = spec.loading.S0, spec.loading.D0
        S1, r1, r2 = (float(v) for v in x)
        r1, r2 = max(r1, 0.0), max(r2, 0.0)
        S2 = (S0 - m1 * S1) / m2
        u, v = m1 * r1, m2 * r2
        if D0 > 0.0:
            ux = (D0 * D0 + u * u - v * v) / (2.0 * D0)
            uy = math.sqrt(max(u * u - ux * ux, 0.0))
        else:
            ux, uy = u, 0.0
        return PhaseAverages(S1, ux / m1, uy / m1, S2, (D0 - ux) / m2, -uy / m2, provenance)


def phi_inner(spec: CompositeSpec, alpha: float) -> tuple[float, PhaseAverages | None]:
    """Minimum relaxed energy ``Phi(rho, alpha)`` and its minimising phase averages.

    Returns ``(-inf, None)`` when alpha puts a phase in an unbounded regime.
    """
    qp = _InnerQP(spec)
    val, x = qp.solve(np.array([alpha]))
    if not math.isfinite(val[0]):
        return float(val[0]), None
    return float(val[0]), qp.averages(x[0], f"oracle minimiser at alpha={alpha!r}")


@dataclass(frozen=True)
class OracleResult:
    U: float
    alpha_star: float
    averages: PhaseAverages
    trace: tuple[tuple[float, float], ...] = field(repr=False, default=())


def scan_grid(spec: CompositeSpec, points: int = GRID_POINTS) -> np.ndarray:
    K1, L1, K2, L2 = spec.mat1.K, spec.mat1.L, spec.mat2.K, spec.mat2.L
    grid = np.concatenate([np.linspace(-K2, L2, points), [-K2, -K1, 0.0, L1, L2]])
    return np.unique(grid)


def translation_max(spec: CompositeSpec, points: int = GRID_POINTS, tol: float = ALPHA_TOL) -> OracleResult:
    """Maximise ``Phi(rho, alpha) - 2 rho alpha`` over alpha in [-K2, L2]."""
    qp = _InnerQP(spec)
    rho = spec.rho
    grid = scan_grid(spec, points)
    vals, xs = qp.solve(grid)
    obj = vals - 2.0 * rho * grid
    i = int(np.argmax(obj))

    def f(a: float) -> float:
        v, _ = qp.solve(np.array([a]))
        return float(v[0]) - 2.0 * rho * a

    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    c, d = hi - _INVPHI * (hi - lo), lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    a_gs = 0.5 * (lo + hi)
    f_gs = f(a_gs)
    # keep the grid point (possibly an exact breakpoint) unless refinement clearly improves it
    if f_gs > obj[i] + 1e-13 * (1.0 + abs(obj[i])):
        alpha, U = a_gs, f_gs
        _, x = qp.solve(np.array([a_gs]))
        x = x[0]
    else:
        alpha, U, x = float(grid[i]), float(obj[i]), xs[i]
    trace = tuple(zip(grid.tolist(), obj.tolist()))
    return OracleResult(U, float(alpha), qp.averages(x, f"oracle minimiser at alpha*={alpha!r}"), trace)


def phi_inner_multistart(spec: CompositeSpec, alpha: float, starts: int = 10,
                         rng: np.random.Generator | None = None) -> list[float]:
    """Local minima of the full six-variable inner problem from random feasible starts.

    Works directly on (S1, D11, D12, S2, D21, D22) with the average constraints
    as equalities and the cone conditions as smooth inequalities; it shares no
    code with the active-set solver and serves as a cross-check.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    m1, m2, rho = spec.m1, spec.m2, spec.rho
    S0, D0 = spec.loading.S0, spec.loading.D0
    nonneg = rho >= 0.0
    a1, b1, ok1 = _coeffs(spec.mat1, np.array(alpha), nonneg)
    a2, b2, ok2 = _coeffs(spec.mat2, np.array(alpha), nonneg)
    if not (ok1 and ok2):
        return [-math.inf] * starts
    a1, b1, a2, b2 = float(a1), float(b1), float(a2), float(b2)
    sgn = 1.0 if nonneg else -1.0

    def obj(z):
        S1, D11, D12, S2, D21, D22 = z
        return m1 * (a1 * S1**2 + b1 * (D11**2 + D12**2)) + m2 * (a2 * S2**2 + b2 * (D21**2 + D22**2))

    def jac(z):
        S1, D11, D12, S2, D21, D22 = z
        return np.array([2 * m1 * a1 * S1, 2 * m1 * b1 * D11, 2 * m1 * b1 * D12,
                         2 * m2 * a2 * S2, 2 * m2 * b2 * D21, 2 * m2 * b2 * D22])

    cons = [
        {"type": "eq", "fun": lambda z: np.array([m1 * z[0] + m2 * z[3] - S0,
                                                 m1 * z[1] + m2 * z[4] - D0,
                                                 m1 * z[2] + m2 * z[5]])},
        {"type": "ineq", "fun": lambda z: sgn * np.array([z[0]**2 - z[1]**2 - z[2]**2,
                                                         z[3]**2 - z[4]**2 - z[5]**2])},
    ]
    out = []
    for _ in range(starts):
        # random feasible start: split tau0 between the phases, then push into the cone
        t = rng.uniform(0.2, 0.8)
        ang = rng.uniform(-math.pi, math.pi)
        w = rng.uniform(0.0, 0.5)
        D1 = np.array([t * D0 / m1, 0.0]) + w * np.array([math.cos(ang), math.sin(ang)])
        D2 = (np.array([D0, 0.0]) - m1 * D1) / m2
        if nonneg:
            S1 = max(np.linalg.norm(D1), (S0 - m2 * np.linalg.norm(D2)) / m1) * (1 + rng.uniform(0, 0.1))
        else:
            S1 = rng.uniform(-1.0, 1.0) * min(np.linalg.norm(D1), 0.9 * S0 / m1 + np.linalg.norm(D1))
        S2 = (S0 - m1 * S1) / m2
        z0 = np.array([S1, D1[0], D1[1], S2, D2[0], D2[1]])
        res = minimize(obj, z0, jac=jac, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-14, "maxiter": 1000})
        out.append(float(res.fun) if res.success else math.nan)
    return out
