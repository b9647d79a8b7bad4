"""Bi-orthogonal hypercubes and the embedding of finite-dimensional hardness.

A smoothness ball K inside an ambient function space X contains an
alpha-hypercube when there is a bi-orthogonal M-bounded system
(phi_j, phi*_j) with ambient-normalized elements such that

    { c n^{-alpha} sum_j y_j phi_j : y in [0,1]^n }  is a subset of  K.

Two concrete systems are built here:

* ``build_trig_hypercube`` — the n lowest 1-periodic trigonometric modes,
  normalized in L^p, with L^2 inner-product duals; certifies the Sobolev
  ball W^{s,p} with decay rate alpha = s/d + 1 (the scale c comes from the
  triangle inequality over the measured per-mode Sobolev norms, so the
  corner y = 1 is sound by construction).
* ``build_bump_hypercube`` — n disjointly supported plateau bumps with
  point-evaluation duals at the plateau nodes; certifies the C^s ball with
  the better rate alpha = s/d (disjoint supports make the C^s norm of any
  combination a maximum, not a sum).

``embed_functional`` turns a boundary-vanishing function f on [0,1]^dim into
a functional iota f on grid inputs via the rescaled dual coordinates, with
h_dim(y) = (c/dim^alpha) sum_j y_j phi_j as the exact right inverse:
f(y) = (iota f)(h_dim(y)) by bi-orthogonality.  Composing the embedding with
fooling pairs converts the cube's n^{-k/dim} sample-hardness into
polylogarithmic hardness for functionals on K, which
``log_hardness_demo`` measures.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bumps import BumpFamily, PartitionSpec
from .errors import ValidationError
from .fooling import fooling_pair
from .grids import INF, GridFunction, NormSpec, is_inf, multi_indices

_BIORTH_TOL = 1e-8
_CORNER_TOL = 1e-6


@dataclass
class BiorthSystem:
    """A bi-orthogonal M-bounded system certifying one alpha-hypercube.

    ``basis_stack[j]`` holds phi_j on the build grid (ambient-normalized);
    ``dual_weights[j]`` holds the weight function w_j of the quadrature
    functional phi*_j(u) = mean(w_j * u).  Point-evaluation duals are stored
    as one-hot weights scaled by the number of grid nodes, so the same
    inner-product rule covers both kinds.
    """

    kind: str  # "trig-sobolev" | "bump-sup"
    size: int
    domain_dim: int
    alpha: float
    scale: float  # c
    dual_bound: float  # M
    resolution: int
    smoothness: NormSpec
    ambient: NormSpec
    basis_stack: np.ndarray
    dual_weights: np.ndarray
    basis_smooth_norms: np.ndarray
    corner_norm: float
    biorth_error: float
    meta: dict = field(default_factory=dict)

    def basis_grid(self, j: int) -> GridFunction:
        return GridFunction(self.basis_stack[j][None].copy(), "cube-periodic")

    def dual_apply(self, j: int, u) -> float:
        vals = u.values[0] if isinstance(u, GridFunction) else np.asarray(u)
        if vals.shape != self.basis_stack[j].shape:
            raise ValidationError("input grid does not match the system resolution")
        return float(np.mean(self.dual_weights[j] * vals))

    def dual_matrix(self) -> np.ndarray:
        """phi*_k(phi_j) for all k, j — identity up to quadrature rounding."""
        n = self.size
        flat_basis = self.basis_stack.reshape(n, -1)
        flat_duals = self.dual_weights.reshape(n, -1)
        return flat_duals @ flat_basis.T / flat_basis.shape[1]

    def corner_function(self) -> GridFunction:
        coeff = self.scale * self.size ** (-self.alpha)
        return GridFunction(coeff * self.basis_stack.sum(axis=0)[None], "cube-periodic")

    def hypercube_point(self, y) -> GridFunction:
        """c n^{-alpha} sum_j y_j phi_j for y in [0,1]^n."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.size,):
            raise ValidationError(f"expected {self.size} coefficients, got {y.shape}")
        coeff = self.scale * self.size ** (-self.alpha)
        vals = np.tensordot(y, self.basis_stack, axes=(0, 0))
        return GridFunction(coeff * vals[None], "cube-periodic")


# ---- trigonometric system ----------------------------------------------------


def _trig_axis(freq: int, kind: str, pts: np.ndarray, order: int) -> np.ndarray:
    """Exact derivative of the 1-D orthonormal mode: 1, sqrt2 cos, or sqrt2 sin."""
    if kind == "const":
        return np.ones_like(pts) if order == 0 else np.zeros_like(pts)
    w = 2.0 * math.pi * freq
    arg = w * pts + 0.5 * math.pi * order
    base = np.cos(arg) if kind == "cos" else np.sin(arg)
    return math.sqrt(2.0) * w**order * base


def _trig_modes(dim: int, count: int):
    """First `count` tensor modes ordered by degree = max per-axis frequency."""
    axis_modes = [(0, "const")]
    max_freq = count  # more than enough 1-D factors
    for m in range(1, max_freq + 1):
        axis_modes.append((m, "cos"))
        axis_modes.append((m, "sin"))
    from itertools import product

    combos = list(product(range(len(axis_modes)), repeat=dim))
    combos.sort(key=lambda c: (max(axis_modes[i][0] for i in c), c))
    modes = [tuple(axis_modes[i] for i in c) for c in combos[:count]]
    degree = max(max(f for f, _ in mode) for mode in modes)
    return modes, degree


def _trig_field(modes, coeffs, n_grid, dim, nu):
    pts = np.arange(n_grid) / n_grid
    out = np.zeros((n_grid,) * dim)
    for mode, cf in zip(modes, coeffs):
        if cf == 0.0:
            continue
        block = _trig_axis(mode[0][0], mode[0][1], pts, nu[0])
        for axis in range(1, dim):
            block = np.multiply.outer(block, _trig_axis(mode[axis][0], mode[axis][1], pts, nu[axis]))
        out += cf * block
    return out


def _sobolev_norm_of_combo(modes, coeffs, s, p, n_grid, dim) -> float:
    total = 0.0
    cellw = float(n_grid) ** (-dim)
    for nu in multi_indices(dim, s):
        arr = np.abs(_trig_field(modes, coeffs, n_grid, dim, nu))
        total += float(np.sum(arr**p)) * cellw
    return total ** (1.0 / p)


def _lp_of_field(arr, p, dim, n_grid) -> float:
    if is_inf(p):
        return float(np.max(np.abs(arr)))
    return (float(np.sum(np.abs(arr) ** p)) * float(n_grid) ** (-dim)) ** (1.0 / p)


def build_trig_hypercube(n: int, s: int, p, dim: int = 1) -> BiorthSystem:
    """Sobolev-ball hypercube from the n lowest trigonometric modes.

    Elements are L^p-normalized, duals are L^2 inner products against the
    orthonormal modes (exact on the grid by discrete orthogonality), and
    c = n^alpha / sum_j ||phi_j||_{W^{s,p}} so the corner lies in the unit
    ball by the triangle inequality.
    """
    if not 1 <= n <= 64:
        raise ValidationError(f"system size must be in 1..64, got {n}")
    if not 1 <= s <= 3:
        raise ValidationError(f"smoothness order must be in 1..3, got {s}")
    if is_inf(p) or float(p) < 1.0:
        raise ValidationError("the Sobolev hypercube needs a finite exponent p >= 1")
    if dim not in (1, 2):
        raise ValidationError("trig hypercubes support dim in {1, 2}")
    p = float(p)

    modes, degree = _trig_modes(dim, n)
    n_grid = 1 << max(6, math.ceil(math.log2(4 * degree + 4)))
    alpha = s / dim + 1.0

    basis, duals, smooth_norms, lp_norms = [], [], [], []
    unit = np.zeros(n)
    for j in range(n):
        unit[:] = 0.0
        unit[j] = 1.0
        raw = _trig_field(modes, unit, n_grid, dim, (0,) * dim)
        lp_norm = _lp_of_field(raw, p, dim, n_grid)
        lp_norms.append(lp_norm)
        basis.append(raw / lp_norm)
        duals.append(raw * lp_norm)  # L^2 dual of raw, rescaled for phi_j
        unit[j] = 1.0 / lp_norm
        smooth_norms.append(_sobolev_norm_of_combo(modes, unit, s, p, n_grid, dim))
        unit[j] = 0.0
    basis_stack = np.stack(basis)
    dual_weights = np.stack(duals)
    smooth_norms = np.asarray(smooth_norms)

    scale = n**alpha / float(smooth_norms.sum())
    corner_coeffs = scale * n ** (-alpha) / np.asarray(lp_norms)
    corner_norm = _sobolev_norm_of_combo(modes, corner_coeffs, s, p, n_grid, dim)
    if corner_norm > 1.0 + _CORNER_TOL:
        raise ValidationError(f"hypercube corner norm {corner_norm} exceeds the unit ball")

    # dual operator norms on L^p: Hoelder against the weight function
    p_conj = INF if p == 1.0 else p / (p - 1.0)
    dual_bound = max(_lp_of_field(w, p_conj, dim, n_grid) for w in dual_weights)

    system = BiorthSystem(
        kind="trig-sobolev",
        size=n,
        domain_dim=dim,
        alpha=alpha,
        scale=scale,
        dual_bound=dual_bound,
        resolution=n_grid,
        smoothness=NormSpec.wkq(s, p),
        ambient=NormSpec.lp(p),
        basis_stack=basis_stack,
        dual_weights=dual_weights,
        basis_smooth_norms=smooth_norms,
        corner_norm=corner_norm,
        biorth_error=0.0,
        meta={"degree": degree, "modes": [[list(f) for f in mode] for mode in modes]},
    )
    system.biorth_error = float(np.max(np.abs(system.dual_matrix() - np.eye(n))))
    if system.biorth_error > _BIORTH_TOL:
        raise ValidationError(f"bi-orthogonality error {system.biorth_error} too large")
    return system


def bernstein_constant(s: int, p, degree: int, dim: int = 1, trials: int = 10, rng=None):
    """Largest observed ||f||_{W^{s,p}} / (degree^s ||f||_{L^p}) on random trig polynomials."""
    rng = rng or np.random.default_rng(0)
    count = (2 * degree + 1) ** dim
    modes, deg = _trig_modes(dim, count)
    n_grid = 1 << max(6, math.ceil(math.log2(4 * deg + 4)))
    worst = 0.0
    for _ in range(trials):
        coeffs = rng.standard_normal(count)
        num = _sobolev_norm_of_combo(modes, coeffs, s, float(p), n_grid, dim)
        den = _lp_of_field(_trig_field(modes, coeffs, n_grid, dim, (0,) * dim), float(p), dim, n_grid)
        worst = max(worst, num / (degree**s * den))
    return worst


# ---- disjoint-bump system ----------------------------------------------------


def build_bump_hypercube(n: int, s: int, dim: int = 1) -> BiorthSystem:
    """C^s-ball hypercube from n disjoint plateau bumps, alpha = s/dim.

    Duals are point evaluations at a grid node inside each plateau (where the
    bump equals exactly 1 and every other bump exactly 0), so bi-orthogonality
    is exact and M = 1.
    """
    if not 1 <= n <= 64:
        raise ValidationError(f"system size must be in 1..64, got {n}")
    if not 1 <= s <= 3:
        raise ValidationError(f"smoothness order must be in 1..3, got {s}")
    if dim not in (1, 2):
        raise ValidationError("bump hypercubes support dim in {1, 2}")

    m = max(1, math.ceil(n ** (1.0 / dim)))
    while m**dim < n:
        m += 1
    family = BumpFamily(PartitionSpec(dim, m), gamma=0.5)
    cells = np.arange(n, dtype=np.int64)
    alpha = s / dim

    if dim == 1:
        n_grid = 1 << max(6, math.ceil(math.log2(max(64, 16 * m))))
    else:
        n_grid = min(256, 1 << max(6, math.ceil(math.log2(max(64, 8 * m)))))
    probe = GridFunction(np.zeros((1,) + (n_grid,) * dim), "cube-periodic")
    pts = probe.grid_points()

    smooth_norms = np.zeros(n)
    for nu in multi_indices(dim, s):
        vals = np.abs(family.evaluate(cells, pts, nu))
        smooth_norms = np.maximum(smooth_norms, vals.max(axis=1))
    basis_stack = family.evaluate(cells, pts, None).reshape((n,) + (n_grid,) * dim)

    # snap each plateau center to the nearest grid node; the plateau has
    # half-width 1/(4m) >= grid spacing/2, so the node carries the exact value 1
    centers = family.partition.centers(cells)
    node_idx = np.rint(centers * n_grid).astype(np.int64) % n_grid
    dual_weights = np.zeros_like(basis_stack)
    n_nodes = n_grid**dim
    for j in range(n):
        dual_weights[(j, *node_idx[j])] = float(n_nodes)

    scale = n**alpha / float(smooth_norms.max())
    corner_norm = 0.0
    corner_coeffs = np.full(n, scale * n ** (-alpha))
    for nu in multi_indices(dim, s):
        fields = family.superposition(cells, corner_coeffs, pts, nu)
        corner_norm = max(corner_norm, float(np.max(np.abs(fields))))
    if corner_norm > 1.0 + _CORNER_TOL:
        raise ValidationError(f"hypercube corner norm {corner_norm} exceeds the unit ball")

    system = BiorthSystem(
        kind="bump-sup",
        size=n,
        domain_dim=dim,
        alpha=alpha,
        scale=scale,
        dual_bound=1.0,
        resolution=n_grid,
        smoothness=NormSpec.ck(s),
        ambient=NormSpec.lp(INF),
        basis_stack=basis_stack,
        dual_weights=dual_weights,
        basis_smooth_norms=smooth_norms,
        corner_norm=corner_norm,
        biorth_error=0.0,
        meta={"subdivisions": m, "gamma": 0.5, "peak_nodes": node_idx.tolist()},
    )
    system.biorth_error = float(np.max(np.abs(system.dual_matrix() - np.eye(n))))
    if system.biorth_error > _BIORTH_TOL:
        raise ValidationError(f"bi-orthogonality error {system.biorth_error} too large")
    return system


# ---- embedding ---------------------------------------------------------------


def embed_functional(f, system: BiorthSystem):
    """Lift f: [0,1]^dim -> R (vanishing on the boundary) to a functional on grids.

    Returns ``(iota_f, h_map)`` where ``iota_f(u) = f(c^{-1} dim^alpha phi*(u))``
    with zero extension outside the unit cube, and ``h_map(y)`` is the grid
    function (c/dim^alpha) sum_j y_j phi_j.  By bi-orthogonality,
    f(y) = iota_f(h_map(y)) exactly.

    ``f`` takes a (batch, dim) array and returns (batch,) values; its input
    dimension must equal the system size.
    """
    d = system.size
    coeff = system.scale / d**system.alpha

    def h_map(y) -> GridFunction:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (d,):
            raise ValidationError(f"expected a {d}-vector, got shape {y.shape}")
        vals = coeff * np.tensordot(y, system.basis_stack, axes=(0, 0))
        return GridFunction(vals[None], "cube-periodic")

    def iota_f(u) -> float:
        ys = np.array([system.dual_apply(j, u) for j in range(d)]) / coeff
        if np.all((ys >= -1e-9) & (ys <= 1.0 + 1e-9)):
            return float(np.atleast_1d(f(np.clip(ys, 0.0, 1.0)[None, :]))[0])
        return 0.0

    return iota_f, h_map


def embedding_amplification(system: BiorthSystem, k: int) -> float:
    """Bound on ||iota f||_{C^k} / ||f||_{C^k}: max(1, (M d^{alpha+1}/c)^k).

    The chain rule through the linear dual coordinates u -> c^{-1} d^alpha
    phi*(u) pays M d^alpha / c per derivative order and a factor d for the
    sum over coordinates.
    """
    d = system.size
    base = system.dual_bound * d ** (system.alpha + 1.0) / system.scale
    return max(1.0, base**k)


def log_hardness_demo(
    k: int = 1,
    s: int = 1,
    budgets=(4, 64, 256),
    dims=(1, 2, 3, 4),
    rng=None,
    resolution=None,
):
    """Witness errors for functionals on K stagnate polylogarithmically in n.

    For each sample budget n, a fooling pair on [0,1]^dim is embedded through
    a dim-element bump system; dividing by the C^k amplification keeps the
    embedded functionals inside the unit ball of C^k(K), so the certified
    separation / amplification is a sample-complexity witness at budget n.
    Maximizing over the embedded dimension turns the cube rate n^{-k/dim}
    into log(n)^{-(alpha+1)k} decay, calibrated at the smallest budget.
    """
    rng = rng or np.random.default_rng(0)
    systems = {d: build_bump_hypercube(d, s, dim=1) for d in dims}
    alpha = s / 1.0
    exponent = (alpha + 1.0) * k
    rows = []
    for n in budgets:
        best = None
        for d in dims:
            system = systems[d]
            rho = embedding_amplification(system, k)
            ys = rng.random((n, d))
            pair = fooling_pair(ys, k, INF, INF, rng=rng, resolution=resolution)
            witness = pair.certificate["claimed_separation"] / rho
            entry = {
                "budget": n,
                "dim": d,
                "amplification": rho,
                "claimed_separation": pair.certificate["claimed_separation"],
                "witness": witness,
            }
            if best is None or witness > best["witness"]:
                best = entry
        rows.append(best)
    r_cal = rows[0]["witness"] * math.log(budgets[0]) ** exponent
    floors = [r_cal * math.log(n) ** (-exponent) for n in budgets]
    passed = all(row["witness"] >= floor - 1e-12 for row, floor in zip(rows, floors))
    return {
        "rows": rows,
        "exponent": exponent,
        "calibrated_constant": r_cal,
        "floors": floors,
        "passed": passed,
    }
