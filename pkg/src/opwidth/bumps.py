"""Smooth bump partitions of the unit cube.

The building blocks:

* the mollifier ``phi(t) = exp(-1/(1-t^2))`` on (-1,1), zero outside;
* the plateau profile ``sigma_gamma`` which rises from 0 on the rescaled
  left half-bump supported on [0, 1-gamma], sits at 1 on the central plateau
  [(1-gamma)/2, (1+gamma)/2], and falls back along the mirrored half-bump
  supported on [gamma, 1];
* the cube bump ``phi_gamma(x) = prod_j sigma_gamma(x_j)`` on [0,1]^d; and
* for a partition of [0,1]^d into m^d congruent cells, the translated and
  rescaled copies ``phi_{gamma,j}(x) = phi_gamma(m (x - a_j))`` supported in
  the j-th cell (a_j is the cell's lower corner).

All derivatives up to order 4 are evaluated in closed form:
``phi^(l)(t) = phi(t) * A_l(t) / (1-t^2)^(2l)`` where the integer-coefficient
polynomials A_l satisfy ``A_{l+1} = A_l' (1-t^2)^2 + (4 l t (1-t^2) - 2t) A_l``.

The profile-derivative constants ``beta_l = sup_gamma sup_x
|sigma_gamma^(l)(x)| (1-gamma)^l`` reduce to ``e 2^l sup|phi^(l)|`` (the edge
pieces are affine reparametrizations of phi, so the gamma-dependence cancels);
they are estimated once by a dense vectorized scan and cached.  The packing
constant ``Gamma(k) = max_{|nu|_1 <= k} prod_i beta_{nu_i}`` controls
``sup |D^nu phi_{gamma,j}| <= Gamma(k) m^{|nu|_1} / (1-gamma)^k``, and the
plateau gives the mass bound ``||phi_{gamma,j}||_p^p >= gamma^d / m^d``.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _iterproduct

import numpy as np

from .errors import ValidationError
from .grids import GridFunction, multi_indices

MAX_DERIVATIVE_ORDER = 4

_E = float(np.e)


# ---- the mollifier and its exact derivatives ------------------------------


@lru_cache(maxsize=None)
def _mollifier_polys():
    """Coefficient arrays of A_l, l = 0..MAX_DERIVATIVE_ORDER (exact ints)."""
    polys = [np.array([1.0])]
    one_minus_t2_sq = np.array([1.0, 0.0, -2.0, 0.0, 1.0])  # (1-t^2)^2, low->high
    for l in range(MAX_DERIVATIVE_ORDER):
        a = polys[-1]
        da = np.polynomial.polynomial.polyder(a)
        term1 = np.polynomial.polynomial.polymul(da, one_minus_t2_sq)
        # 4 l t (1-t^2) - 2t  =  (4l - 2) t - 4 l t^3
        factor = np.array([0.0, 4.0 * l - 2.0, 0.0, -4.0 * l])
        term2 = np.polynomial.polynomial.polymul(factor, a)
        n = max(len(term1), len(term2))
        out = np.zeros(n)
        out[: len(term1)] += term1
        out[: len(term2)] += term2
        polys.append(out)
    return polys


def mollifier(t, deriv: int = 0):
    """phi^(deriv)(t), vectorized, exactly zero outside (-1,1)."""
    if not 0 <= deriv <= MAX_DERIVATIVE_ORDER:
        raise ValidationError(f"derivative order {deriv} outside 0..{MAX_DERIVATIVE_ORDER}")
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    base = np.exp(-1.0 / (1.0 - ti * ti))
    if deriv == 0:
        out[inside] = base
        return out
    poly = _mollifier_polys()[deriv]
    num = np.polynomial.polynomial.polyval(ti, poly)
    out[inside] = base * num / (1.0 - ti * ti) ** (2 * deriv)
    return out


@lru_cache(maxsize=None)
def beta_constants():
    """beta_l = e * 2^l * sup|phi^(l)| for l = 0..4, by dense scan (1e5 pts)."""
    ts = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, 100_001)
    table = {}
    for l in range(MAX_DERIVATIVE_ORDER + 1):
        sup = float(np.max(np.abs(mollifier(ts, l))))
        table[l] = _E * 2.0**l * sup
    return table


@lru_cache(maxsize=None)
def gamma_constant(k: int, dim: int = 1) -> float:
    """Gamma(k) = max over |nu|_1 <= k, nu in N^dim, of prod_i beta_{nu_i}."""
    if not 0 <= k <= MAX_DERIVATIVE_ORDER:
        raise ValidationError(f"smoothness order {k} outside 0..{MAX_DERIVATIVE_ORDER}")
    betas = beta_constants()
    best = 1.0
    for nu in multi_indices(dim, k):
        prod = 1.0
        for v in nu:
            prod *= betas[v]
        best = max(best, prod)
    return best


# ---- the plateau profile ---------------------------------------------------


def profile(x, gamma: float, deriv: int = 0):
    """sigma_gamma^(deriv)(x), vectorized; zero outside (0,1)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    lo = 0.5 * (1.0 - gamma)
    hi = 0.5 * (1.0 + gamma)
    scale = 2.0 / (1.0 - gamma)
    rise = (x > 0.0) & (x < lo)
    fall = (x > hi) & (x < 1.0)
    if deriv == 0:
        out[(x >= lo) & (x <= hi)] = 1.0
        out[rise] = _E * mollifier(scale * x[rise] - 1.0)
        out[fall] = _E * mollifier((2.0 * x[fall] - (1.0 + gamma)) / (1.0 - gamma))
        return out
    factor = _E * scale**deriv
    out[rise] = factor * mollifier(scale * x[rise] - 1.0, deriv)
    out[fall] = factor * mollifier((2.0 * x[fall] - (1.0 + gamma)) / (1.0 - gamma), deriv)
    return out


@lru_cache(maxsize=None)
def profile_power_integral(gamma: float, p: float, points: int = 200_001) -> float:
    """int_0^1 sigma_gamma(t)^p dt by dense midpoint quadrature.

    sigma is smooth and bounded so the midpoint rule at 2e5 points is
    accurate to ~1e-11 here; the fooling-pair builder uses this to predict
    separation/claim ratios before committing to a partition.
    """
    ts = (np.arange(points) + 0.5) / points
    return float(np.mean(profile(ts, gamma) ** p))


# ---- partitions ------------------------------------------------------------


@dataclass(frozen=True)
class PartitionSpec:
    """Subdivision of [0,1]^d into m^d congruent half-open cells.

    Cells are indexed row-major over the per-axis cell coordinates, i.e. cell
    ``j`` has per-axis indices ``unravel_index(j, (m,)*d)``.
    """

    dim: int
    subdivisions: int

    def __post_init__(self):
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise ValidationError(f"dim must be a positive int, got {self.dim!r}")
        if not (isinstance(self.subdivisions, int) and self.subdivisions >= 1):
            raise ValidationError(f"subdivisions must be a positive int, got {self.subdivisions!r}")

    @property
    def n_cells(self) -> int:
        return self.subdivisions**self.dim

    def axis_indices(self, cells) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64)
        return np.stack(np.unravel_index(cells, (self.subdivisions,) * self.dim), axis=-1)

    def lower_corners(self, cells) -> np.ndarray:
        return self.axis_indices(cells) / self.subdivisions

    def centers(self, cells) -> np.ndarray:
        return (self.axis_indices(cells) + 0.5) / self.subdivisions

    def cell_of(self, points) -> np.ndarray:
        """Cell index per point; boundary points go to the lowest cube index.

        A coordinate sitting exactly on a shared cell face belongs to the
        lower cell, so the assignment is deterministic (the bumps vanish on
        faces anyway, which is why any tie-break is sound for fooling pairs).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.dim:
            raise ValidationError(f"points have dim {pts.shape[1]}, partition has {self.dim}")
        m = self.subdivisions
        scaled = pts * m
        idx = np.floor(scaled).astype(np.int64)
        on_face = (scaled == idx) & (idx > 0)
        idx[on_face] -= 1
        idx = np.clip(idx, 0, m - 1)
        return np.ravel_multi_index(tuple(idx.T), (m,) * self.dim)


class BumpFamily:
    """The translated bumps phi_{gamma,j} over a PartitionSpec.

    ``shift(j)`` realizes the recentring vector q_j with
    ``phi_{gamma,j}(x) = phi_gamma(m (x + q_j))``; q_j equals
    ``(1/(2m)) * 1  -  center(Q_j)``, i.e. minus the cell's lower corner, so
    the support of bump j is exactly the closed cell Q_j and the plateau is
    the centered sub-cube of relative width gamma.
    """

    def __init__(self, partition: PartitionSpec, gamma: float):
        if not 0.05 < gamma < 0.95:
            raise ValidationError(f"gamma must lie in (0.05, 0.95), got {gamma}")
        self.partition = partition
        self.gamma = float(gamma)

    @property
    def dim(self) -> int:
        return self.partition.dim

    def shift(self, cells) -> np.ndarray:
        m = self.partition.subdivisions
        return 0.5 / m - self.partition.centers(cells)

    def evaluate(self, cells, points, nu=None) -> np.ndarray:
        """D^nu phi_{gamma,j} at the given points, for j = cells (broadcast).

        cells: int or (n_bumps,) ints; points: (n_pts, d).  Returns
        (n_bumps, n_pts) (or (n_pts,) for a scalar cell).
        """
        scalar = np.isscalar(cells)
        cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if nu is None:
            nu = (0,) * self.dim
        nu = tuple(int(v) for v in nu)
        if len(nu) != self.dim or any(v < 0 for v in nu) or sum(nu) > MAX_DERIVATIVE_ORDER:
            raise ValidationError(f"bad multi-index {nu}")
        m = self.partition.subdivisions
        corners = self.partition.lower_corners(cells)  # (n_bumps, d)
        out = np.ones((len(cells), len(pts)))
        for axis in range(self.dim):
            local = m * (pts[None, :, axis] - corners[:, axis, None])
            out *= profile(local, self.gamma, nu[axis]) * float(m) ** nu[axis]
        return out[0] if scalar else out

    def superposition(self, cells, coeffs, points, nu=None) -> np.ndarray:
        """sum_j coeffs[j] * D^nu phi_{gamma, cells[j]} at points."""
        vals = self.evaluate(cells, points, nu)
        return np.asarray(coeffs, dtype=np.float64) @ vals

    def superposition_grid(self, cells, coeffs, resolution, nu=None) -> GridFunction:
        fn = lambda pts: self.superposition(cells, coeffs, pts, nu)
        return GridFunction.from_callable(fn, self.dim, resolution)

    # ---- certified bounds -------------------------------------------------

    def derivative_sup_bound(self, nu, k: int) -> float:
        """Certified bound Gamma(k) m^{|nu|_1} / (1-gamma)^k for |nu|_1 <= k."""
        nu = tuple(int(v) for v in nu)
        if sum(nu) > k:
            raise ValidationError(f"|nu|_1 = {sum(nu)} exceeds the smoothness order {k}")
        m = self.partition.subdivisions
        return (
            gamma_constant(k, self.dim) * float(m) ** sum(nu) / (1.0 - self.gamma) ** k
        )

    def lp_mass_lower_bound(self, p: float) -> float:
        """Certified ||phi_{gamma,j}||_p^p >= gamma^d / n_cells (plateau mass)."""
        return self.gamma**self.dim / self.partition.n_cells

    def lp_mass_exact(self, p: float) -> float:
        """||phi_{gamma,j}||_p^p = (int sigma^p)^d / n_cells, via 1-d quadrature."""
        return profile_power_integral(self.gamma, float(p)) ** self.dim / self.partition.n_cells


def build_bump_family(dim: int, subdivisions: int, gamma: float) -> BumpFamily:
    """Validated constructor for desk-scale certification runs."""
    if not 1 <= dim <= 4:
        raise ValidationError(f"dim must be in 1..4, got {dim}")
    if not 1 <= subdivisions <= 8:
        raise ValidationError(f"subdivisions must be in 1..8, got {subdivisions}")
    return BumpFamily(PartitionSpec(dim, subdivisions), gamma)
