"""Adversarial fooling pairs against point-sample encoders.

Given n sample locations, two functions f and g are built from 2n
disjointly-supported bumps so that

* f(y_i) = g(y_i) at every sample (bit-identical values), and
* both lie in the unit ball of the requested smoothness norm (C^k or
  W^{k,q}), while ||f - g||_p stays bounded below by the certified
  separation 2 J gamma^{d/p}.

Any reconstruction map that sees only the samples must therefore miss one of
the two by at least half the separation.  The same construction runs on the
Gaussian-weighted ambient space R^d by composing every bump with the
coordinatewise normal-CDF transport; the weighted norms are then computed by
the change of variables back onto the cube.

Construction policy.  gamma = d/(kp+d) for finite p and 1/2 for p = inf.
The amplitude starts from the closed-form seed
``J_0 = ((k+1) d^k)^{1/q} * (1-gamma)^{-k} * Gamma(k) * m^k)^{-1}`` and is
shrunk by bisection until the measured discrete norm is <= 1, so the
unit-ball part of the certificate is checked against the same quadrature it
is stated for.  The number of subdivisions m and the assignment of bumps to
cells are searched over a short deterministic schedule until the predicted
separation/claim ratio exceeds 1 (the naive choice of exactly 2n cells can
undershoot the certified value for small k*p, since half the bump mass is
then lost to the sample-hit cells); the measured separation is verified at
build time.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bumps import BumpFamily, PartitionSpec, gamma_constant, profile, profile_power_integral
from .errors import InfeasibleError, ValidationError
from .grids import INF, GridFunction, NormSpec, is_inf
from .transport import TransportMap, gauss_pdf

_SAFETY_RATIO = 1.02  # predicted separation/claim margin before committing


def gamma_policy(k: int, p, dim: int) -> float:
    """gamma = d/(kp+d) for finite p, else 1/2."""
    if is_inf(p):
        return 0.5
    return dim / (k * float(p) + dim)


def _default_resolution(dim: int, subdivisions: int) -> int:
    if dim == 1:
        target = max(256, 32 * subdivisions)
        cap = 8192
    elif dim == 2:
        target = max(64, 8 * subdivisions)
        cap = 512
    elif dim == 3:
        target = max(32, 4 * subdivisions)
        cap = 128
    else:
        target = max(16, 2 * subdivisions)
        cap = 32
    return min(cap, 1 << max(3, math.ceil(math.log2(target))))


def _axis_window(corner: float, width: float, n_grid: int, offset: float):
    """Grid indices i with corner <= (i+offset)/n <= corner+width."""
    i0 = max(0, math.ceil(corner * n_grid - offset - 1e-12))
    i1 = min(n_grid - 1, math.floor((corner + width) * n_grid - offset + 1e-12))
    return i0, i1


def _tensor_accumulate(out, windows, axis_values, coeff):
    """out[window] += coeff * outer(axis_values...)."""
    dim = len(windows)
    if dim == 1:
        (i0, i1) = windows[0]
        out[i0 : i1 + 1] += coeff * axis_values[0]
        return
    block = axis_values[0]
    for vals in axis_values[1:]:
        block = np.multiply.outer(block, vals)
    sl = tuple(slice(i0, i1 + 1) for (i0, i1) in windows)
    out[sl] += coeff * block


class _CubeFields:
    """Windowed evaluation of sums of bump derivatives on a cube grid."""

    def __init__(self, family: BumpFamily, cells, coeffs, n_grid: int, offset: float = 0.0):
        self.family = family
        self.cells = np.asarray(cells, dtype=np.int64)
        self.coeffs = np.asarray(coeffs, dtype=np.float64)
        self.n_grid = n_grid
        self.offset = offset
        self._axis_pts = (np.arange(n_grid) + offset) / n_grid

    def axis_factor(self, u_pts, corner, order):
        m = self.family.partition.subdivisions
        local = m * (u_pts - corner)
        return profile(local, self.family.gamma, order) * float(m) ** order

    def field(self, nu) -> np.ndarray:
        dim = self.family.dim
        m = self.family.partition.subdivisions
        width = 1.0 / m
        out = np.zeros((self.n_grid,) * dim)
        corners = self.family.partition.lower_corners(self.cells)
        for j, coeff in enumerate(self.coeffs):
            if coeff == 0.0:
                continue
            windows, axis_values = [], []
            empty = False
            for axis in range(dim):
                i0, i1 = _axis_window(corners[j, axis], width, self.n_grid, self.offset)
                if i1 < i0:
                    empty = True
                    break
                windows.append((i0, i1))
                pts = self._axis_pts[i0 : i1 + 1]
                axis_values.append(self.axis_factor(pts, corners[j, axis], nu[axis]))
            if not empty:
                _tensor_accumulate(out, windows, axis_values, coeff)
        return out


class _TransportedFields(_CubeFields):
    """Same accumulation, but for bumps composed with the CDF transport.

    The grid still lives on the cube (quadrature by change of variables);
    per-axis factors are the exact chain-rule derivatives of
    sigma(m(xi(x)-corner)) with respect to the ambient coordinate x,
    evaluated at x = xi^{-1}(u).
    """

    def __init__(self, family, cells, coeffs, n_grid, transport: TransportMap, offset=0.5):
        super().__init__(family, cells, coeffs, n_grid, offset)
        self.transport = transport
        self._x_pts = transport.inverse(self._axis_pts)
        self._pdf = gauss_pdf(self._x_pts)
        x = self._x_pts
        self._xi2 = -x * self._pdf
        self._xi3 = (x * x - 1.0) * self._pdf
        self._xi4 = (3.0 * x - x**3) * self._pdf

    def axis_factor(self, u_pts, corner, order):
        # cube-side profile derivatives s^(l) at u, then Faa di Bruno through xi
        s = [super(_TransportedFields, self).axis_factor(u_pts, corner, l) for l in range(order + 1)]
        if order == 0:
            return s[0]
        idx = np.round(u_pts * self.n_grid - self.offset).astype(np.int64)
        rho = self._pdf[idx]
        xi2 = self._xi2[idx]
        xi3 = self._xi3[idx]
        xi4 = self._xi4[idx]
        if order == 1:
            return s[1] * rho
        if order == 2:
            return s[2] * rho**2 + s[1] * xi2
        if order == 3:
            return s[3] * rho**3 + 3.0 * s[2] * rho * xi2 + s[1] * xi3
        return (
            s[4] * rho**4
            + 6.0 * s[3] * rho**2 * xi2
            + s[2] * (3.0 * xi2**2 + 4.0 * rho * xi3)
            + s[1] * xi4
        )


def _quadrature_norm(fields: _CubeFields, smoothness: NormSpec, dim: int) -> float:
    """Discrete smoothness norm of the accumulated bump superposition."""
    from .grids import multi_indices

    k = smoothness.k if smoothness.kind in ("ck", "wkq") else 0
    q = INF if smoothness.kind == "ck" else smoothness.q
    cellw = fields.n_grid ** (-dim)
    if is_inf(q):
        best = 0.0
        for nu in multi_indices(dim, k):
            best = max(best, float(np.max(np.abs(fields.field(nu)))))
        return best
    total = 0.0
    for nu in multi_indices(dim, k):
        arr = np.abs(fields.field(nu))
        total += float(np.sum(arr**q)) * cellw
    return total ** (1.0 / q)


def _quadrature_lp(arr: np.ndarray, p, dim: int, n_grid: int) -> float:
    if is_inf(p):
        return float(np.max(np.abs(arr)))
    return (float(np.sum(np.abs(arr) ** p)) * n_grid ** (-dim)) ** (1.0 / p)


@dataclass
class FoolingPair:
    """A certified pair (f, g): equal on the samples, far apart in L^p."""

    kind: str  # "cube" | "gaussian"
    family: BumpFamily
    hosts: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    hit_map: np.ndarray
    samples: np.ndarray  # original coordinates (ambient ones for "gaussian")
    amplitude: float  # J
    smoothness: NormSpec
    error_norm: NormSpec
    resolution: int
    certificate: dict
    transport: TransportMap = None
    _grid_cache: dict = field(default_factory=dict, repr=False)

    # ---- exact evaluators -------------------------------------------------

    def _cube_points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.kind == "gaussian":
            return self.transport.forward(pts)
        return pts

    def evaluate_f(self, points) -> np.ndarray:
        return self.amplitude * self.family.superposition(
            self.hosts, self.alpha, self._cube_points(points)
        )

    def evaluate_g(self, points) -> np.ndarray:
        return self.amplitude * self.family.superposition(
            self.hosts, self.beta, self._cube_points(points)
        )

    # ---- grid views ---------------------------------------------------------

    def _cube_grid(self, coeffs) -> GridFunction:
        fields = _CubeFields(self.family, self.hosts, self.amplitude * coeffs, self.resolution)
        return GridFunction(fields.field((0,) * self.family.dim)[None], "cube-periodic")

    def _ambient_grid(self, evaluator) -> GridFunction:
        n = min(self.resolution, 256 if self.family.dim == 1 else 128)
        return GridFunction.from_callable(
            evaluator, self.family.dim, n, domain="gaussian-ambient"
        )

    def f_grid(self) -> GridFunction:
        if "f" not in self._grid_cache:
            if self.kind == "cube":
                self._grid_cache["f"] = self._cube_grid(self.alpha)
            else:
                self._grid_cache["f"] = self._ambient_grid(self.evaluate_f)
        return self._grid_cache["f"]

    def g_grid(self) -> GridFunction:
        if "g" not in self._grid_cache:
            if self.kind == "cube":
                self._grid_cache["g"] = self._cube_grid(self.beta)
            else:
                self._grid_cache["g"] = self._ambient_grid(self.evaluate_g)
        return self._grid_cache["g"]

    @property
    def claimed_separation(self) -> float:
        return self.certificate["claimed_separation"]


def _host_cells(partition: PartitionSpec, occupied: np.ndarray, n_bumps: int, strategy: str):
    """Pick which cells carry bumps.

    "occupied-first" mirrors the textbook construction (every sample cell
    hosts a bump); "avoid" parks all bumps away from the samples, which keeps
    every bump unhit at the cost of needing more cells.
    """
    n_cells = partition.n_cells
    occ_set = set(int(c) for c in occupied)
    free = [c for c in range(n_cells) if c not in occ_set]
    if strategy == "occupied-first":
        hosts = sorted(occ_set) + free
        hosts = hosts[:n_bumps]
    elif strategy == "avoid":
        if len(free) < n_bumps:
            return None
        hosts = free[:n_bumps]
    else:
        raise ValidationError(f"unknown hosting strategy {strategy!r}")
    if len(hosts) < n_bumps:
        return None
    return np.asarray(hosts, dtype=np.int64)


def _predicted_ratio(gamma, p, dim, n_unhit, n_cells):
    """Predicted (measured separation / claimed separation)^p before building."""
    if is_inf(p):
        return 1.0 if n_unhit >= 1 else 0.0
    mass = profile_power_integral(gamma, float(p)) ** dim
    return n_unhit * mass / (n_cells * gamma**dim)


def _round_up_to_power(count: int, dim: int) -> int:
    """Smallest m**dim >= count."""
    m = max(1, math.ceil(count ** (1.0 / dim)))
    while m**dim < count:
        m += 1
    return m**dim


def _build_pair(samples, k, q, p, rng, resolution, kind):
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise ValidationError(
            f"samples must form an (n, dim) array, got shape {samples.shape}"
        )
    dim = samples.shape[1]
    n_raw = samples.shape[0]
    if not 1 <= k <= 3:
        raise ValidationError(f"smoothness order k must be in 1..3, got {k}")
    if dim > 4:
        raise ValidationError("fooling pairs support dim <= 4")
    if kind == "cube":
        if np.any((samples < 0.0) | (samples > 1.0)):
            raise ValidationError("cube fooling pairs need samples inside [0,1]^d")
        transport = None
        cube_samples = samples
    else:
        transport = TransportMap(dim)
        cube_samples = transport.forward(samples)

    gamma = gamma_policy(k, p, dim)
    smoothness = NormSpec.ck(k) if is_inf(q) else NormSpec.wkq(k, q)
    error_norm = NormSpec.lp(p)

    # sample count rounded up to a full m^d, then doubled for the bump budget
    n_round = _round_up_to_power(n_raw, dim)
    n_bumps = 2 * n_round
    m_min = max(1, math.ceil(n_bumps ** (1.0 / dim)))
    while m_min**dim < n_bumps:
        m_min += 1

    rng = rng or np.random.default_rng(0)

    chosen = None
    for m_sub in range(m_min, m_min + 12):
        partition = PartitionSpec(dim, m_sub)
        occupied = np.unique(partition.cell_of(cube_samples))
        for strategy in ("occupied-first", "avoid"):
            hosts = _host_cells(partition, occupied, n_bumps, strategy)
            if hosts is None:
                continue
            hosted_occupied = np.intersect1d(hosts, occupied).size
            n_unhit = n_bumps - hosted_occupied
            ratio_p = _predicted_ratio(gamma, p, dim, n_unhit, partition.n_cells)
            threshold = 1.0 if is_inf(p) else _SAFETY_RATIO
            if ratio_p >= threshold:
                chosen = (partition, hosts, strategy, ratio_p)
                break
        if chosen:
            break
    if chosen is None:
        raise InfeasibleError(
            f"no partition certifies the separation for n={n_raw}, k={k}, p={p!r}, dim={dim}"
        )
    partition, hosts, strategy, ratio_p = chosen

    family = BumpFamily(partition, gamma)
    if resolution is None:
        resolution = _default_resolution(dim, partition.subdivisions)

    alpha = np.where(rng.random(n_bumps) < 0.5, -1.0, 1.0)
    host_lookup = np.full(partition.n_cells, -1, dtype=np.int64)
    host_lookup[hosts] = np.arange(n_bumps)
    hit_map = host_lookup[partition.cell_of(cube_samples)]
    hit_bumps = np.unique(hit_map[hit_map >= 0])
    beta = alpha.copy()
    unhit_mask = np.ones(n_bumps, dtype=bool)
    unhit_mask[hit_bumps] = False
    beta[unhit_mask] = -alpha[unhit_mask]

    # ---- amplitude: closed-form seed, then bisection against measured norm
    big_gamma = gamma_constant(k, dim)
    count_factor = 1.0 if is_inf(q) else ((k + 1) * dim**k) ** (1.0 / q)
    seed_denom = count_factor * (1.0 - gamma) ** (-k) * big_gamma * partition.subdivisions**k
    h_estimate = 1.0
    if kind == "gaussian":
        h_estimate = _transport_derivative_amplification(family, hosts[0], k, transport, resolution)
        seed_denom *= h_estimate
    j_seed = 1.0 / seed_denom

    if kind == "cube":
        fields_f = _CubeFields(family, hosts, alpha, resolution)
    else:
        fields_f = _TransportedFields(family, hosts, alpha, resolution, transport)
    base_norm = _quadrature_norm(fields_f, smoothness, dim)

    if j_seed * base_norm <= 1.0:
        amplitude = j_seed
    else:
        lo, hi = 0.0, j_seed
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if mid * base_norm <= 1.0:
                lo = mid
            else:
                hi = mid
        amplitude = lo

    # ---- measured certificate quantities
    diff_coeffs = amplitude * (alpha - beta)  # 2J alpha on unhit cells, 0 elsewhere
    if kind == "cube":
        diff_fields = _CubeFields(family, hosts, diff_coeffs, resolution)
    else:
        diff_fields = _TransportedFields(family, hosts, diff_coeffs, resolution, transport)
    diff_field = diff_fields.field((0,) * dim)
    measured_sep = _quadrature_lp(diff_field, p, dim, resolution)
    gamma_power = 1.0 if is_inf(p) else gamma ** (dim / float(p))
    claimed = 2.0 * amplitude * gamma_power
    if measured_sep < claimed - 1e-6:
        raise InfeasibleError(
            f"measured separation {measured_sep:.3e} undercuts the certificate {claimed:.3e}"
        )

    norm_f = amplitude * base_norm
    f_at = amplitude * family.superposition(hosts, alpha, cube_samples)
    g_at = amplitude * family.superposition(hosts, beta, cube_samples)
    agreement = float(np.max(np.abs(f_at - g_at))) if n_raw else 0.0

    certificate = {
        "kind": kind,
        "k": k,
        "q": "inf" if is_inf(q) else q,
        "p": "inf" if is_inf(p) else p,
        "gamma": gamma,
        "J": amplitude,
        "n_samples": n_raw,
        "n_bumps": n_bumps,
        "subdivisions": partition.subdivisions,
        "strategy": strategy,
        "predicted_ratio_p": ratio_p,
        "claimed_separation": claimed,
        "measured_separation": measured_sep,
        "separation_margin": measured_sep - claimed,
        "smoothness_norm": norm_f,
        "norm_margin": 1.0 - norm_f,
        "agreement_max_abs_diff": agreement,
        "unhit_bumps": int(unhit_mask.sum()),
    }
    if kind == "gaussian":
        certificate["h_estimate"] = h_estimate

    return FoolingPair(
        kind=kind,
        family=family,
        hosts=hosts,
        alpha=alpha,
        beta=beta,
        hit_map=hit_map,
        samples=samples,
        amplitude=amplitude,
        smoothness=smoothness,
        error_norm=error_norm,
        resolution=resolution,
        certificate=certificate,
        transport=transport,
    )


def _transport_derivative_amplification(family, host, k, transport, resolution):
    """Empirical bound for sup|D^nu (phi o xi)| / sup|D^nu phi|, times 1.25.

    This is the weighted-norm constant the closed-form amplitude seed needs;
    it is never explicit in the theory, so it is estimated on the actual bump
    being used.  Soundness does not depend on it (the bisection against the
    measured weighted norm does the certifying), only seed quality.
    """
    from .grids import multi_indices

    dim = family.dim
    worst = 1.0
    plain = _CubeFields(family, [host], [1.0], resolution)
    moved = _TransportedFields(family, [host], [1.0], resolution, transport)
    for nu in multi_indices(dim, k):
        if sum(nu) == 0:
            continue
        denom = float(np.max(np.abs(plain.field(nu))))
        numer = float(np.max(np.abs(moved.field(nu))))
        if denom > 0:
            worst = max(worst, numer / denom)
    return 1.25 * worst


def fooling_pair(samples, k, q, p, rng=None, resolution=None) -> FoolingPair:
    """Cube fooling pair for samples in [0,1]^d (see module docstring)."""
    return _build_pair(samples, k, q, p, rng, resolution, "cube")


def gaussian_fooling_pair(samples, k, q, p, rng=None, resolution=None) -> FoolingPair:
    """Gaussian-ambient fooling pair for samples in R^d, via CDF transport."""
    return _build_pair(samples, k, q, p, rng, resolution, "gaussian")


# ---- weighted-norm cross-checks -------------------------------------------


def monte_carlo_weighted_lp(pair: FoolingPair, p, n_draws: int, rng) -> float:
    """MC estimate of ||f||_{L^p_rho} for a Gaussian pair (identity check)."""
    if pair.kind != "gaussian":
        raise ValidationError("Monte-Carlo weighted norm applies to Gaussian pairs")
    draws = rng.standard_normal((n_draws, pair.family.dim))
    vals = np.abs(pair.evaluate_f(draws))
    if is_inf(p):
        return float(np.max(vals))
    return float(np.mean(vals ** float(p))) ** (1.0 / float(p))


def transport_quadrature_lp(pair: FoolingPair, p) -> float:
    """||f||_{L^p_rho} via change of variables onto the cube grid."""
    if pair.kind != "gaussian":
        raise ValidationError("transport quadrature applies to Gaussian pairs")
    fields = _TransportedFields(
        pair.family, pair.hosts, pair.amplitude * pair.alpha, pair.resolution, pair.transport
    )
    return _quadrature_lp(fields.field((0,) * pair.family.dim), p, pair.family.dim, pair.resolution)


# ---- decoder zoo -----------------------------------------------------------


def decode_nearest(samples, values, grid: GridFunction) -> GridFunction:
    """Piecewise-constant reconstruction: nearest sample wins."""
    from scipy.spatial import cKDTree

    tree = cKDTree(np.atleast_2d(samples))
    _, idx = tree.query(grid.grid_points())
    vals = np.asarray(values, dtype=np.float64)[idx]
    return GridFunction(vals.reshape((1,) + grid.values.shape[1:]), grid.domain)


def decode_rbf(samples, values, grid: GridFunction) -> GridFunction:
    """Radial-basis reconstruction (Gaussian kernel, no polynomial tail)."""
    from scipy.interpolate import RBFInterpolator

    interp = RBFInterpolator(
        np.atleast_2d(samples), np.asarray(values, dtype=np.float64), kernel="gaussian",
        epsilon=4.0, degree=-1,
    )
    vals = interp(grid.grid_points())
    return GridFunction(vals.reshape((1,) + grid.values.shape[1:]), grid.domain)


def decode_fno(samples, values, grid: GridFunction, rng=None) -> GridFunction:
    """Reconstruction by a small trained Fourier neural operator."""
    from .erm import fit_pointdata_fno

    return fit_pointdata_fno(samples, values, grid, rng=rng)


DECODER_ZOO = {
    "nearest": decode_nearest,
    "rbf": decode_rbf,
    "fno": decode_fno,
}


def witness_errors(pair: FoolingPair, decoded: GridFunction):
    """(err_f, err_g) of a reconstruction, in the pair's error norm."""
    from .grids import lp_distance

    err_f = lp_distance(pair.f_grid(), decoded, pair.error_norm)
    err_g = lp_distance(pair.g_grid(), decoded, pair.error_norm)
    return err_f, err_g


def separation_slope(k, q, p, dim, subdivision_range=(2, 3, 4, 5, 6), rng=None, resolution=None):
    """Certified separation vs sample count across n = m^d; fits the log-log slope."""
    rng = rng or np.random.default_rng(0)
    rows = []
    for m in subdivision_range:
        n = m**dim
        samples = rng.random((n, dim))
        pair = fooling_pair(samples, k, q, p, rng=rng, resolution=resolution)
        rows.append(
            {
                "n_samples": n,
                "claimed_separation": pair.certificate["claimed_separation"],
                "measured_separation": pair.certificate["measured_separation"],
                "J": pair.amplitude,
            }
        )
    ns = np.array([r["n_samples"] for r in rows], dtype=np.float64)
    seps = np.array([r["claimed_separation"] for r in rows])
    slope = float(np.polyfit(np.log(ns), np.log(seps), 1)[0])
    return {"rows": rows, "slope": slope, "expected_slope": -k / dim}
