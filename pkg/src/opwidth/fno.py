"""Fourier neural operator: configuration, forward pass, exact gradients.

The operator is Psi(u) = Q . L_L . ... . L_1 . P(u) with hidden layers

    L(v)(x) = sigma( W v(x) + (K v)(x) + b(x) ),

where K is a spectral convolution — forward FFT, multiplication by a complex
matrix P-hat_k on every retained mode |k|_inf < kappa, zeroing of all other
modes, inverse FFT — and the bias field b(x) is synthesized from complex
coefficients b-hat_k on the same retained modes.  P and Q are plain linear
channel maps (no affine part, no coordinate features).

Multipliers and bias coefficients carry the Hermitian symmetry
P-hat_{-k} = conj(P-hat_k), b-hat_{-k} = conj(b-hat_k), so real inputs
produce real fields; the imaginary residue of every inverse FFT is asserted
below 1e-10 (relative to the field magnitude) and discarded.  Free real
parameters are counted accordingly: each retained mode contributes exactly
one real degree of freedom per complex entry once the conjugate pairing is
accounted for, which keeps the exact count under the printed bound
5 (2 kappa)^d L d_c^2.

Gradients of the empirical risk (mean squared L^2 distance over a dataset,
plus an optional hinge penalty on output norms above 2) are computed by a
hand-written reverse pass: FFT adjoints are inverse FFTs with conjugate
multipliers, and gradients of conjugate-tied coefficients are folded onto
the free representative (g_free = g_k + conj(g_{-k})).
"""

import math
import struct
import zlib
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _iterproduct

import numpy as np

from .errors import FormatError, ValidationError
from .grids import GridFunction

_IMAG_TOL = 1e-10


# ---- activations -------------------------------------------------------------


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@lru_cache(maxsize=None)
def gate_lipschitz_constant() -> float:
    """sup |d/dx x*sigmoid(x)|, by dense scan; rescaling by it makes the gate 1-Lipschitz."""
    xs = np.linspace(-20.0, 20.0, 2_000_001)
    s = _sigmoid(xs)
    return float(np.max(np.abs(s * (1.0 + xs * (1.0 - s)))))


def _gate(x):
    return x * _sigmoid(x) / gate_lipschitz_constant()


def _gate_prime(x):
    s = _sigmoid(x)
    return s * (1.0 + x * (1.0 - s)) / gate_lipschitz_constant()


ACTIVATIONS = {
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x: (x > 0.0).astype(np.float64)),
    "gate": (_gate, _gate_prime),
}


# ---- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class FnoConfig:
    dim: int
    d_in: int
    d_out: int
    d_c: int
    kappa: int
    depth: int
    resolution: int
    bound: float = 1.0
    activation: str = "gate"

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise ValidationError(f"domain dimension must be in 1..3, got {self.dim}")
        for name in ("d_in", "d_out", "d_c", "kappa", "depth"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValidationError(f"{name} must be a positive int, got {v!r}")
        if self.d_in > self.d_c or self.d_out > self.d_c:
            raise ValidationError("hidden width d_c must be >= d_in and d_out")
        n = self.resolution
        if not (isinstance(n, int) and n >= 8 and (n & (n - 1)) == 0):
            raise ValidationError(f"resolution must be a power of two >= 8, got {n!r}")
        if self.kappa > n // 2:
            raise ValidationError(f"cut-off {self.kappa} aliases at resolution {n}")
        if not self.bound >= 1.0:
            raise ValidationError(f"parameter bound must be >= 1, got {self.bound}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")

    @property
    def n_modes(self) -> int:
        return (2 * self.kappa - 1) ** self.dim


@lru_cache(maxsize=None)
def mode_table(kappa: int, dim: int):
    """Canonical retained-mode table shared by the forward pass and the audits.

    Modes run over the integer box |k|_inf < kappa in lexicographic order.
    Returns (modes, conj_index, free_mask) where conj_index[i] locates -k and
    free_mask[i] is True for the canonical representative of each conjugate
    pair (k = 0, or first nonzero component positive).
    """
    rng = range(-(kappa - 1), kappa)
    modes = list(_iterproduct(rng, repeat=dim))
    index = {k: i for i, k in enumerate(modes)}
    conj_index = np.array([index[tuple(-c for c in k)] for k in modes], dtype=np.int64)
    free = []
    for k in modes:
        nz = next((c for c in k if c != 0), 0)
        free.append(nz >= 0)
    return tuple(modes), conj_index, np.array(free)


@lru_cache(maxsize=None)
def _mode_bins(kappa: int, dim: int, resolution: int):
    """FFT array indices of each retained mode (negative k wraps mod N)."""
    modes, _, _ = mode_table(kappa, dim)
    return tuple(
        np.array([k[axis] % resolution for k in modes], dtype=np.int64) for axis in range(dim)
    )


def param_count(config: FnoConfig):
    """(exact free real parameters, printed bound 5 (2 kappa)^d L d_c^2)."""
    n_modes = config.n_modes
    d_c = config.d_c
    exact = (
        d_c * config.d_in
        + config.depth * (d_c * d_c + n_modes * d_c * d_c + n_modes * d_c)
        + config.d_out * d_c
    )
    bound = 5 * (2 * config.kappa) ** config.dim * config.depth * d_c * d_c
    return exact, bound


# ---- parameters ---------------------------------------------------------------


class FnoParams:
    """Parameter bundle: lift, per-layer (W, P-hat, b-hat), projection.

    P-hat arrays have shape (n_modes, d_c, d_c) and b-hat (n_modes, d_c),
    in the canonical mode order of ``mode_table``; both always satisfy the
    Hermitian pairing (``resymmetrize`` restores it after raw edits).
    """

    def __init__(self, config: FnoConfig, lift, spectral, pointwise, biases, proj):
        self.config = config
        self.lift = np.asarray(lift, dtype=np.float64)
        self.spectral = [np.asarray(a, dtype=np.complex128) for a in spectral]
        self.pointwise = [np.asarray(a, dtype=np.float64) for a in pointwise]
        self.biases = [np.asarray(a, dtype=np.complex128) for a in biases]
        self.proj = np.asarray(proj, dtype=np.float64)
        self._check_shapes()

    def _check_shapes(self):
        c = self.config
        if self.lift.shape != (c.d_c, c.d_in):
            raise ValidationError(f"lift shape {self.lift.shape} != {(c.d_c, c.d_in)}")
        if self.proj.shape != (c.d_out, c.d_c):
            raise ValidationError(f"projection shape {self.proj.shape} != {(c.d_out, c.d_c)}")
        if not (len(self.spectral) == len(self.pointwise) == len(self.biases) == c.depth):
            raise ValidationError("layer count does not match the configured depth")
        for ell in range(c.depth):
            if self.pointwise[ell].shape != (c.d_c, c.d_c):
                raise ValidationError(f"layer {ell}: W shape {self.pointwise[ell].shape}")
            if self.spectral[ell].shape != (c.n_modes, c.d_c, c.d_c):
                raise ValidationError(f"layer {ell}: multiplier shape {self.spectral[ell].shape}")
            if self.biases[ell].shape != (c.n_modes, c.d_c):
                raise ValidationError(f"layer {ell}: bias shape {self.biases[ell].shape}")

    # ---- constructors ----

    @classmethod
    def zeros(cls, config: FnoConfig) -> "FnoParams":
        L, M, d_c = config.depth, config.n_modes, config.d_c
        return cls(
            config,
            np.zeros((d_c, config.d_in)),
            [np.zeros((M, d_c, d_c), dtype=np.complex128) for _ in range(L)],
            [np.zeros((d_c, d_c)) for _ in range(L)],
            [np.zeros((M, d_c), dtype=np.complex128) for _ in range(L)],
            np.zeros((config.d_out, d_c)),
        )

    @classmethod
    def random(cls, config: FnoConfig, rng, scale: float = 0.5) -> "FnoParams":
        """Uniform(-scale, scale) entries, Hermitian-symmetrized."""
        L, M, d_c = config.depth, config.n_modes, config.d_c

        def u(*shape):
            return rng.uniform(-scale, scale, shape)

        params = cls(
            config,
            u(d_c, config.d_in),
            [u(M, d_c, d_c) + 1j * u(M, d_c, d_c) for _ in range(L)],
            [u(d_c, d_c) for _ in range(L)],
            [u(M, d_c) + 1j * u(M, d_c) for _ in range(L)],
            u(config.d_out, d_c),
        )
        params.resymmetrize()
        return params

    def copy(self) -> "FnoParams":
        return FnoParams(
            self.config,
            self.lift.copy(),
            [a.copy() for a in self.spectral],
            [a.copy() for a in self.pointwise],
            [a.copy() for a in self.biases],
            self.proj.copy(),
        )

    # ---- Hermitian structure ----

    def resymmetrize(self) -> "FnoParams":
        """Overwrite each conjugate pair with the Hermitian average; k=0 made real."""
        _, conj_index, free = mode_table(self.config.kappa, self.config.dim)
        for arrs in (self.spectral, self.biases):
            for a in arrs:
                paired = 0.5 * (a[free] + np.conj(a[conj_index[free]]))
                a[free] = paired
                a[conj_index[free]] = np.conj(paired)
        return self

    def hermitian_defect(self) -> float:
        _, conj_index, _ = mode_table(self.config.kappa, self.config.dim)
        worst = 0.0
        for arrs in (self.spectral, self.biases):
            for a in arrs:
                worst = max(worst, float(np.max(np.abs(a - np.conj(a[conj_index])))))
        return worst

    def sup_norm(self) -> float:
        worst = float(np.max(np.abs(self.lift))) if self.lift.size else 0.0
        worst = max(worst, float(np.max(np.abs(self.proj))))
        for ell in range(self.config.depth):
            worst = max(worst, float(np.max(np.abs(self.pointwise[ell]))))
            for a in (self.spectral[ell], self.biases[ell]):
                worst = max(worst, float(np.max(np.abs(a.real))), float(np.max(np.abs(a.imag))))
        return worst

    # ---- flat view over free real components ----

    def _free_blocks(self):
        """Yield (array, selector, part) for every free real block, in order."""
        _, _, free = mode_table(self.config.kappa, self.config.dim)
        modes, _, _ = mode_table(self.config.kappa, self.config.dim)
        zero_idx = modes.index((0,) * self.config.dim)
        yield ("real_array", self.lift)
        for ell in range(self.config.depth):
            yield ("real_array", self.pointwise[ell])
            yield ("complex_array", self.spectral[ell], free, zero_idx)
            yield ("complex_array", self.biases[ell], free, zero_idx)
        yield ("real_array", self.proj)

    def to_vector(self) -> np.ndarray:
        chunks = []
        for block in self._free_blocks():
            if block[0] == "real_array":
                chunks.append(block[1].ravel())
            else:
                _, arr, free, zero_idx = block
                for i in np.flatnonzero(free):
                    chunks.append(arr[i].real.ravel())
                    if i != zero_idx:
                        chunks.append(arr[i].imag.ravel())
        return np.concatenate(chunks)

    def from_vector(self, vec) -> "FnoParams":
        """Overwrite free components from a flat vector (tied entries follow)."""
        vec = np.asarray(vec, dtype=np.float64)
        expected, _ = param_count(self.config)
        if vec.shape != (expected,):
            raise ValidationError(f"expected vector of length {expected}, got {vec.shape}")
        _, conj_index, _ = mode_table(self.config.kappa, self.config.dim)
        pos = 0

        def take(shape):
            nonlocal pos
            size = int(np.prod(shape))
            out = vec[pos : pos + size].reshape(shape)
            pos += size
            return out

        for block in self._free_blocks():
            if block[0] == "real_array":
                block[1][...] = take(block[1].shape)
            else:
                _, arr, free, zero_idx = block
                for i in np.flatnonzero(free):
                    re = take(arr[i].shape)
                    im = np.zeros_like(re) if i == zero_idx else take(arr[i].shape)
                    arr[i] = re + 1j * im
                    arr[conj_index[i]] = re - 1j * im
        return self


# ---- forward pass -------------------------------------------------------------


def _assert_real(arr, where: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(arr.real))) if arr.size else 0.0)
    residue = float(np.max(np.abs(arr.imag))) if arr.size else 0.0
    if residue > _IMAG_TOL * scale:
        raise ValidationError(f"{where}: imaginary residue {residue:.3e} exceeds tolerance")
    return np.ascontiguousarray(arr.real)


def _check_finite(arr, where: str):
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{where}: non-finite values encountered")


def _bias_field(bhat, bins, resolution, dim):
    """b(x) = sum_k b-hat_k e^{2 pi i k.x}: embed coefficients, scaled inverse FFT."""
    d_c = bhat.shape[1]
    spread = np.zeros((d_c,) + (resolution,) * dim, dtype=np.complex128)
    spread[(slice(None),) + bins] = bhat.T
    field = np.fft.ifftn(spread, axes=tuple(range(1, dim + 1))) * resolution**dim
    return _assert_real(field, "bias synthesis")


def _forward_batch(params: FnoParams, batch: np.ndarray, tape=None) -> np.ndarray:
    """Evaluate the operator on a stack of inputs (n, d_in, N, ..., N)."""
    c = params.config
    dim, n_grid = c.dim, c.resolution
    axes = tuple(range(2, 2 + dim))
    bins = _mode_bins(c.kappa, dim, n_grid)
    gather = (slice(None), slice(None)) + bins
    act, _ = ACTIVATIONS[c.activation]

    v = np.einsum("ci,ni...->nc...", params.lift, batch)
    if tape is not None:
        tape["lift_in"] = batch
    for ell in range(c.depth):
        _check_finite(v, f"layer {ell}: input")
        vhat = np.fft.fftn(v, axes=axes)
        gathered = vhat[gather]  # (n, d_c, M)
        s = np.einsum("mij,njm->nim", params.spectral[ell], gathered)
        spread = np.zeros_like(vhat)
        spread[gather] = s
        conv = _assert_real(np.fft.ifftn(spread, axes=axes), f"layer {ell}: spectral block")
        bias = _bias_field(params.biases[ell], bins, n_grid, dim)
        z = np.einsum("dc,nc...->nd...", params.pointwise[ell], v) + conv + bias[None]
        _check_finite(z, f"layer {ell}: pre-activation")
        if tape is not None:
            tape.setdefault("layers", []).append({"v_in": v, "gathered": gathered, "z": z})
        v = act(z)
    out = np.einsum("oc,nc...->no...", params.proj, v)
    _check_finite(out, "projection")
    if tape is not None:
        tape["v_last"] = v
    return out


def forward(params: FnoParams, u: GridFunction, return_hidden: bool = False):
    """Psi(u) as a GridFunction; optionally also the per-layer hidden fields."""
    c = params.config
    if u.values.shape != (c.d_in,) + (c.resolution,) * c.dim:
        raise ValidationError(
            f"input shape {u.values.shape} does not match config "
            f"({c.d_in} channels at resolution {c.resolution}^{c.dim})"
        )
    if u.domain != "cube-periodic":
        raise ValidationError("the operator acts on cube-periodic grid functions")
    tape = {} if return_hidden else None
    out = _forward_batch(params, u.values[None], tape)
    result = GridFunction(out[0], "cube-periodic")
    if return_hidden:
        act, _ = ACTIVATIONS[c.activation]
        hidden = [tape["layers"][0]["v_in"][0]]  # the lifted field
        hidden += [act(layer["z"])[0] for layer in tape["layers"]]
        return result, hidden
    return result


def forward_batch(params: FnoParams, fields) -> np.ndarray:
    """Apply the operator to many input fields in one pass.

    Returns the stacked output values, shape ``(len(fields), d_out, N, ..., N)``.
    """
    c = params.config
    U = np.stack([f.values if isinstance(f, GridFunction) else np.asarray(f) for f in fields])
    if U.shape[1:] != (c.d_in,) + (c.resolution,) * c.dim:
        raise ValidationError(f"input batch shape {U.shape} does not match the config")
    return _forward_batch(params, U)


# ---- empirical risk and gradients ---------------------------------------------


def _as_batch(dataset, config: FnoConfig):
    us, ys = [], []
    for u, y in dataset:
        uv = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=np.float64)
        yv = y.values if isinstance(y, GridFunction) else np.asarray(y, dtype=np.float64)
        us.append(uv)
        ys.append(yv)
    U = np.stack(us)
    Y = np.stack(ys)
    if U.shape[1:] != (config.d_in,) + (config.resolution,) * config.dim:
        raise ValidationError(f"input batch shape {U.shape} does not match the config")
    if Y.shape[1:] != (config.d_out,) + (config.resolution,) * config.dim:
        raise ValidationError(f"target batch shape {Y.shape} does not match the config")
    return U, Y


def _l2_sq(field, cellw) -> float:
    return float(np.sum(field * field)) * cellw


def empirical_risk(params: FnoParams, dataset, omega: float = 0.0) -> float:
    """(1/n) sum_j ||Psi(u_j) - y_j||_{L^2}^2 + omega sum_j (||Psi(u_j)|| - 2)_+^2.

    Per-sample terms are accumulated in dataset order so the value is
    bit-reproducible.
    """
    if len(dataset) == 0:
        raise ValidationError("empirical risk needs a nonempty dataset")
    c = params.config
    U, Y = _as_batch(dataset, c)
    out = _forward_batch(params, U)
    cellw = float(c.resolution) ** (-c.dim)
    n = len(dataset)
    risk = 0.0
    for j in range(n):
        risk += _l2_sq(out[j] - Y[j], cellw) / n
    if omega:
        for j in range(n):
            r = math.sqrt(_l2_sq(out[j], cellw))
            risk += omega * max(0.0, r - 2.0) ** 2
    if not math.isfinite(risk):
        raise ValidationError("empirical risk is non-finite")
    return risk


def _fold_conjugate(full, conj_index, free, zero_idx):
    """Collapse gradients of tied coefficients onto the free representative."""
    out = np.zeros_like(full)
    for i in np.flatnonzero(free):
        j = conj_index[i]
        if i == zero_idx:
            out[i] = full[i].real + 0.0j
        else:
            folded = full[i] + np.conj(full[j])
            out[i] = folded
            out[j] = np.conj(folded)
    return out


def grad_empirical_risk(params: FnoParams, dataset, omega: float = 0.0):
    """(risk, gradient) with the gradient stored as an FnoParams of the same shape.

    Conjugate-tied coefficient gradients are folded onto the free
    representative (and mirrored), so ``grad.to_vector()`` is exactly the
    gradient with respect to ``params.to_vector()``.
    """
    if len(dataset) == 0:
        raise ValidationError("empirical risk needs a nonempty dataset")
    c = params.config
    U, Y = _as_batch(dataset, c)
    dim, n_grid = c.dim, c.resolution
    axes = tuple(range(2, 2 + dim))
    bins = _mode_bins(c.kappa, dim, n_grid)
    gather = (slice(None), slice(None)) + bins
    cellw = float(n_grid) ** (-dim)
    n = len(dataset)
    _, act_prime = ACTIVATIONS[c.activation]
    modes, conj_index, free = mode_table(c.kappa, dim)
    zero_idx = modes.index((0,) * dim)

    tape = {}
    out = _forward_batch(params, U, tape)

    risk = 0.0
    for j in range(n):
        risk += _l2_sq(out[j] - Y[j], cellw) / n
    norms = np.sqrt(np.maximum([_l2_sq(out[j], cellw) for j in range(n)], 0.0))
    if omega:
        for j in range(n):
            risk += omega * max(0.0, norms[j] - 2.0) ** 2
    if not math.isfinite(risk):
        raise ValidationError("empirical risk is non-finite")

    dout = (2.0 * cellw / n) * (out - Y)
    if omega:
        for j in range(n):
            excess = norms[j] - 2.0
            if excess > 0.0 and norms[j] > 0.0:
                dout[j] += omega * 2.0 * excess * cellw * out[j] / norms[j]

    def _channel_outer(a, b):
        # sum_{j,x} a[j,:,x] outer b[j,:,x] with the spatial axes flattened
        return np.einsum("nax,nbx->ab", a.reshape(a.shape[:2] + (-1,)), b.reshape(b.shape[:2] + (-1,)))

    grad = FnoParams.zeros(c)
    v_last = tape["v_last"]
    grad.proj[...] = _channel_outer(dout, v_last)
    dv = np.einsum("oc,no...->nc...", params.proj, dout)

    for ell in reversed(range(c.depth)):
        layer = tape["layers"][ell]
        dz = dv * act_prime(layer["z"])
        grad.pointwise[ell][...] = _channel_outer(dz, layer["v_in"])
        dbias_full = np.fft.fftn(dz.sum(axis=0), axes=tuple(range(1, dim + 1)))
        dbias = dbias_full[(slice(None),) + bins].T  # (M, d_c)
        grad.biases[ell][...] = _fold_conjugate(dbias, conj_index, free, zero_idx)
        ds = np.fft.fftn(dz, axes=axes)[gather] / float(n_grid**dim)
        grad.spectral[ell][...] = _fold_conjugate(
            np.einsum("nim,njm->mij", ds, np.conj(layer["gathered"])),
            conj_index,
            free,
            zero_idx,
        )
        dghat = np.einsum("mij,nim->njm", np.conj(params.spectral[ell]), ds)
        spread = np.zeros((len(dataset), c.d_c) + (n_grid,) * dim, dtype=np.complex128)
        spread[gather] = dghat
        dv_spec = (np.fft.ifftn(spread, axes=axes) * float(n_grid**dim)).real
        dv = np.einsum("dc,nd...->nc...", params.pointwise[ell], dz) + dv_spec

    grad.lift[...] = _channel_outer(dv, tape["lift_in"])
    return risk, grad


def project_params(params: FnoParams, bound: float) -> FnoParams:
    """Clamp every real/imaginary component to [-bound, bound]; re-symmetrize.

    Clamping acts symmetrically on conjugate pairs, so re-symmetrizing is a
    no-op on already-Hermitian input and the projection is idempotent.
    """
    out = params.copy()
    np.clip(out.lift, -bound, bound, out=out.lift)
    np.clip(out.proj, -bound, bound, out=out.proj)
    for ell in range(out.config.depth):
        np.clip(out.pointwise[ell], -bound, bound, out=out.pointwise[ell])
        for arr in (out.spectral[ell], out.biases[ell]):
            arr.real = np.clip(arr.real, -bound, bound)
            arr.imag = np.clip(arr.imag, -bound, bound)
    out.resymmetrize()
    return out


# ---- the architecture classes Sigma_m ------------------------------------------


@dataclass(frozen=True)
class SigmaMClass:
    """Psi in Sigma_m iff kappa^d <= m, d_c <= m, L <= m, and |theta|_inf <= B <= e^m.

    ``output_bounded`` checks the additional constraint of the primed class:
    ||Psi(u)||_{L^2} <= 2 on a probe set of inputs.
    """

    m: int

    def __post_init__(self):
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ValidationError(f"class index m must be a positive int, got {self.m!r}")

    @property
    def bound_cap(self) -> float:
        return math.exp(min(self.m, 700))

    def admissible_shapes(self, dim: int = 1):
        """All (kappa, d_c, L) triples with kappa^dim <= m, d_c <= m, L <= m."""
        out = []
        kappa = 1
        while kappa**dim <= self.m:
            for d_c in range(1, self.m + 1):
                for depth in range(1, self.m + 1):
                    out.append((kappa, d_c, depth))
            kappa += 1
        return out

    def membership(self, params: FnoParams, tol: float = 1e-12) -> bool:
        c = params.config
        return (
            c.kappa**c.dim <= self.m
            and c.d_c <= self.m
            and c.depth <= self.m
            and c.bound <= self.bound_cap * (1.0 + tol)
            and params.sup_norm() <= c.bound * (1.0 + tol)
        )

    def output_bounded(self, params: FnoParams, probes, tol: float = 0.0) -> bool:
        c = params.config
        cellw = float(c.resolution) ** (-c.dim)
        for u in probes:
            out = _forward_batch(params, (u.values if isinstance(u, GridFunction) else u)[None])
            if math.sqrt(_l2_sq(out[0], cellw)) > 2.0 + tol:
                return False
        return True


# ---- serialization --------------------------------------------------------------

_FNO_MAGIC = b"OPWFNO1\x00"
_FNO_HEADER = struct.Struct("<8s7IdIQ")  # magic, dims..., bound, activation id, payload len
_ACTIVATION_IDS = {name: i for i, name in enumerate(sorted(ACTIVATIONS))}
_ACTIVATION_NAMES = {i: name for name, i in _ACTIVATION_IDS.items()}


def serialize(params: FnoParams) -> bytes:
    """OPWFNO1 byte stream: header, canonical float64 payload, CRC32 trailer.

    Payload order: P, then per layer W / P-hat real / P-hat imag /
    b-hat real / b-hat imag, then Q — full arrays in C order, little-endian.
    """
    c = params.config
    chunks = [params.lift]
    for ell in range(c.depth):
        chunks += [
            params.pointwise[ell],
            params.spectral[ell].real,
            params.spectral[ell].imag,
            params.biases[ell].real,
            params.biases[ell].imag,
        ]
    chunks.append(params.proj)
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in chunks)
    header = _FNO_HEADER.pack(
        _FNO_MAGIC,
        c.dim,
        c.d_in,
        c.d_out,
        c.d_c,
        c.kappa,
        c.depth,
        c.resolution,
        c.bound,
        _ACTIVATION_IDS[c.activation],
        len(payload),
    )
    body = header + payload
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize(data: bytes, expected_config: FnoConfig = None) -> FnoParams:
    if len(data) < _FNO_HEADER.size + 4:
        raise FormatError("parameter stream truncated before the header completes")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError("parameter stream checksum mismatch (corrupt or truncated)")
    magic, dim, d_in, d_out, d_c, kappa, depth, resolution, bound, act_id, payload_len = (
        _FNO_HEADER.unpack(body[: _FNO_HEADER.size])
    )
    if magic != _FNO_MAGIC:
        raise FormatError(f"bad magic {magic!r}; not an operator parameter stream")
    if act_id not in _ACTIVATION_NAMES:
        raise FormatError(f"unknown activation id {act_id}")
    payload = body[_FNO_HEADER.size :]
    if len(payload) != payload_len:
        raise FormatError(
            f"payload length {len(payload)} does not match the declared {payload_len}"
        )
    config = FnoConfig(
        dim=dim,
        d_in=d_in,
        d_out=d_out,
        d_c=d_c,
        kappa=kappa,
        depth=depth,
        resolution=resolution,
        bound=bound,
        activation=_ACTIVATION_NAMES[act_id],
    )
    if expected_config is not None and config != expected_config:
        raise FormatError("stored configuration does not match the expected one")

    M = config.n_modes
    counts = [d_c * d_in]
    for _ in range(depth):
        counts += [d_c * d_c, M * d_c * d_c, M * d_c * d_c, M * d_c, M * d_c]
    counts.append(d_out * d_c)
    if payload_len != 8 * sum(counts):
        raise FormatError("payload size does not match the configured shapes")

    flat = np.frombuffer(payload, dtype="<f8")
    pos = 0

    def take(size, shape):
        nonlocal pos
        out = flat[pos : pos + size].reshape(shape).astype(np.float64)
        pos += size
        return out

    def take_complex(size, shape):
        # assign through the real/imag views: preserves signed zeros bit-exactly
        z = np.empty(shape, dtype=np.complex128)
        z.real = take(size, shape)
        z.imag = take(size, shape)
        return z

    lift = take(d_c * d_in, (d_c, d_in))
    spectral, pointwise, biases = [], [], []
    for _ in range(depth):
        pointwise.append(take(d_c * d_c, (d_c, d_c)))
        spectral.append(take_complex(M * d_c * d_c, (M, d_c, d_c)))
        biases.append(take_complex(M * d_c, (M, d_c)))
    proj = take(d_out * d_c, (d_out, d_c))
    params = FnoParams(config, lift, spectral, pointwise, biases, proj)
    if params.hermitian_defect() > 1e-9:
        raise FormatError("stored multipliers violate the Hermitian pairing")
    return params
