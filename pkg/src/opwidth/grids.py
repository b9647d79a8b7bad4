"""Grid-sampled functions, their norms, and finite differences.

A :class:`GridFunction` is a vector-valued function sampled on a uniform
tensor grid.  Two domains are supported:

* ``cube-periodic``  — the unit cube [0,1)^d with grid ``x_i = i/N`` (no
  duplicated endpoint; functions are treated as 1-periodic per axis).
* ``gaussian-ambient`` — the truncated box [-R, R)^d with the standard
  Gaussian weight ``rho_d``.  R = 6, which discards < 1e-8 of the Gaussian
  mass per axis.

Values are stored channel-major, ``values[c, i_0, ..., i_{d-1}]``, in C
(row-major) order.  The binary format serializes exactly that layout.

Norms are Riemann sums (weighted by the Gaussian density on the ambient
domain) for finite p, grid maxima for the sup-type norms, and use centered
second-order finite differences for the Sobolev/C^k scales (periodic wrap on
the cube, one-sided second-order stencils at the ambient box edges).
"""

import enum
import json
import struct
import zlib
from dataclasses import dataclass
from itertools import product as _iterproduct

import numpy as np

from .errors import FormatError, ValidationError

AMBIENT_RADIUS = 6.0

_MAGIC = b"OPWGRID1"
_HEADER = struct.Struct("<8sBBHIQ")  # magic, dim, channels, domain tag, N, payload bytes
_DOMAIN_TAGS = {"cube-periodic": 0, "gaussian-ambient": 1}
_TAG_DOMAINS = {v: k for k, v in _DOMAIN_TAGS.items()}


class Extent(enum.Enum):
    """Sentinel for infinite integrability exponents (never float('inf'))."""

    INFINITY = "inf"


INF = Extent.INFINITY


def is_inf(p) -> bool:
    return isinstance(p, Extent)


def _check_exponent(p, name="p"):
    if is_inf(p):
        return
    if not (isinstance(p, (int, float)) and np.isfinite(p) and p >= 1):
        raise ValidationError(f"{name} must be a finite number >= 1 or INF, got {p!r}")


@dataclass(frozen=True)
class NormSpec:
    """Which norm to evaluate: Lp(p), Wkq(k, q), Ck(k), or L2mu."""

    kind: str
    p: object = None
    k: int = 0
    q: object = None

    @classmethod
    def lp(cls, p):
        _check_exponent(p)
        return cls(kind="lp", p=p)

    @classmethod
    def wkq(cls, k, q):
        if not (isinstance(k, int) and 0 <= k <= 4):
            raise ValidationError(f"derivative order k must be an int in 0..4, got {k!r}")
        _check_exponent(q, "q")
        return cls(kind="wkq", k=k, q=q)

    @classmethod
    def ck(cls, k):
        if not (isinstance(k, int) and 0 <= k <= 4):
            raise ValidationError(f"derivative order k must be an int in 0..4, got {k!r}")
        return cls(kind="ck", k=k)

    @classmethod
    def l2mu(cls):
        return cls(kind="l2mu")

    def describe(self) -> str:
        if self.kind == "lp":
            return "Linf" if is_inf(self.p) else f"L{self.p:g}"
        if self.kind == "wkq":
            q = "inf" if is_inf(self.q) else f"{self.q:g}"
            return f"W{self.k},{q}"
        if self.kind == "ck":
            return f"C{self.k}"
        return "L2mu"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class GridFunction:
    """Samples of a function on the uniform grid of one of the two domains."""

    values: np.ndarray
    domain: str = "cube-periodic"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.domain not in _DOMAIN_TAGS:
            raise ValidationError(f"unknown domain tag {self.domain!r}")
        if self.values.ndim < 2:
            raise ValidationError("values must have shape (channels, N, ..., N)")
        n = self.values.shape[1]
        if any(s != n for s in self.values.shape[1:]):
            raise ValidationError(f"anisotropic grids unsupported, got shape {self.values.shape}")
        if not _is_power_of_two(n):
            raise ValidationError(f"resolution must be a power of two, got {n}")
        if self.values.shape[0] < 1:
            raise ValidationError("need at least one channel")

    # ---- basic geometry -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.ndim - 1

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def resolution(self) -> int:
        return self.values.shape[1]

    def axis_points(self) -> np.ndarray:
        n = self.resolution
        if self.domain == "cube-periodic":
            return np.arange(n) / n
        h = 2.0 * AMBIENT_RADIUS / n
        return -AMBIENT_RADIUS + h * np.arange(n)

    def spacing(self) -> float:
        if self.domain == "cube-periodic":
            return 1.0 / self.resolution
        return 2.0 * AMBIENT_RADIUS / self.resolution

    def grid_points(self) -> np.ndarray:
        """All grid nodes as an (N^d, d) array, row-major."""
        ax = self.axis_points()
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @classmethod
    def from_callable(cls, fn, dim, resolution, channels=1, domain="cube-periodic"):
        probe = cls(np.zeros((1,) + (resolution,) * dim), domain)
        pts = probe.grid_points()
        vals = np.asarray(fn(pts), dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape != (len(pts), channels):
            raise ValidationError(
                f"callable returned shape {vals.shape}, expected ({len(pts)}, {channels})"
            )
        arr = vals.T.reshape((channels,) + (resolution,) * dim)
        return cls(arr, domain)

    def copy(self):
        return GridFunction(self.values.copy(), self.domain)

    # ---- quadrature weights ---------------------------------------------

    def _weights(self) -> np.ndarray:
        """Per-node quadrature weight; scalar broadcast for the cube."""
        if self.domain == "cube-periodic":
            return np.float64(self.resolution ** (-self.dim))
        ax = self.axis_points()
        pdf = np.exp(-0.5 * ax * ax) / np.sqrt(2.0 * np.pi)
        w = pdf
        for _ in range(self.dim - 1):
            w = np.multiply.outer(w, pdf)
        return w * self.spacing() ** self.dim


def multi_indices(dim: int, max_order: int):
    """All derivative multi-indices nu with |nu|_1 <= max_order."""
    out = []
    for nu in _iterproduct(range(max_order + 1), repeat=dim):
        if sum(nu) <= max_order:
            out.append(nu)
    out.sort(key=lambda nu: (sum(nu), nu))
    return out


def _axis_derivative(arr: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    """Centered second-order first derivative along one axis."""
    fwd = np.roll(arr, -1, axis=axis)
    bwd = np.roll(arr, 1, axis=axis)
    out = (fwd - bwd) / (2.0 * h)
    if not periodic:
        # one-sided second-order stencils at the box edges
        first = [slice(None)] * arr.ndim
        f0, f1, f2 = list(first), list(first), list(first)
        f0[axis], f1[axis], f2[axis] = 0, 1, 2
        l0, l1, l2 = list(first), list(first), list(first)
        l0[axis], l1[axis], l2[axis] = -1, -2, -3
        out[tuple(f0)] = (-3.0 * arr[tuple(f0)] + 4.0 * arr[tuple(f1)] - arr[tuple(f2)]) / (2.0 * h)
        out[tuple(l0)] = (3.0 * arr[tuple(l0)] - 4.0 * arr[tuple(l1)] + arr[tuple(l2)]) / (2.0 * h)
    return out


def finite_diff_derivative(f: GridFunction, nu) -> GridFunction:
    """D^nu f by repeated centered differences (order |nu|_1 <= 4, N >= 8)."""
    nu = tuple(int(v) for v in nu)
    if len(nu) != f.dim:
        raise ValidationError(f"multi-index length {len(nu)} != dim {f.dim}")
    if any(v < 0 for v in nu) or sum(nu) > 4:
        raise ValidationError(f"multi-index {nu} outside supported range |nu|_1 <= 4")
    if f.resolution < 8:
        raise ValidationError("finite differences need resolution >= 8")
    periodic = f.domain == "cube-periodic"
    h = f.spacing()
    arr = f.values
    for axis, order in enumerate(nu):
        for _ in range(order):
            arr = _axis_derivative(arr, axis + 1, h, periodic)
    return GridFunction(arr, f.domain)


def _pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    """Euclidean magnitude across channels at each grid node."""
    if values.shape[0] == 1:
        return np.abs(values[0])
    return np.sqrt(np.sum(values * values, axis=0))


def _lp_of_values(f: GridFunction, values: np.ndarray, p) -> float:
    mag = _pointwise_magnitude(values)
    if is_inf(p):
        return float(np.max(mag))
    w = f._weights()
    total = float(np.sum(w * mag**p))
    return total ** (1.0 / p)


def norm(f: GridFunction, spec: NormSpec) -> float:
    """Evaluate the requested norm of a grid function.

    On the ambient domain every integral is weighted by the Gaussian density,
    so ``lp`` there means the L^p(rho_d) norm and ``l2mu`` coincides with
    ``lp(2)``.
    """
    if spec.kind == "lp":
        return _lp_of_values(f, f.values, spec.p)
    if spec.kind == "l2mu":
        return _lp_of_values(f, f.values, 2)
    if spec.kind == "ck":
        best = 0.0
        for nu in multi_indices(f.dim, spec.k):
            d = finite_diff_derivative(f, nu) if sum(nu) else f
            best = max(best, _lp_of_values(f, d.values, INF))
        return best
    if spec.kind == "wkq":
        if is_inf(spec.q):
            return norm(f, NormSpec.ck(spec.k))
        total = 0.0
        for nu in multi_indices(f.dim, spec.k):
            d = finite_diff_derivative(f, nu) if sum(nu) else f
            total += _lp_of_values(f, d.values, spec.q) ** spec.q
        return total ** (1.0 / spec.q)
    raise ValidationError(f"unknown norm kind {spec.kind!r}")


def lp_distance(f: GridFunction, g: GridFunction, spec: NormSpec = None) -> float:
    """Norm of f - g (default: L^2)."""
    if spec is None:
        spec = NormSpec.lp(2)
    if f.domain != g.domain or f.values.shape != g.values.shape:
        raise ValidationError("grid functions live on different grids")
    return norm(GridFunction(f.values - g.values, f.domain), spec)


# ---- serialization -------------------------------------------------------


def to_bytes(f: GridFunction) -> bytes:
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    header = _HEADER.pack(
        _MAGIC, f.dim, f.channels, _DOMAIN_TAGS[f.domain], f.resolution, len(payload)
    )
    return header + payload


def from_bytes(data: bytes) -> GridFunction:
    if len(data) < _HEADER.size:
        raise FormatError(f"stream too short for header ({len(data)} bytes)")
    magic, dim, channels, tag, res, nbytes = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if tag not in _TAG_DOMAINS:
        raise FormatError(f"unknown domain tag {tag}")
    expected = channels * res**dim * 8
    if nbytes != expected:
        raise FormatError(f"payload length {nbytes} != {expected} for the declared shape")
    if len(data) != _HEADER.size + nbytes:
        raise FormatError(f"stream has {len(data)} bytes, expected {_HEADER.size + nbytes}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    values = flat.reshape((channels,) + (res,) * dim).astype(np.float64)
    return GridFunction(values, _TAG_DOMAINS[tag])


def save(f: GridFunction, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(f))


def load(path) -> GridFunction:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def to_descriptor(f: GridFunction) -> dict:
    """JSON-friendly descriptor variant of the binary format (for fixtures)."""
    return {
        "format": _MAGIC.decode(),
        "dim": f.dim,
        "channels": f.channels,
        "resolution": f.resolution,
        "domain": f.domain,
        "values": f.values.ravel().tolist(),
        "crc32": zlib.crc32(np.ascontiguousarray(f.values, dtype="<f8").tobytes()),
    }


def from_descriptor(desc) -> GridFunction:
    if isinstance(desc, str):
        desc = json.loads(desc)
    try:
        if desc["format"] != _MAGIC.decode():
            raise FormatError(f"bad format field {desc['format']!r}")
        shape = (desc["channels"],) + (desc["resolution"],) * desc["dim"]
        values = np.asarray(desc["values"], dtype=np.float64).reshape(shape)
        f = GridFunction(values, desc["domain"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed descriptor: {exc}") from exc
    if "crc32" in desc:
        actual = zlib.crc32(np.ascontiguousarray(values, dtype="<f8").tobytes())
        if actual != desc["crc32"]:
            raise FormatError("descriptor checksum mismatch")
    return f
