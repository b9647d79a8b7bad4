"""Closed-form stability bounds for the spectral operator and their audits.

Every inequality the sample-size analysis rests on is realized twice: once as
printed arithmetic (layer and parameter Lipschitz constants, hidden-state
growth, the metric-entropy chain) and once as a randomized sampler that tries
to break it on the shipped forward pass.  Samplers never exceed their formula
on feasible draws -- a violation is a wrong constant or a library bug, not
tolerance noise -- so audits count strict violations with zero slack.

Two conventions used throughout:

* All norms are the discrete L^2 norm of `grids.norm` (cell-weighted, summed
  over channels), under which the spectral identities hold exactly.
* Complex parameter blocks are measured in the sup metric over entry MODULI;
  the box metric on real/imaginary parts is smaller by at most sqrt(2), so
  every certificate stated here also bounds the box-metric quotient.

Quantities like (2 d_c B)^(L+2) overflow float64 quickly.  Every calculator
carries a parallel log-space track and reports the direct value only while it
stays below 1e300; past that the value field is +inf, the flag is set, and
the log field remains exact.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ValidationError
from .grids import GridFunction, NormSpec, norm, lp_distance
from .fno import FnoConfig, FnoParams, forward, param_count, project_params
from . import seeds

_LOG_OVERFLOW = math.log(1e300)


def _from_log(log_value: float):
    """(value, overflowed) pair for a quantity given by its natural log."""
    if log_value > _LOG_OVERFLOW:
        return math.inf, True
    return math.exp(log_value), False


# ---- layer-level constants ------------------------------------------------


def layer_lipschitz_bounds(config: FnoConfig) -> dict:
    """Certified operator norms of the pieces of one hidden layer.

    Keys: "linear" and "spectral" (the d_c * B channel-mixing bounds),
    "bias_norm" (sqrt(d_c) (2 kappa)^(d/2) B), "layer" (the 2 d_c B contraction
    bound for the whole layer), "hidden_composite" (products of layer bounds,
    one per depth), and "end_to_end" (lift and projection included).  Large
    configurations may overflow to +inf; the entropy chain never reads these.
    """
    d_c, B, L = config.d_c, config.bound, config.depth
    mode_mass = (2.0 * config.kappa) ** (config.dim / 2.0)
    layer = 2.0 * d_c * B
    composite = [layer**ell for ell in range(1, L + 1)]
    return {
        "linear": d_c * B,
        "spectral": d_c * B,
        "bias_norm": math.sqrt(d_c) * mode_mass * B,
        "layer": layer,
        "hidden_composite": composite,
        "end_to_end": (d_c * B) ** 2 * composite[-1],
    }


def hidden_state_bounds(config: FnoConfig, u_norm: float) -> list:
    """Growth caps for the hidden states: entry ell is the bound after the
    lift and ell hidden layers, (2 d_c B)^(ell+1) (||u|| + (2 kappa)^(d/2))."""
    if u_norm < 0:
        raise ValidationError("input norm bound must be nonnegative")
    log_layer = math.log(2.0 * config.d_c * config.bound)
    log_source = math.log(u_norm + (2.0 * config.kappa) ** (config.dim / 2.0))
    return [
        _from_log((ell + 1) * log_layer + log_source)[0]
        for ell in range(config.depth + 1)
    ]


@dataclass(frozen=True)
class ParameterLipschitz:
    """The constant lambda(u) = (L+2) (2 d_c B)^(L+2) (||u|| + (2 kappa)^(d/2))
    bounding ||Psi(u; theta) - Psi(u; theta')|| / ||theta - theta'||_sup."""

    value: float
    log_value: float
    overflowed: bool


def _log_parameter_lipschitz(depth, d_c, log_bound, kappa, dim, u_norm) -> float:
    return (
        math.log(depth + 2)
        + (depth + 2) * (math.log(2.0 * d_c) + log_bound)
        + math.log(u_norm + (2.0 * kappa) ** (dim / 2.0))
    )


def parameter_lipschitz(config: FnoConfig, u_norm: float) -> ParameterLipschitz:
    """Worst-case sensitivity of the operator output to a parameter change."""
    if u_norm < 0:
        raise ValidationError("input norm bound must be nonnegative")
    log_value = _log_parameter_lipschitz(
        config.depth, config.d_c, math.log(config.bound), config.kappa, config.dim, u_norm
    )
    value, overflowed = _from_log(log_value)
    if not overflowed:
        # Direct float64 arithmetic, kept as the primary value below 1e300.
        value = (
            (config.depth + 2)
            * (2.0 * config.d_c * config.bound) ** (config.depth + 2)
            * (u_norm + (2.0 * config.kappa) ** (config.dim / 2.0))
        )
    return ParameterLipschitz(value, log_value, overflowed)


# ---- metric-entropy chain ---------------------------------------------------


def cube_covering_log(half_width: float, eps: float, n_params: int) -> float:
    """log of the box-covering count: n_params * log(2 * half_width / eps)."""
    if eps <= 0:
        raise ValidationError("covering radius must be positive")
    return n_params * math.log(2.0 * half_width / eps)


def architecture_covering_log(config: FnoConfig, eps: float, input_norm_bound: float) -> float:
    """Entropy of one architecture's parameter box, pushed through lambda(M):
    the box needs (2B/eps')^(d_theta) balls at eps' = eps / lambda(M)."""
    if eps <= 0:
        raise ValidationError("covering radius must be positive")
    d_theta, _ = param_count(config)
    log_lam = parameter_lipschitz(config, input_norm_bound).log_value
    return d_theta * (math.log(2.0 * config.bound) + log_lam - math.log(eps))


def _max_cutoff(m: int, dim: int) -> int:
    kappa = max(1, int(round(m ** (1.0 / dim))))
    while (kappa + 1) ** dim <= m:
        kappa += 1
    while kappa > 1 and kappa**dim > m:
        kappa -= 1
    return kappa


def _class_config(m: int, depth: int, dim: int, d_in: int, d_out: int) -> FnoConfig:
    kappa = _max_cutoff(m, dim)
    resolution = max(8, 1 << (2 * kappa - 1).bit_length())
    return FnoConfig(
        dim=dim,
        d_in=d_in,
        d_out=d_out,
        d_c=m,
        kappa=kappa,
        depth=depth,
        resolution=resolution,
        bound=1.0,
        activation="identity",
    )


def _sigma_class_logs(m, eps, dim, input_norm_bound, d_in, d_out, log_bound) -> list:
    """Per-depth-class log-counts for the size-m union, depths 1..m."""
    if not (isinstance(m, int) and m >= 1):
        raise ValidationError(f"class index m must be a positive int, got {m!r}")
    if eps <= 0:
        raise ValidationError("covering radius must be positive")
    if d_in > m or d_out > m:
        raise ValidationError("I/O channel counts exceed the class width m")
    kappa = _max_cutoff(m, dim)
    class_logs = []
    for depth in range(1, m + 1):
        d_theta, _ = param_count(_class_config(m, depth, dim, d_in, d_out))
        log_lam = _log_parameter_lipschitz(depth, m, log_bound, kappa, dim, input_norm_bound)
        class_logs.append(d_theta * (math.log(2.0) + log_bound + log_lam - math.log(eps)))
    return class_logs


def sigma_m_covering_log(
    m: int,
    eps: float,
    dim: int,
    input_norm_bound: float,
    d_in: int = 1,
    d_out: int = 1,
    log_bound: float = None,
) -> float:
    """Entropy of the full size-m model class: a union of one architecture per
    depth 1..m, each at width d_c = m, cut-off kappa^dim <= m, and weight box
    exp(m).  Counts add across the union, so logs combine by log-sum-exp.

    `log_bound` overrides log(exp(m)) = m, e.g. to audit a capped weight box.
    """
    log_b = float(m) if log_bound is None else float(log_bound)
    return float(
        logsumexp(_sigma_class_logs(m, eps, dim, input_norm_bound, d_in, d_out, log_b))
    )


def covering_number_log(eps: float, *, config: FnoConfig = None, m: int = None, **kwargs) -> float:
    """Dispatcher: pass `config` for a single architecture, `m` for the size
    class (then `dim`, `input_norm_bound`, and optionally `d_in`/`d_out`)."""
    if (config is None) == (m is None):
        raise ValidationError("pass exactly one of config= or m=")
    if config is not None:
        return architecture_covering_log(config, eps, kwargs.pop("input_norm_bound"))
    return sigma_m_covering_log(m, eps, **kwargs)


def entropy_shape_constants(dim: int, input_norm_bound: float):
    """Explicit constants for the two headline entropy shapes.

    The chain value d_theta * log(2 B lambda(M)/eps) is bounded by
    C_arch * kappa^d L^2 d_c^2 * log(2 B L d_c kappa / eps)  and, for the
    size-m union, by  C_sigma * m^7 * log(2 m / eps).  Both follow by
    splitting the inner logarithm and absorbing each piece into the guarded
    log (argument kept >= 2 by the factor 2), term by term:

        log 2, log B, log L, log d_c, log kappa, log(1/eps)  <=  T,
        log(L+2) <= log 3 + log L,   (L+2) log(2 d_c B) <= 3L * 3T,
        log(M + (2 kappa)^(d/2)) <= log(M + 2^(d/2)) + (d/2) log kappa,

    then L >= 1 (resp. m >= 1) collapses the mixed powers.
    """
    if input_norm_bound < 0:
        raise ValidationError("input norm bound must be nonnegative")
    ln2, ln3 = math.log(2.0), math.log(3.0)
    mass = math.log(input_norm_bound + 2.0 ** (dim / 2.0)) / ln2
    c_arch = 5.0 * 2.0**dim * (13.0 + ln3 / ln2 + mass + dim / 2.0)
    c_sigma = 5.0 * 2.0**dim * (6.5 + ln3 / ln2 + 4.0 / ln2 + mass) + 1.0
    return c_arch, c_sigma


@dataclass(frozen=True)
class EntropyReport:
    """Exact entropy chain for the size-m class next to the two loose shapes
    it is usually quoted in, plus the sample budget the chain implies."""

    m: int
    eps: float
    dim: int
    input_norm_bound: float
    class_logs: list
    arch_log: float  # deepest class alone
    sigma_log: float  # full union (log-sum-exp of class_logs)
    paper_arch_bound: float  # C_arch kappa^d L^2 d_c^2 log(2 B L d_c kappa/eps)
    paper_sigma_bound: float  # C_sigma m^7 log(2 m / eps)
    sample_size: int  # ceil(eps^-1 log(2 N^2))


def entropy_report(
    m: int,
    eps: float,
    dim: int,
    input_norm_bound: float,
    d_in: int = 1,
    d_out: int = 1,
) -> EntropyReport:
    """Assemble the exact chain and its loose shapes for one (m, eps) pair."""
    if not 0 < eps <= 1:
        raise ValidationError(f"covering radius must lie in (0, 1], got {eps}")
    kappa = _max_cutoff(m, dim)
    class_logs = _sigma_class_logs(m, eps, dim, input_norm_bound, d_in, d_out, float(m))
    sigma_log = float(logsumexp(class_logs))
    c_arch, c_sigma = entropy_shape_constants(dim, input_norm_bound)
    # Deepest class: L = d_c = m, log B = m; the guarded log in stable form.
    paper_arch = c_arch * kappa**dim * m**4 * (math.log(2.0 * m * m * kappa / eps) + m)
    paper_sigma = c_sigma * float(m) ** 7 * math.log(2.0 * m / eps)
    required = (math.log(2.0) + 2.0 * sigma_log) / eps
    return EntropyReport(
        m=m,
        eps=eps,
        dim=dim,
        input_norm_bound=input_norm_bound,
        class_logs=class_logs,
        arch_log=class_logs[-1],
        sigma_log=sigma_log,
        paper_arch_bound=paper_arch,
        paper_sigma_bound=paper_sigma,
        sample_size=math.ceil(required),
    )


@dataclass(frozen=True)
class SampleSizePlan:
    """Sample budget for accuracy eps at approximation rate gamma: the class
    index m = ceil((2/eps)^(1/gamma)), the smallest n with
    n >= eps^-1 log(delta^-1 N(Sigma_m, eps)^2), and the closed-form
    consequences (squared-error level 145 eps, slack term 144 eps, asymptotic
    exponent 1 / (2 (1 + 8/gamma)))."""

    eps: float
    gamma: float
    delta: float
    m: int
    n: int
    required_log: float  # log N(Sigma_m, eps), the exact chain value
    risk_bound: float  # 145 eps
    estimation_slack: float  # 144 eps
    rate_exponent: float


def sample_size(
    eps: float,
    gamma: float,
    *,
    dim: int,
    input_norm_bound: float,
    d_in: int = 1,
    d_out: int = 1,
    delta: float = 0.5,
) -> SampleSizePlan:
    """How many samples the entropy chain demands at accuracy eps."""
    if not 0 < eps <= 1:
        raise ValidationError(f"accuracy eps must lie in (0, 1], got {eps}")
    if not gamma > 0:
        raise ValidationError(f"approximation rate gamma must be positive, got {gamma}")
    if not 0 < delta <= 1:
        raise ValidationError(f"failure probability delta must lie in (0, 1], got {delta}")
    m = 1 if math.isinf(gamma) else math.ceil((2.0 / eps) ** (1.0 / gamma))
    sigma_log = sigma_m_covering_log(m, eps, dim, input_norm_bound, d_in, d_out)
    required = (math.log(1.0 / delta) + 2.0 * sigma_log) / eps
    exponent = 0.5 if math.isinf(gamma) else 1.0 / (2.0 * (1.0 + 8.0 / gamma))
    return SampleSizePlan(
        eps=eps,
        gamma=gamma,
        delta=delta,
        m=m,
        n=math.ceil(required),
        required_log=sigma_log,
        risk_bound=145.0 * eps,
        estimation_slack=144.0 * eps,
        rate_exponent=exponent,
    )


def epsilon_for_sample_count(
    n: int,
    gamma: float,
    *,
    dim: int,
    input_norm_bound: float,
    d_in: int = 1,
    d_out: int = 1,
    delta: float = 0.5,
):
    """Invert the sample-size formula: the smallest eps in (0, 1] whose budget
    fits within n samples.  The budget decreases in eps, so this is a
    bisection; if even eps = 1 demands more than n, return (1.0, True) --
    the capped flag marks that the audit slack 144 eps is then the trivial
    one and the certified inequality holds with room to spare.
    """
    if not (isinstance(n, int) and n >= 1):
        raise ValidationError(f"sample count must be a positive int, got {n!r}")

    def budget(eps):
        return sample_size(
            eps, gamma, dim=dim, input_norm_bound=input_norm_bound,
            d_in=d_in, d_out=d_out, delta=delta,
        ).n

    if budget(1.0) > n:
        return 1.0, True
    lo, hi = 1e-12, 1.0  # budget(hi) <= n; shrink hi while it stays affordable
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if budget(mid) <= n:
            hi = mid
        else:
            lo = mid
    return hi, False


# ---- risk-difference helpers -------------------------------------------------


def flip_function(a, b, eps: float):
    """(a - b)_+ / (a + eps): the clipped relative excess, with partial
    derivatives bounded by 1/eps on the nonnegative quadrant."""
    if eps <= 0:
        raise ValidationError("flip stabilizer eps must be positive")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.maximum(a - b, 0.0) / (a + eps)


def _risk(pairs) -> float:
    total = 0.0
    for out, target in pairs:
        total += lp_distance(out, target) ** 2
    return total / len(pairs)


def audit_risk_lipschitz(psi, psi_prime, g, g_prime, dataset, probes=None) -> dict:
    """Check that swapping both the model and the target moves the empirical
    risk by at most 6 * (sup ||Psi - Psi'|| + sup ||G - G'||) + 1e-9.

    `dataset` carries the risk; the optional denser `probes` only sharpen the
    reported sup estimates (any finite max is a lower estimate of the true
    sup, so the asserted inequality stays sound).  Preconditions: models stay
    within the output-2 class and targets within the unit ball on the dataset.
    """
    if not dataset:
        raise ValidationError("risk audit needs a nonempty dataset")
    probes = list(probes) if probes is not None else []
    l2 = NormSpec.lp(2)
    for u in dataset:
        for op, cap, who in ((psi, 2.0, "model"), (psi_prime, 2.0, "model"),
                             (g, 1.0, "target"), (g_prime, 1.0, "target")):
            value = norm(op(u), l2)
            if value > cap + 1e-9:
                raise ValidationError(
                    f"{who} output norm {value:.6g} exceeds its class bound {cap}"
                )
    lhs = abs(
        _risk([(psi(u), g(u)) for u in dataset])
        - _risk([(psi_prime(u), g_prime(u)) for u in dataset])
    )
    sup_psi = max(lp_distance(psi(u), psi_prime(u)) for u in dataset)
    sup_g = max(lp_distance(g(u), g_prime(u)) for u in dataset)
    sup_psi_probe = max(
        [sup_psi] + [lp_distance(psi(u), psi_prime(u)) for u in probes]
    )
    sup_g_probe = max([sup_g] + [lp_distance(g(u), g_prime(u)) for u in probes])
    rhs = 6.0 * (sup_psi + sup_g) + 1e-9
    return {
        "lhs": lhs,
        "rhs": rhs,
        "sup_model_dataset": sup_psi,
        "sup_target_dataset": sup_g,
        "sup_model_probes": sup_psi_probe,
        "sup_target_probes": sup_g_probe,
        "margin": rhs - lhs,
        "passed": lhs <= rhs,
    }


# ---- randomized bound audits -------------------------------------------------


@dataclass(frozen=True)
class AuditResult:
    """Outcome of one sampler-vs-formula audit.  `worst_ratio` is the largest
    measured/bound quotient over all probes; the companion fields echo the
    probe that achieved it."""

    name: str
    formula: str
    probes: int
    violations: int
    worst_ratio: float
    bound_at_worst: float
    measured_at_worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_record(self) -> dict:
        return {
            "name": self.name,
            "formula": self.formula,
            "bound": self.bound_at_worst,
            "measured": self.measured_at_worst,
            "margin": 1.0 - self.worst_ratio,
            "probes": self.probes,
            "violations": self.violations,
            "passed": self.passed,
        }


def _collect(name, formula, samples) -> AuditResult:
    """Fold (measured, bound) pairs into an AuditResult with zero slack."""
    worst, at = -math.inf, (0.0, 1.0)
    violations = 0
    count = 0
    for measured, bound in samples:
        count += 1
        ratio = measured / bound
        if ratio > worst:
            worst, at = ratio, (measured, bound)
        if measured > bound:
            violations += 1
    return AuditResult(
        name=name,
        formula=formula,
        probes=count,
        violations=violations,
        worst_ratio=worst,
        bound_at_worst=at[1],
        measured_at_worst=at[0],
    )


def _identity_wrap(config: FnoConfig, activation: str = "identity") -> FnoConfig:
    """One hidden layer with identity lift/projection shapes (d_in=d_out=d_c)
    so single pieces of a layer can be driven through the shipped forward."""
    return dataclasses.replace(
        config, d_in=config.d_c, d_out=config.d_c, depth=1, activation=activation
    )


def _plumb(params: FnoParams) -> FnoParams:
    """Identity lift and projection in place (shapes must match d_c)."""
    eye = np.eye(params.config.d_c)
    return FnoParams(
        params.config, eye, params.spectral, params.pointwise, params.biases, eye.copy()
    )


def _random_field(rng, channels, config) -> GridFunction:
    shape = (channels,) + (config.resolution,) * config.dim
    return GridFunction(rng.standard_normal(shape), "cube-periodic")


def _complex_sup(params: FnoParams) -> float:
    """Tightest feasibility level of a parameter set in the modulus metric."""
    worst = max(np.max(np.abs(params.lift)), np.max(np.abs(params.proj)))
    for ell in range(params.config.depth):
        worst = max(
            worst,
            np.max(np.abs(params.pointwise[ell])),
            np.max(np.abs(params.spectral[ell])),
            np.max(np.abs(params.biases[ell])),
        )
    return float(worst)


def _sup_metric_distance(a: FnoParams, b: FnoParams) -> float:
    worst = max(
        np.max(np.abs(a.lift - b.lift)), np.max(np.abs(a.proj - b.proj))
    )
    for ell in range(a.config.depth):
        worst = max(
            worst,
            np.max(np.abs(a.pointwise[ell] - b.pointwise[ell])),
            np.max(np.abs(a.spectral[ell] - b.spectral[ell])),
            np.max(np.abs(a.biases[ell] - b.biases[ell])),
        )
    return float(worst)


def _feasible(config: FnoConfig, rng, scale=None) -> FnoParams:
    draw = FnoParams.random(config, rng, scale=config.bound if scale is None else scale)
    return project_params(draw, config.bound)


def audit_linear_bound(config: FnoConfig, n_probes=200, seed=0):
    """||W v|| <= d_c ||W||_sup ||v|| through the shipped pointwise path."""
    wrap = _identity_wrap(config)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "linear-map", shard)
            params = _plumb(FnoParams.zeros(wrap))
            W = rng.uniform(-wrap.bound, wrap.bound, size=(wrap.d_c, wrap.d_c))
            params.pointwise[0][:] = W
            v = _random_field(rng, wrap.d_c, wrap)
            measured = norm(forward(params, v), NormSpec.lp(2))
            yield measured, wrap.d_c * np.max(np.abs(W)) * norm(v, NormSpec.lp(2))

    return _collect("linear-map", "d_c * sup|W| * |v|", samples())


def audit_spectral_bound(config: FnoConfig, n_probes=200, seed=0):
    """||K v|| <= d_c sup|P-hat| ||v|| through the shipped spectral path."""
    wrap = _identity_wrap(config)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "spectral-map", shard)
            params = _plumb(FnoParams.zeros(wrap))
            block = rng.uniform(-wrap.bound, wrap.bound, size=params.spectral[0].shape) + 1j * rng.uniform(
                -wrap.bound, wrap.bound, size=params.spectral[0].shape
            )
            params.spectral[0][:] = block
            params = _plumb(params.resymmetrize())
            v = _random_field(rng, wrap.d_c, wrap)
            measured = norm(forward(params, v), NormSpec.lp(2))
            sup_mult = np.max(np.abs(params.spectral[0]))
            yield measured, wrap.d_c * sup_mult * norm(v, NormSpec.lp(2))

    return _collect("spectral-map", "d_c * sup|P-hat| * |v|", samples())


def audit_bias_bound(config: FnoConfig, n_probes=200, seed=0):
    """||b|| <= sqrt(d_c) (2 kappa)^(d/2) sup|b-hat| via a zero-input pass."""
    wrap = _identity_wrap(config)
    mode_mass = (2.0 * wrap.kappa) ** (wrap.dim / 2.0)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "bias-norm", shard)
            params = _plumb(FnoParams.zeros(wrap))
            block = rng.uniform(-wrap.bound, wrap.bound, size=params.biases[0].shape) + 1j * rng.uniform(
                -wrap.bound, wrap.bound, size=params.biases[0].shape
            )
            params.biases[0][:] = block
            params = _plumb(params.resymmetrize())
            zero = GridFunction(
                np.zeros((wrap.d_c,) + (wrap.resolution,) * wrap.dim), "cube-periodic"
            )
            measured = norm(forward(params, zero), NormSpec.lp(2))
            sup_bias = np.max(np.abs(params.biases[0]))
            yield measured, math.sqrt(wrap.d_c) * mode_mass * sup_bias

    return _collect("bias-norm", "sqrt(d_c) * (2 kappa)^(d/2) * sup|b-hat|", samples())


def audit_layer_lipschitz(config: FnoConfig, n_probes=200, seed=0):
    """One full hidden layer contracts pairs by at most 2 d_c B."""
    wrap = _identity_wrap(config, activation=config.activation)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "layer-lipschitz", shard)
            params = _plumb(_feasible(wrap, rng))
            level = max(_complex_sup(params), 1.0)
            v = _random_field(rng, wrap.d_c, wrap)
            w = _random_field(rng, wrap.d_c, wrap)
            gap = lp_distance(forward(params, v), forward(params, w))
            yield gap, 2.0 * wrap.d_c * level * lp_distance(v, w)

    return _collect("layer-lipschitz", "2 * d_c * B * |v - w|", samples())


def audit_parameter_direction(config: FnoConfig, n_probes=200, seed=0):
    """Perturbing one layer's parameters moves its output by at most
    3 d_c (2 kappa)^(d/2) max(1, ||v||) per unit sup-metric step."""
    wrap = _identity_wrap(config, activation=config.activation)
    mode_mass = (2.0 * wrap.kappa) ** (wrap.dim / 2.0)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "parameter-direction", shard)
            a = _plumb(_feasible(wrap, rng))
            b = _plumb(_feasible(wrap, rng))
            v = _random_field(rng, wrap.d_c, wrap)
            gap = lp_distance(forward(a, v), forward(b, v))
            step = _sup_metric_distance(a, b)
            bound = 3.0 * wrap.d_c * mode_mass * max(1.0, norm(v, NormSpec.lp(2))) * step
            yield gap, bound

    return _collect(
        "parameter-direction", "3 * d_c * (2 kappa)^(d/2) * max(1, |v|) * |dtheta|", samples()
    )


def audit_hidden_growth(config: FnoConfig, n_probes=200, seed=0):
    """Every hidden state obeys (2 d_c B)^(ell+1) (||u|| + (2 kappa)^(d/2)),
    and consecutive states obey the one-step recursion C0 M + C1."""
    mode_mass = (2.0 * config.kappa) ** (config.dim / 2.0)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "hidden-growth", shard)
            params = _feasible(config, rng)
            level = max(_complex_sup(params), 1.0)
            c0 = 2.0 * config.d_c * level
            c1 = math.sqrt(config.d_c) * mode_mass * level
            u = _random_field(rng, config.d_in, config)
            source = norm(u, NormSpec.lp(2)) + mode_mass
            _, hidden = forward(params, u, return_hidden=True)
            states = [
                norm(GridFunction(h, "cube-periodic"), NormSpec.lp(2)) for h in hidden
            ]
            for ell, value in enumerate(states):
                yield value, c0 ** (ell + 1) * source
            for prev, nxt in zip(states, states[1:]):
                yield nxt, c0 * prev + c1

    return _collect(
        "hidden-growth", "(2 d_c B)^(ell+1) * (|u| + (2 kappa)^(d/2))", samples()
    )


def audit_output_bound(config: FnoConfig, n_probes=200, seed=0):
    """||Psi(u)|| <= (2 d_c B)^(L+2) (||u|| + (2 kappa)^(d/2))."""
    mode_mass = (2.0 * config.kappa) ** (config.dim / 2.0)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "output-bound", shard)
            params = _feasible(config, rng)
            level = max(_complex_sup(params), 1.0)
            u = _random_field(rng, config.d_in, config)
            measured = norm(forward(params, u), NormSpec.lp(2))
            bound = (2.0 * config.d_c * level) ** (config.depth + 2) * (
                norm(u, NormSpec.lp(2)) + mode_mass
            )
            yield measured, bound

    return _collect(
        "output-bound", "(2 d_c B)^(L+2) * (|u| + (2 kappa)^(d/2))", samples()
    )


def audit_parameter_lipschitz(config: FnoConfig, n_probes=200, seed=0):
    """||Psi(u; theta) - Psi(u; theta')|| <= lambda(u) |theta - theta'|_sup."""

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "parameter-lipschitz", shard)
            a = _feasible(config, rng)
            b = _feasible(config, rng)
            level = max(_complex_sup(a), _complex_sup(b), 1.0)
            u = _random_field(rng, config.d_in, config)
            gap = lp_distance(forward(a, u), forward(b, u))
            step = _sup_metric_distance(a, b)
            u_norm = norm(u, NormSpec.lp(2))
            lam = (
                (config.depth + 2)
                * (2.0 * config.d_c * level) ** (config.depth + 2)
                * (u_norm + (2.0 * config.kappa) ** (config.dim / 2.0))
            )
            yield gap, lam * step

    return _collect(
        "parameter-lipschitz", "(L+2) (2 d_c B)^(L+2) (|u| + (2 kappa)^(d/2)) |dtheta|", samples()
    )


def audit_risk_difference(config: FnoConfig, n_probes=100, seed=0):
    """Random feasible quadruples (two class-2 models, two unit-ball targets)
    never violate the 6x risk-difference inequality on a shared dataset."""
    l2 = NormSpec.lp(2)

    def scaled_operator(rng, cap, dataset, probes):
        params = _feasible(config, rng, scale=0.5)
        fields = dataset + probes
        peak = max(norm(forward(params, u), l2) for u in fields)
        if peak > cap:
            # Output is linear in the projection; shrink it below the cap.
            params = FnoParams(
                config,
                params.lift,
                params.spectral,
                params.pointwise,
                params.biases,
                params.proj * (0.9 * cap / peak),
            )
        return lambda u: forward(params, u)

    def samples():
        for shard in range(n_probes):
            rng = seeds.stream(seed, "audit", "risk-difference", shard)
            dataset = [_random_field(rng, config.d_in, config) for _ in range(4)]
            probes = [_random_field(rng, config.d_in, config) for _ in range(8)]
            psi = scaled_operator(rng, 2.0, dataset, probes)
            psi2 = scaled_operator(rng, 2.0, dataset, probes)
            g = scaled_operator(rng, 1.0, dataset, probes)
            g2 = scaled_operator(rng, 1.0, dataset, probes)
            report = audit_risk_lipschitz(psi, psi2, g, g2, dataset, probes)
            yield report["lhs"], report["rhs"]

    return _collect("risk-difference", "6 (sup|dPsi| + sup|dG|) + 1e-9", samples())


def audit_flip_gradient(eps: float = 0.1, resolution: int = 401):
    """Dense central differences of the clipped relative excess on [0, 10]^2
    never exceed the certified slope 1/eps (plus float rounding headroom)."""
    axis = np.linspace(0.0, 10.0, resolution)
    h = axis[1] - axis[0]
    a, b = np.meshgrid(axis, axis, indexing="ij")
    f = flip_function(a, b, eps)
    slope_a = np.abs(f[2:, :] - f[:-2, :]) / (2.0 * h)
    slope_b = np.abs(f[:, 2:] - f[:, :-2]) / (2.0 * h)
    bound = 1.0 / eps + 1e-9
    worst = float(max(slope_a.max(), slope_b.max()))
    violations = int(np.sum(slope_a > bound) + np.sum(slope_b > bound))
    return AuditResult(
        name="flip-gradient",
        formula="|d flip| <= 1/eps",
        probes=int(slope_a.size + slope_b.size),
        violations=violations,
        worst_ratio=worst / bound,
        bound_at_worst=bound,
        measured_at_worst=worst,
    )


BOUND_AUDITS = {
    "linear-map": audit_linear_bound,
    "spectral-map": audit_spectral_bound,
    "bias-norm": audit_bias_bound,
    "layer-lipschitz": audit_layer_lipschitz,
    "parameter-direction": audit_parameter_direction,
    "hidden-growth": audit_hidden_growth,
    "output-bound": audit_output_bound,
    "parameter-lipschitz": audit_parameter_lipschitz,
    "risk-difference": audit_risk_difference,
    "flip-gradient": lambda config, n_probes=200, seed=0: audit_flip_gradient(),
}


def run_bound_audits(config: FnoConfig, which=None, n_probes=200, seed=0) -> list:
    """Run the named audits (all by default) and return their results."""
    names = list(BOUND_AUDITS) if which is None else list(which)
    results = []
    for name in names:
        if name not in BOUND_AUDITS:
            raise ValidationError(f"unknown audit {name!r}; known: {sorted(BOUND_AUDITS)}")
        results.append(BOUND_AUDITS[name](config, n_probes=n_probes, seed=seed))
    return results


# ---- certificate assembly ------------------------------------------------------


@dataclass(frozen=True)
class LipschitzCertificate:
    """Every closed-form stability constant of one architecture at one input
    level, next to the worst quotients a randomized search achieved."""

    config: FnoConfig
    input_norm_bound: float
    layer_bounds: dict
    hidden_bounds: list
    parameter_bound: ParameterLipschitz
    measured: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.measured.values())


def lipschitz_certificate(
    config: FnoConfig, input_norm_bound: float, n_probes: int = 200, seed: int = 0
) -> LipschitzCertificate:
    """Compute all constants and challenge each with its sampler."""
    results = run_bound_audits(config, n_probes=n_probes, seed=seed)
    return LipschitzCertificate(
        config=config,
        input_norm_bound=input_norm_bound,
        layer_bounds=layer_lipschitz_bounds(config),
        hidden_bounds=hidden_state_bounds(config, input_norm_bound),
        parameter_bound=parameter_lipschitz(config, input_norm_bound),
        measured={r.name: r for r in results},
    )
