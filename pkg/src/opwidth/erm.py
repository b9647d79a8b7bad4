"""Data-complexity experiments: input measure, ground truths, and an ERM decoder.

The input law mirrors the compact-set setting of the width bounds: random
trigonometric fields u = sum_{j<=J} j^{-alpha} y_j phi_j with y_j ~ U[-1,1]
iid, so every draw lies in a known coefficient box and the norm bound
M = sum_j j^{-alpha} is available in closed form.  Ground truths are either
frozen operator networks (so the best-in-class risk is exactly zero and the
approximation term of the error decomposition vanishes) or closed-form
evaluators.

The empirical-risk minimizer over the bounded network class is intractable
exactly; the decoder here is multi-restart projected gradient descent, and
every statistical audit is phrased against the *computed* minimizer, whose
risk upper-bounds the true ERM risk.  The output-norm constraint of the
restricted class (||Psi(u)|| <= 2 on inputs) is pushed by a hinge penalty
during training and verified afterwards on a probe set ten times the size of
the training set; a violation marks the run infeasible rather than silently
passing.

Sample indices address disjoint blocks of one counter-based stream per
measure seed: training sets, probe sets, normalization probes, and Monte
Carlo estimates never share draws.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import bounds, fno, seeds
from .errors import InfeasibleError, OpwidthError, ValidationError
from .fno import FnoConfig, FnoParams, forward, forward_batch, grad_empirical_risk, project_params
from .grids import GridFunction

# Index blocks carving up each measure's sample space.  Callers that need
# fresh draws (sweep rows, repeated audits) offset into unused ranges.
NORMALIZATION_BLOCK = 5_000_000
MONTE_CARLO_BLOCK = 10_000_000


# ---- the input measure ----------------------------------------------------------


@dataclass(frozen=True)
class MeasureSpec:
    """Law of the random input fields, supported on a compact coefficient box.

    The basis functions are the orthonormal Fourier modes of the periodic
    cube, ordered by frequency (constant first, then cos/sin per frequency
    shell); orthonormality is exact in the discrete norm as long as every
    per-axis frequency stays below resolution/2.
    """

    dim: int = 1
    resolution: int = 64
    alpha: float = 1.0
    j_max: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"dim must be 1, 2, or 3, got {self.dim!r}")
        if not (isinstance(self.resolution, int) and self.resolution >= 8):
            raise ValidationError(f"resolution must be an int >= 8, got {self.resolution!r}")
        if not self.alpha > 0.5:
            raise ValidationError(
                f"coefficient decay needs alpha > 1/2 for a summable second moment, got {self.alpha!r}"
            )
        if not (isinstance(self.j_max, int) and self.j_max >= 1):
            raise ValidationError(f"j_max must be a positive int, got {self.j_max!r}")
        max_freq = max(max((a + 1) // 2 for a in tup) for tup in self.mode_tuples)
        if max_freq > self.resolution // 2 - 1:
            raise ValidationError(
                f"mode frequency {max_freq} aliases on a grid of {self.resolution} points"
            )

    @cached_property
    def mode_tuples(self):
        """Per-axis basis ids of the first j_max tensor modes, frequency-ordered.

        Axis id 0 is the constant, 2k-1 the cosine and 2k the sine at
        frequency k; tuples are ranked by their largest axis frequency.
        """
        tuples, shell = [], 0
        while len(tuples) < self.j_max:
            ids = range(2 * shell + 1)  # all ids with frequency <= shell
            fresh = [
                tup
                for tup in _product(ids, self.dim)
                if max((a + 1) // 2 for a in tup) == shell
            ]
            tuples.extend(sorted(fresh))
            shell += 1
        return tuple(tuples[: self.j_max])

    @cached_property
    def basis(self) -> np.ndarray:
        """Stacked mode values on the grid, shape (j_max, N, ..., N)."""
        x = np.arange(self.resolution) / self.resolution
        axis_values = {}
        for tup in self.mode_tuples:
            for a in tup:
                if a not in axis_values:
                    k = (a + 1) // 2
                    if a == 0:
                        axis_values[a] = np.ones_like(x)
                    elif a % 2 == 1:
                        axis_values[a] = math.sqrt(2.0) * np.cos(2.0 * math.pi * k * x)
                    else:
                        axis_values[a] = math.sqrt(2.0) * np.sin(2.0 * math.pi * k * x)
        modes = []
        for tup in self.mode_tuples:
            values = axis_values[tup[0]]
            for a in tup[1:]:
                values = np.multiply.outer(values, axis_values[a])
            modes.append(values)
        return np.stack(modes)

    @cached_property
    def scales(self) -> np.ndarray:
        """The decay weights j^{-alpha}, j = 1..j_max."""
        return np.arange(1, self.j_max + 1, dtype=np.float64) ** (-self.alpha)

    @property
    def norm_bound(self) -> float:
        """Closed-form bound on sup_{u in K} ||u||_{L^2}: sum_j j^{-alpha}."""
        return float(np.sum(self.scales))

    @property
    def second_moment(self) -> float:
        """E ||u||^2_{L^2} = sum_j j^{-2 alpha} / 3 (uniform coefficients)."""
        return float(np.sum(self.scales**2) / 3.0)

    def coefficients(self, index: int) -> np.ndarray:
        """The raw coefficient draw y in [-1,1]^{j_max} of sample `index`."""
        rng = seeds.stream(self.seed, "measure", int(index))
        return rng.uniform(-1.0, 1.0, self.j_max)

    def sample(self, index: int) -> GridFunction:
        """Sample `index` of the measure, reproducible from (seed, index)."""
        weights = self.scales * self.coefficients(index)
        values = np.tensordot(weights, self.basis, axes=(0, 0))
        return GridFunction(values[None], "cube-periodic")

    def coefficient_projection(self, u: GridFunction) -> np.ndarray:
        """Recover y from a field via the discrete inner products <u, phi_j>."""
        if u.values.shape != (1,) + (self.resolution,) * self.dim:
            raise ValidationError(
                f"field shape {u.values.shape} does not match the measure grid"
            )
        cellw = float(self.resolution) ** (-self.dim)
        inner = np.tensordot(self.basis, u.values[0], axes=self.dim) * cellw
        return inner / self.scales


def _product(ids, dim):
    grids = np.meshgrid(*([list(ids)] * dim), indexing="ij")
    return [tuple(int(g[idx]) for g in grids) for idx in np.ndindex(grids[0].shape)]


def sample_inputs(spec: MeasureSpec, count: int, start: int = 0):
    """Samples `start..start+count-1` of the measure, as grid functions."""
    if not (isinstance(count, int) and count >= 1):
        raise ValidationError(f"count must be a positive int, got {count!r}")
    if not (isinstance(start, int) and start >= 0):
        raise ValidationError(f"start must be a nonnegative int, got {start!r}")
    return [spec.sample(start + i) for i in range(count)]


# ---- ground truths --------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    """A target operator: a frozen network or a closed-form evaluator.

    For the frozen kind, ``m_star`` is the smallest class index whose
    architecture box contains the parameters, so the approximation error is
    exactly zero for every class index >= m_star; ``probe_sup`` records the
    largest output norm seen during normalization (kept <= 1 by rescaling
    the output map, matching the unit-ball normalization of the rate theory).
    """

    kind: str
    d_out: int
    params: FnoParams = None
    fn: object = field(default=None, repr=False)
    m_star: int = None
    probe_sup: float = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("fixed-fno", "analytic"):
            raise ValidationError(f"unknown ground-truth kind {self.kind!r}")
        if self.kind == "fixed-fno" and self.params is None:
            raise ValidationError("fixed-fno ground truth needs frozen parameters")
        if self.kind == "analytic" and self.fn is None:
            raise ValidationError("analytic ground truth needs an evaluator")

    def evaluate(self, u: GridFunction) -> GridFunction:
        if self.kind == "fixed-fno":
            return forward(self.params, u)
        out = self.fn(u)
        if out.values.shape[0] != self.d_out:
            raise ValidationError(
                f"analytic evaluator returned {out.values.shape[0]} channels, expected {self.d_out}"
            )
        return out

    def evaluate_batch(self, fields) -> np.ndarray:
        """Target values for many inputs, shape (n, d_out, N, ..., N)."""
        if self.kind == "fixed-fno":
            return forward_batch(self.params, fields)
        return np.stack([self.evaluate(u).values for u in fields])


def smallest_class_index(params: FnoParams) -> int:
    """Least m whose class admits the net: shape fits and |theta|_inf <= e^m."""
    c = params.config
    m = max(c.kappa**c.dim, c.d_c, c.depth, 1)
    while params.sup_norm() > math.exp(min(m, 700)):
        m += 1
    return m


def frozen_operator_truth(
    config: FnoConfig,
    spec: MeasureSpec,
    seed: int = 0,
    probe_count: int = 64,
    scale: float = 0.5,
    target_sup: float = 0.95,
) -> GroundTruth:
    """Freeze a random network as the target, rescaled to unit output level.

    The output map is shrunk until the largest output norm over a probe set
    of measure samples is at most ``target_sup`` (< 1), so the target sits
    inside the unit ball that the sample-complexity statements assume.
    """
    if config.dim != spec.dim or config.resolution != spec.resolution or config.d_in != 1:
        raise ValidationError("ground-truth architecture must match the measure grid")
    rng = seeds.stream(seed, "truth")
    params = FnoParams.random(config, rng, scale=min(scale, config.bound))
    probes = sample_inputs(spec, probe_count, start=NORMALIZATION_BLOCK)
    sup = _output_sup(params, probes)
    if sup > target_sup:
        params = params.copy()
        params.proj *= target_sup / sup
        sup = _output_sup(params, probes)
    return GroundTruth(
        kind="fixed-fno",
        d_out=config.d_out,
        params=params,
        m_star=smallest_class_index(params),
        probe_sup=sup,
        label=f"frozen-fno(seed={seed})",
    )


def analytic_truth(fn, spec: MeasureSpec, d_out: int = 1, label: str = "analytic") -> GroundTruth:
    """Wrap a closed-form evaluator u -> GridFunction as a ground truth."""
    probes = sample_inputs(spec, 8, start=NORMALIZATION_BLOCK)
    gt = GroundTruth(kind="analytic", d_out=d_out, fn=fn, label=label)
    sup = max(_field_norm(gt.evaluate(u).values, spec.resolution, spec.dim) for u in probes)
    return dataclasses.replace(gt, probe_sup=sup)


def constant_functional_truth(value: float, spec: MeasureSpec) -> GroundTruth:
    """The constant functional u -> value, as a constant-output operator."""
    shape = (1,) + (spec.resolution,) * spec.dim

    def fn(u):
        return GridFunction(np.full(shape, float(value)), "cube-periodic")

    return GroundTruth(
        kind="analytic",
        d_out=1,
        fn=fn,
        m_star=1,
        probe_sup=abs(float(value)),
        label=f"constant({value})",
    )


def _field_norm(values, resolution, dim) -> float:
    cellw = float(resolution) ** (-dim)
    return math.sqrt(float(np.sum(values * values)) * cellw)


def _output_sup(params: FnoParams, fields) -> float:
    out = forward_batch(params, fields)
    c = params.config
    return max(_field_norm(out[j], c.resolution, c.dim) for j in range(len(fields)))


# ---- risks ----------------------------------------------------------------------


def _apply(psi, fields) -> np.ndarray:
    if isinstance(psi, FnoParams):
        return forward_batch(psi, fields)
    return np.stack([psi(u).values for u in fields])


def empirical_risk(psi, gt: GroundTruth, inputs) -> float:
    """(1/n) sum_j ||Psi(u_j) - G(u_j)||^2_{L^2}, accumulated in input order."""
    if len(inputs) == 0:
        raise ValidationError("empirical risk needs at least one input")
    outs = _apply(psi, inputs)
    tgts = gt.evaluate_batch(inputs)
    if outs.shape != tgts.shape:
        raise ValidationError(f"output shape {outs.shape} does not match target {tgts.shape}")
    resolution = inputs[0].resolution
    dim = inputs[0].dim
    cellw = float(resolution) ** (-dim)
    n = len(inputs)
    risk = 0.0
    for j in range(n):
        diff = outs[j] - tgts[j]
        risk += float(np.sum(diff * diff)) * cellw / n
    return risk


def population_risk(
    psi,
    gt: GroundTruth,
    spec: MeasureSpec,
    count: int = 10_000,
    start: int = MONTE_CARLO_BLOCK,
    batch: int = 512,
):
    """Monte Carlo estimate of E_mu ||Psi(u) - G(u)||^2, with its stderr."""
    if not (isinstance(count, int) and count >= 2):
        raise ValidationError(f"Monte Carlo size must be an int >= 2, got {count!r}")
    cellw = float(spec.resolution) ** (-spec.dim)
    sq_errors = np.empty(count)
    done = 0
    while done < count:
        take = min(batch, count - done)
        fields = sample_inputs(spec, take, start=start + done)
        diff = _apply(psi, fields) - gt.evaluate_batch(fields)
        axes = tuple(range(1, diff.ndim))
        sq_errors[done : done + take] = np.sum(diff * diff, axis=axes) * cellw
        done += take
    mean = float(np.mean(sq_errors))
    stderr = float(np.std(sq_errors, ddof=1) / math.sqrt(count))
    return mean, stderr


# ---- training -------------------------------------------------------------------


_TRAINABLE_BLOCKS = ("lift", "spectral", "pointwise", "biases", "proj")


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters of the projected-gradient ERM surrogate.

    ``b_cap`` truncates the class's parameter box e^m, which is astronomically
    loose; the trained class is then a subset of the nominal one, which keeps
    every upper-bound audit sound.  ``trainable`` optionally restricts the
    descent to named parameter blocks; the remaining blocks are pinned at
    zero, so the searched family is exactly the span of the named blocks
    (e.g. ``("biases", "proj")`` searches the constant-output nets).
    """

    m: int
    steps: int = 2000
    lr: float = 0.1
    penalty: float = 1.0
    restarts: int = 3
    seed: int = 0
    n_train: int = 64
    n_mc: int = 10_000
    b_cap: float = 10.0
    init_scale: float = 0.3
    target_risk: float = 0.0
    check_every: int = 25
    trainable: tuple = None

    def __post_init__(self):
        for name in ("m", "steps", "restarts", "n_train", "n_mc", "check_every"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise ValidationError(f"{name} must be a positive int, got {value!r}")
        for name in ("lr", "penalty", "b_cap", "init_scale"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"{name} must be positive, got {value!r}")
        if self.target_risk < 0:
            raise ValidationError(f"target_risk must be nonnegative, got {self.target_risk!r}")
        if self.trainable is not None:
            unknown = set(self.trainable) - set(_TRAINABLE_BLOCKS)
            if unknown:
                raise ValidationError(f"unknown trainable blocks {sorted(unknown)}")

    @property
    def bound(self) -> float:
        """The projection box: min(e^m, b_cap)."""
        return float(min(math.exp(min(self.m, 700)), self.b_cap))


def select_architecture(m: int, spec: MeasureSpec, gt: GroundTruth = None, b_cap: float = 10.0) -> FnoConfig:
    """Architecture policy for class index m.

    A frozen-network target fixes the shape (so the target is in class as
    soon as m >= m_star); otherwise a default single-layer shape is scaled
    from m with the cutoff capped by both the class and the grid.
    """
    bound = float(min(math.exp(min(m, 700)), b_cap))
    if gt is not None and gt.kind == "fixed-fno":
        if gt.m_star is not None and m < gt.m_star:
            raise ValidationError(
                f"class index m={m} is below the target's smallest class {gt.m_star}"
            )
        return dataclasses.replace(gt.params.config, bound=bound)
    kappa = 1
    while (kappa + 1) ** spec.dim <= m and 2 * (kappa + 1) - 1 <= spec.resolution // 2:
        kappa += 1
    return FnoConfig(
        dim=spec.dim,
        d_in=1,
        d_out=gt.d_out if gt is not None else 1,
        d_c=min(m, 4),
        kappa=kappa,
        depth=1,
        resolution=spec.resolution,
        bound=bound,
        activation="gate",
    )


def _trainable_mask(config: FnoConfig, names) -> np.ndarray:
    """1/0 vector over free parameters selecting the named blocks."""
    probe = FnoParams.zeros(config)
    sel = set(names)
    if "lift" in sel:
        probe.lift[:] = 1.0
    if "proj" in sel:
        probe.proj[:] = 1.0
    for ell in range(config.depth):
        if "pointwise" in sel:
            probe.pointwise[ell][:] = 1.0
        if "spectral" in sel:
            probe.spectral[ell][:] = 1.0 + 1.0j
        if "biases" in sel:
            probe.biases[ell][:] = 1.0 + 1.0j
    return (np.abs(probe.to_vector()) > 0).astype(np.float64)


@dataclass(frozen=True)
class RestartRecord:
    """Outcome of one optimization restart."""

    index: int
    final_risk: float
    penalized_risk: float
    steps_run: int
    diverged: bool
    sup_norm: float

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TrainReport:
    """Everything observable about one training run."""

    config: FnoConfig
    m: int
    bound: float
    penalty: float
    records: list
    best_index: int
    best_risk: float
    probe_max: float
    feasible: bool
    gt_risk: float = None
    encoder_image: np.ndarray = None
    restart_params: list = field(default=None, repr=False)

    def as_record(self) -> dict:
        body = {
            "config": dataclasses.asdict(self.config),
            "m": self.m,
            "bound": self.bound,
            "penalty": self.penalty,
            "restarts": [r.as_record() for r in self.records],
            "best_index": self.best_index,
            "best_risk": self.best_risk,
            "probe_max": self.probe_max,
            "feasible": self.feasible,
            "gt_risk": self.gt_risk,
        }
        if self.encoder_image is not None:
            body["encoder_image"] = [float(v) for v in self.encoder_image]
        return body


def train_erm(gt: GroundTruth, spec: MeasureSpec, tc: TrainConfig, config: FnoConfig = None, tag=(), start: int = 0):
    """Best-of-restarts projected gradient descent on the empirical risk.

    Each restart owns a derived random stream, takes plain gradient steps
    from the penalized risk, and projects back into the parameter box after
    every step.  Non-finite iterates abort the restart; if every restart
    aborts, the run is infeasible.  Returns (best parameters, report).
    """
    if config is None:
        config = select_architecture(tc.m, spec, gt, b_cap=tc.b_cap)
    bound = min(config.bound, tc.bound)
    inputs = sample_inputs(spec, tc.n_train, start=start)
    targets = gt.evaluate_batch(inputs)
    dataset = [
        (u, GridFunction(targets[j], "cube-periodic")) for j, u in enumerate(inputs)
    ]
    mask = _trainable_mask(config, tc.trainable) if tc.trainable is not None else None

    records, kept = [], []
    for r in range(tc.restarts):
        rng = seeds.stream(tc.seed, "erm", *tag, r)
        params = project_params(FnoParams.random(config, rng, scale=tc.init_scale), bound)
        if mask is not None:
            params = params.from_vector(params.to_vector() * mask)
        diverged, steps_run, penalized = False, 0, math.inf
        for step in range(tc.steps):
            try:
                penalized, grad = grad_empirical_risk(params, dataset, omega=tc.penalty)
            except ValidationError:
                diverged = True
                break
            gvec = grad.to_vector()
            if mask is not None:
                gvec = gvec * mask
            vec = params.to_vector() - tc.lr * gvec
            if not np.all(np.isfinite(vec)):
                diverged = True
                break
            params = project_params(params.from_vector(vec), bound)
            steps_run = step + 1
            if tc.target_risk > 0 and steps_run % tc.check_every == 0:
                if fno.empirical_risk(params, dataset) <= tc.target_risk:
                    break
        if diverged:
            records.append(RestartRecord(r, math.inf, math.inf, steps_run, True, math.nan))
            kept.append(None)
            continue
        final = fno.empirical_risk(params, dataset)
        records.append(RestartRecord(r, final, penalized, steps_run, False, params.sup_norm()))
        kept.append(params)

    if all(rec.diverged for rec in records):
        raise InfeasibleError(f"all {tc.restarts} restarts diverged")

    best_index = min(range(len(records)), key=lambda i: records[i].final_risk)
    best = kept[best_index]

    probes = sample_inputs(spec, 10 * tc.n_train, start=start + tc.n_train)
    probe_max = _output_sup(best, probes)

    gt_risk = None
    if gt.kind == "fixed-fno" and gt.m_star is not None and tc.m >= gt.m_star:
        if gt.params.sup_norm() <= bound:
            gt_risk = fno.empirical_risk(gt.params, dataset)

    report = TrainReport(
        config=config,
        m=tc.m,
        bound=bound,
        penalty=tc.penalty,
        records=records,
        best_index=best_index,
        best_risk=records[best_index].final_risk,
        probe_max=probe_max,
        feasible=probe_max <= 2.0,
        gt_risk=gt_risk,
        restart_params=kept,
    )
    return best, report


# ---- statistical audits and sweeps ----------------------------------------------


@dataclass(frozen=True)
class RateSweepRow:
    """One sample-size point of an error-vs-n sweep."""

    n: int
    emp_risk: float
    pop_risk: float
    stderr: float
    eps: float
    eps_capped: bool
    bound_lhs: float
    bound_rhs: float
    passed: bool
    feasible: bool
    error: str = None
    params: FnoParams = field(default=None, repr=False, compare=False)

    def as_record(self) -> dict:
        body = dataclasses.asdict(self)
        body.pop("params")
        return body


@dataclass
class RateSweepReport:
    """Error-vs-n sweep with the generalization-bound audit per row.

    The fitted slope is least squares of log(root population risk) against
    log n, matching the n^{-rate} statements, which bound the root of the
    squared-error risk; the predicted exponent is reported, not asserted.
    """

    gamma: float
    rows: list
    slope: float
    predicted_exponent: float

    def as_record(self) -> dict:
        return {
            "gamma": self.gamma,
            "rows": [row.as_record() for row in self.rows],
            "slope": self.slope,
            "predicted_exponent": self.predicted_exponent,
        }


def predicted_rate_exponent(gamma: float) -> float:
    """The theory's error exponent: -1/(2(1+8/gamma)); -1/2 as gamma -> inf."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma!r}")
    if math.isinf(gamma):
        return -0.5
    return -1.0 / (2.0 * (1.0 + 8.0 / gamma))


def rate_sweep(
    gt: GroundTruth,
    spec: MeasureSpec,
    gamma: float,
    schedule,
    tc: TrainConfig,
    config: FnoConfig = None,
    repeats: int = 1,
) -> RateSweepReport:
    """Train at each n of the schedule and audit L <= 2 hat-L + 144 eps.

    Every row draws a fresh training block; the Monte Carlo estimate reuses
    one common block across rows so that consecutive rows are comparable
    under the same noise.  Rows that fail to train are recorded and skipped
    by the slope fit; the sweep continues.  An explicit ``config`` fixes the
    architecture across rows (the class index still tracks the theory's m
    and is raised to cover the architecture's shape).

    With ``repeats`` > 1 each row averages over that many independent
    training sets (disjoint index blocks, disjoint Monte Carlo blocks); the
    row then estimates the expected risk at sample size n — the quantity the
    rate statements bound — and ``stderr`` is the standard error of that
    mean, which folds Monte Carlo noise and draw-to-draw variation together.
    The checkpointed parameters are the first repetition's.
    """
    schedule = [int(n) for n in schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or not schedule:
        raise ValidationError("the n-schedule must be strictly increasing and nonempty")
    if min(schedule) < 4:
        raise ValidationError("each sweep point needs n >= 4")
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma!r}")
    if not isinstance(repeats, int) or repeats < 1:
        raise ValidationError(f"repeats must be a positive integer, got {repeats!r}")
    stride = 100_000 // repeats
    if 11 * max(schedule) >= stride:
        raise ValidationError(
            f"repeats={repeats} exhausts the per-row index budget at n={max(schedule)}"
        )

    rows = []
    for i, n in enumerate(schedule):
        eps, capped = bounds.epsilon_for_sample_count(
            n, gamma, dim=spec.dim, input_norm_bound=spec.norm_bound
        )
        theory_m = 1 if math.isinf(gamma) else math.ceil((2.0 / eps) ** (1.0 / gamma))
        m_row = max(theory_m, gt.m_star or 1)
        if config is not None:
            m_row = max(m_row, config.kappa**config.dim, config.d_c, config.depth)
        row_tc = dataclasses.replace(tc, m=m_row, n_train=n)
        try:
            emp_runs, pop_runs, mc_errs, feasible = [], [], [], True
            params = None
            for r in range(repeats):
                tag = ("sweep", n) if repeats == 1 else ("sweep", n, r)
                rep_params, rep = train_erm(
                    gt, spec, row_tc, config=config, tag=tag,
                    start=100_000 * (i + 1) + stride * r,
                )
                pop_r, stderr_r = population_risk(
                    rep_params, gt, spec, count=tc.n_mc,
                    start=MONTE_CARLO_BLOCK + r * tc.n_mc,
                )
                emp_runs.append(rep.best_risk)
                pop_runs.append(pop_r)
                mc_errs.append(stderr_r)
                feasible = feasible and rep.feasible
                if params is None:
                    params = rep_params
            emp = float(np.mean(emp_runs))
            pop = float(np.mean(pop_runs))
            if repeats > 1:
                stderr = float(np.std(pop_runs, ddof=1) / math.sqrt(repeats))
            else:
                stderr = mc_errs[0]
            lhs, rhs = pop, 2.0 * emp + 144.0 * eps
            rows.append(
                RateSweepRow(
                    n=n,
                    emp_risk=emp,
                    pop_risk=pop,
                    stderr=stderr,
                    eps=eps,
                    eps_capped=capped,
                    bound_lhs=lhs,
                    bound_rhs=rhs,
                    passed=lhs <= rhs,
                    feasible=feasible,
                    params=params,
                )
            )
        except OpwidthError as exc:
            rows.append(
                RateSweepRow(
                    n=n,
                    emp_risk=math.nan,
                    pop_risk=math.nan,
                    stderr=math.nan,
                    eps=eps,
                    eps_capped=capped,
                    bound_lhs=math.nan,
                    bound_rhs=math.nan,
                    passed=False,
                    feasible=False,
                    error=str(exc),
                )
            )

    good = [(row.n, row.pop_risk) for row in rows if row.error is None and row.pop_risk > 0]
    slope = None
    if len(good) >= 2:
        log_n = np.log([n for n, _ in good])
        log_err = 0.5 * np.log([p for _, p in good])
        slope = float(np.polyfit(log_n, log_err, 1)[0])
    return RateSweepReport(
        gamma=gamma,
        rows=rows,
        slope=slope,
        predicted_exponent=predicted_rate_exponent(gamma),
    )


def functional_mode(gt: GroundTruth, spec: MeasureSpec, tc: TrainConfig, config: FnoConfig = None, start: int = 0):
    """Scalar-output training: constant-output targets, plus the encoder image.

    The training path is exactly `train_erm`; the report additionally carries
    the n-vector (G(u_1), ..., G(u_n)) of target constants — the data a
    sampling decoder would see — realizing the encode/decode picture behind
    the width comparison.
    """
    if gt.d_out != 1:
        raise ValidationError("functional mode needs a scalar-output ground truth")
    for u in sample_inputs(spec, 3, start=NORMALIZATION_BLOCK):
        values = gt.evaluate(u).values
        if float(np.ptp(values)) > 1e-9:
            raise ValidationError("functional mode needs constant-valued outputs")
    params, report = train_erm(gt, spec, tc, config=config, tag=("functional",), start=start)
    inputs = sample_inputs(spec, tc.n_train, start=start)
    image = gt.evaluate_batch(inputs)
    report.encoder_image = np.asarray(
        [float(np.mean(image[j])) for j in range(len(inputs))]
    )
    return params, report


def decomposition_audit(
    report: TrainReport,
    gt: GroundTruth,
    spec: MeasureSpec,
    tc: TrainConfig,
    start: int = 0,
    mc_count: int = 2000,
) -> dict:
    """Audit L(best) <= 2 max_family (L - hat L) + 1e-6 over the restart family.

    This is the error decomposition with zero approximation term (in-class
    target), the supremum replaced by its maximum over the trained restarts
    — a lower surrogate, so the audited inequality is the strongest checkable
    one; the best net itself belongs to the family.  The 1e-6 slack absorbs
    the computed minimizer's residual training risk, so the audit is meant
    for runs trained well past that level.
    """
    inputs = sample_inputs(spec, tc.n_train, start=start)
    family = [
        (rec, params)
        for rec, params in zip(report.records, report.restart_params)
        if params is not None
    ]
    if not family:
        raise ValidationError("decomposition audit needs at least one trained restart")
    gaps, best_pop = [], None
    for rec, params in family:
        emp = empirical_risk(params, gt, inputs)
        pop, _ = population_risk(params, gt, spec, count=mc_count)
        gaps.append(pop - emp)
        if rec.index == report.best_index:
            best_pop = pop
    lhs = best_pop
    rhs = 2.0 * max(gaps) + 1e-6
    return {
        "lhs": lhs,
        "rhs": rhs,
        "max_gap": max(gaps),
        "family_size": len(family),
        "passed": lhs <= rhs,
    }


def estimation_probability_audit(
    gt: GroundTruth,
    spec: MeasureSpec,
    gamma: float,
    eps: float = 1.0,
    repetitions: int = 40,
    tc: TrainConfig = None,
    delta: float = 0.05,
) -> dict:
    """Repeat the high-probability bound L <= 2 hat-L + 144 eps across seeds.

    The sample count n comes from the sample-size planner at (eps, gamma,
    delta); each repetition draws fresh data, trains briefly (the inequality
    is uniform over the class, so any member may be tested), and records the
    indicator.  Returns the success count next to the per-seed rows.
    """
    plan = bounds.sample_size(
        eps, gamma, dim=spec.dim, input_norm_bound=spec.norm_bound, delta=delta
    )
    if tc is None:
        tc = TrainConfig(m=plan.m, steps=100, restarts=1, n_mc=2000)
    rows, successes = [], 0
    for r in range(repetitions):
        rep_tc = dataclasses.replace(
            tc, m=max(plan.m, gt.m_star or 1), n_train=plan.n, seed=r
        )
        params, rep = train_erm(gt, spec, rep_tc, tag=("estprob", r), start=200_000 * (r + 1))
        pop, stderr = population_risk(params, gt, spec, count=tc.n_mc)
        lhs, rhs = pop, 2.0 * rep.best_risk + 144.0 * eps
        ok = bool(lhs <= rhs)
        successes += ok
        rows.append(
            {"seed": r, "emp_risk": rep.best_risk, "pop_risk": pop, "stderr": stderr, "passed": ok}
        )
    return {
        "eps": eps,
        "gamma": gamma,
        "delta": delta,
        "n": plan.n,
        "m": plan.m,
        "repetitions": repetitions,
        "successes": successes,
        "rate": successes / repetitions,
        "rows": rows,
    }


# ---- point-data decoder ---------------------------------------------------------


def fit_pointdata_fno(samples, values, grid: GridFunction, rng=None, steps: int = 300, lr: float = 0.1) -> GridFunction:
    """Reconstruct a function from point samples with a small trained network.

    The scattered values are first rasterized by nearest-sample lookup on the
    network's own power-of-two grid; a compact network is then trained to
    reproduce that field and its output is resampled onto the requested grid.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    vals = np.asarray(values, dtype=np.float64)
    if pts.shape[0] != vals.shape[0]:
        raise ValidationError("samples and values must have matching lengths")
    rng = rng if rng is not None else np.random.default_rng(0)
    dim = grid.dim

    fit_res = 1 << max(3, (grid.resolution - 1).bit_length())
    fit_res = min(fit_res, 256 if dim == 1 else 64)
    config = FnoConfig(
        dim=dim,
        d_in=1,
        d_out=1,
        d_c=4,
        kappa=min(4, fit_res // 2 - 1),
        depth=2,
        resolution=fit_res,
        bound=4.0,
        activation="gate",
    )

    from scipy.spatial import cKDTree

    tree = cKDTree(pts)
    axis = np.arange(fit_res) / fit_res
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    fit_points = np.stack([m.ravel() for m in mesh], axis=-1)
    _, idx = tree.query(fit_points)
    target = GridFunction(vals[idx].reshape((1,) + (fit_res,) * dim), "cube-periodic")

    params = FnoParams.random(config, rng, scale=0.3)
    dataset = [(target, target)]
    for _ in range(steps):
        _, grad = grad_empirical_risk(params, dataset)
        vec = params.to_vector() - lr * grad.to_vector()
        params = project_params(params.from_vector(vec), config.bound)

    fitted = forward(params, target).values[0]
    fit_tree = cKDTree(fit_points)
    _, back = fit_tree.query(grid.grid_points())
    out = fitted.ravel()[back].reshape((1,) + grid.values.shape[1:])
    return GridFunction(out, grid.domain)
