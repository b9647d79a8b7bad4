"""Command-line runner: one verb per experiment, JSON jobs, reproducible reports.

Usage: ``opwidth <verb> --job <file.json> --out <dir> [--seed N]``.

The job file is a JSON object; verb parameters may sit under a ``params`` key
or directly at the top level.  ``--seed`` overrides the job's seed.  Every
random draw inside a verb flows from that one root seed through named
streams (verb name plus indices), so any sub-experiment can be replayed in
isolation.

Each run writes ``report.json`` plus verb-specific artifacts into the output
directory.  The report body (job echo, checks, artifact names, results)
excludes timestamps and the output location — both vary without changing the
experiment — so repeated runs of one job hash identically.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or parse error,
3 internal error.  ``OPWIDTH_THREADS`` caps BLAS threading; it must be read
before the numerical stack loads, which is why the verb implementations are
imported inside the handlers rather than at module scope.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

from .errors import FormatError, OpwidthError, ValidationError

VERBS = (
    "bump-verify",
    "fooling",
    "gaussian-fooling",
    "hypercube",
    "embed-check",
    "fno-forward",
    "grad-check",
    "audit",
    "covering",
    "sample-size",
    "erm-train",
    "rate-sweep",
    "report",
)

# Verbs whose results depend on random draws; their jobs must carry a seed.
SEEDED_VERBS = frozenset(
    (
        "fooling",
        "gaussian-fooling",
        "hypercube",
        "embed-check",
        "fno-forward",
        "grad-check",
        "audit",
        "erm-train",
        "rate-sweep",
    )
)

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


class UsageError(Exception):
    """A malformed job or invalid parameters; maps to exit code 2."""


@dataclasses.dataclass(frozen=True)
class JobSpec:
    """A validated experiment request: verb, parameters, seed, output dir."""

    verb: str
    params: dict
    seed: int
    out: Path

    def __post_init__(self):
        if self.verb not in VERBS:
            raise UsageError(f"unknown verb {self.verb!r}; expected one of {', '.join(VERBS)}")
        if not isinstance(self.params, dict):
            raise UsageError(f"params must be a JSON object, got {type(self.params).__name__}")
        if self.seed is not None and not isinstance(self.seed, int):
            raise UsageError(f"seed must be an integer, got {self.seed!r}")
        if self.verb in SEEDED_VERBS and self.seed is None:
            raise UsageError(f"verb {self.verb!r} is stochastic and needs a seed")

    def echo(self) -> dict:
        """The body-stable job echo (the output location is not identity)."""
        return {"verb": self.verb, "params": self.params, "seed": self.seed}


def _apply_thread_cap() -> None:
    cap = os.environ.get("OPWIDTH_THREADS")
    if cap is None:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise UsageError(f"OPWIDTH_THREADS must be a positive integer, got {cap!r}")
    for var in _THREAD_VARS:
        os.environ.setdefault(var, cap)


def load_job(path, verb: str, seed_override) -> JobSpec:
    """Parse and validate a job file; nothing is written on failure."""
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise UsageError(f"cannot read job file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed job JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError(f"job file {path} must hold a JSON object")
    job_verb = raw.get("verb", verb)
    if job_verb != verb:
        raise UsageError(f"job file says verb {job_verb!r} but the command line says {verb!r}")
    params = dict(raw.get("params", {}))
    for key, value in raw.items():
        if key not in ("verb", "params", "seed", "out"):
            params.setdefault(key, value)
    seed = seed_override if seed_override is not None else raw.get("seed")
    return JobSpec(verb=verb, params=params, seed=seed, out=None)


# ---- parameter helpers ----------------------------------------------------------


def _fno_config(overrides: dict, **defaults):
    from .fno import FnoConfig

    merged = dict(defaults)
    merged.update(overrides or {})
    try:
        return FnoConfig(**merged)
    except TypeError as exc:
        raise UsageError(f"bad architecture parameters: {exc}") from exc


def _measure_spec(params: dict):
    from . import erm

    fields = dict(params.get("measure", {}))
    try:
        return erm.MeasureSpec(**fields)
    except TypeError as exc:
        raise UsageError(f"bad measure parameters: {exc}") from exc


def _ground_truth(params: dict, spec, seed: int):
    from . import erm

    truth = dict(params.get("truth", {"kind": "frozen-fno"}))
    kind = truth.pop("kind", "frozen-fno")
    if kind == "frozen-fno":
        config = _fno_config(
            truth.pop("config", {}),
            dim=spec.dim,
            d_in=1,
            d_out=1,
            d_c=2,
            kappa=2,
            depth=1,
            resolution=spec.resolution,
            bound=10.0,
            activation="gate",
        )
        return erm.frozen_operator_truth(config, spec, seed=truth.pop("seed", seed))
    if kind == "constant":
        return erm.constant_functional_truth(truth.pop("value", 0.5), spec)
    raise UsageError(f"unknown ground-truth kind {kind!r}")


def _train_config(params: dict, **defaults):
    from . import erm

    fields = dict(defaults)
    fields.update(params.get("train", {}))
    if "trainable" in fields and fields["trainable"] is not None:
        fields["trainable"] = tuple(fields["trainable"])
    try:
        return erm.TrainConfig(**fields)
    except TypeError as exc:
        raise UsageError(f"bad training parameters: {exc}") from exc


def _multi_indices(dim: int, up_to: int):
    """All derivative multi-indices with 1 <= |nu| <= up_to."""
    out = []

    def rec(prefix, remaining):
        if len(prefix) == dim:
            if sum(prefix) >= 1:
                out.append(tuple(prefix))
            return
        for part in range(remaining + 1):
            rec(prefix + [part], remaining - part)

    rec([], up_to)
    return sorted(out, key=lambda nu: (sum(nu), nu))


# ---- verb handlers ---------------------------------------------------------------
# Each handler returns (checks, results, sweep_key, artifacts) where artifacts
# is a list of (filename, writer) pairs invoked after the computation succeeds.


def _run_bump_verify(params, seed):
    import numpy as np

    from . import bumps
    from .fooling import gamma_policy
    from .reports import lower_check, upper_check

    dims = [int(d) for d in params.get("dims", [1, 2])]
    subdivisions = [int(m) for m in params.get("subdivisions", [2, 3, 4])]
    k_values = [int(k) for k in params.get("k_values", [1, 2, 3])]
    p = params.get("p", 2.0)
    checks, results = [], {"configs": []}
    for dim in dims:
        for m in subdivisions:
            for k in k_values:
                gamma = params.get("gamma") or gamma_policy(k, p, dim)
                family = bumps.build_bump_family(dim, m, gamma)
                label = f"d={dim},m={m},k={k}"
                n_cells = family.partition.n_cells

                # supports: the bump of one cell vanishes off that cell, exactly
                res = 128 if dim == 1 else 48
                axes = [np.linspace(0.0, 1.0, res, endpoint=False) + 0.5 / res] * dim
                mesh = np.meshgrid(*axes, indexing="ij")
                points = np.stack([g.ravel() for g in mesh], axis=-1)
                cells = np.arange(n_cells)
                inside = family.partition.cell_of(points)
                leak = 0.0
                probe_cells = [0, n_cells // 2, n_cells - 1]
                values = family.evaluate(np.array(probe_cells), points)
                for row, cell in enumerate(probe_cells):
                    off = values[row][inside != cell]
                    if off.size:
                        leak = max(leak, float(np.max(np.abs(off))))
                checks.append(upper_check(f"support-disjoint[{label}]", leak, 0.0))

                # mass: the certified plateau lower bound, within quadrature tol
                exact = family.lp_mass_exact(p)
                claim = family.lp_mass_lower_bound(p)
                checks.append(lower_check(f"plateau-mass[{label}]", exact, claim, tol=1e-3))

                # derivatives: dense-grid sup against the closed-form bound
                for nu in _multi_indices(dim, k):
                    bound = family.derivative_sup_bound(np.array(nu), k)
                    dres = 2001 if dim == 1 else 121
                    daxes = [np.linspace(0.0, 1.0, dres)] * dim
                    dmesh = np.meshgrid(*daxes, indexing="ij")
                    dpoints = np.stack([g.ravel() for g in dmesh], axis=-1)
                    vals = family.evaluate(np.array([0]), dpoints, nu=np.array(nu))
                    measured = float(np.max(np.abs(vals)))
                    checks.append(
                        upper_check(f"derivative-bound[{label},nu={nu}]", measured, bound)
                    )
                results["configs"].append(
                    {"dim": dim, "m": m, "k": k, "gamma": gamma, "mass": exact, "claim": claim}
                )
    return checks, results, None, []


def _run_fooling(params, seed, kind="cube"):
    import numpy as np

    from . import fooling, seeds
    from .reports import lower_check, upper_check

    dim = int(params.get("dim", 1))
    n = int(params.get("n", 9))
    k = int(params.get("k", 2))
    q = params.get("q", 2.0)
    p = params.get("p", 2.0)
    trials = int(params.get("trials", 3))
    decoders = list(params.get("decoders", ["nearest", "rbf", "fno"]))
    build = fooling.fooling_pair if kind == "cube" else fooling.gaussian_fooling_pair

    checks, rows = [], []
    for t in range(trials):
        rng = seeds.stream(seed, kind, t)
        base = rng.random((n, dim))
        samples = base if kind == "cube" else np.clip(rng.standard_normal((n, dim)), -4, 4)
        pair = build(samples, k, q, p, rng=rng)
        half = pair.claimed_separation / 2.0
        checks.append(
            lower_check(
                f"separation-certificate[trial={t}]",
                pair.certificate["measured_separation"],
                pair.certificate["claimed_separation"],
                key=float(t),
            )
        )
        values = pair.evaluate_f(samples)
        grid = pair.f_grid()
        for name in decoders:
            if name not in fooling.DECODER_ZOO:
                raise UsageError(f"unknown decoder {name!r}")
            if name == "fno":
                decoded = fooling.decode_fno(samples, values, grid, rng=seeds.stream(seed, kind, t, name))
            else:
                decoded = fooling.DECODER_ZOO[name](samples, values, grid)
            err_f, err_g = fooling.witness_errors(pair, decoded)
            checks.append(
                lower_check(
                    f"witness[{name},trial={t}]", max(err_f, err_g), half, tol=1e-9, key=float(t)
                )
            )
            rows.append((t, name, err_f, err_g, half))

    results = {"trials": trials, "decoders": decoders}
    if kind == "gaussian":
        from . import transport

        draws = int(params.get("draws", 10_000))
        ks = transport.pushforward_ks(
            pair.transport, seeds.stream(seed, "ks"), draws
        )
        checks.append(upper_check("pushforward-ks", ks, 0.02))
        weighted = fooling.transport_quadrature_lp(pair, p)
        cube_view = pair.family.superposition_grid(
            pair.hosts, pair.amplitude * pair.alpha, pair.resolution
        )
        from .grids import NormSpec, norm

        cube_norm = norm(cube_view, NormSpec.lp(p))
        checks.append(
            upper_check("weighted-norm-identity", abs(weighted - cube_norm), 1e-3)
        )
        results.update({"ks": ks, "weighted_norm": weighted, "cube_norm": cube_norm})

    slope_req = params.get("slope")
    if slope_req:
        fit = fooling.separation_slope(
            k, q, p, dim,
            subdivision_range=tuple(slope_req.get("subdivisions", (2, 3, 4, 5, 6))),
            rng=seeds.stream(seed, kind, "slope"),
        )
        target = fit["expected_slope"]
        checks.append(
            upper_check("slope-relative-error", abs(fit["slope"] - target), 0.15 * abs(target))
        )
        results["slope"] = fit["slope"]
        results["expected_slope"] = target

    def write_rows(path):
        with open(path, "w") as handle:
            handle.write("trial,decoder,err_f,err_g,half_separation\n")
            for row in rows:
                handle.write(f"{row[0]},{row[1]}," + ",".join(repr(v) for v in row[2:]) + "\n")

    return checks, results, "trial", [("trials.csv", write_rows)]


def _run_hypercube(params, seed):
    import numpy as np

    from . import hypercube, seeds
    from .reports import lower_check, upper_check

    n = int(params.get("n", 16))
    s = int(params.get("s", 2))
    p = params.get("p", 2.0)
    dim = int(params.get("dim", 1))
    family = params.get("family", "trig")
    if family == "trig":
        system = hypercube.build_trig_hypercube(n, s, p, dim=dim)
    elif family == "bump":
        system = hypercube.build_bump_hypercube(n, s, dim=dim)
    else:
        raise UsageError(f"unknown hypercube family {family!r}")

    gram = system.dual_matrix()
    bi_err = float(np.max(np.abs(gram - np.eye(n))))
    checks = [upper_check("biorthogonality", bi_err, 1e-8)]
    results = {"n": n, "s": s, "family": family, "alpha": getattr(system, "alpha", None)}

    demo = hypercube.log_hardness_demo(
        k=int(params.get("k", 1)),
        s=s,
        budgets=tuple(params.get("budgets", (4, 64, 256))),
        rng=seeds.stream(seed, "hypercube", "demo"),
    )
    for row, floor in zip(demo["rows"], demo["floors"]):
        checks.append(
            lower_check(
                f"hardness-floor[n={row['budget']}]",
                row["witness"],
                floor,
                tol=1e-12,
                key=float(row["budget"]),
            )
        )
    results["hardness"] = {
        "exponent": demo["exponent"],
        "rows": demo["rows"],
        "floors": demo["floors"],
    }

    def write_rows(path):
        with open(path, "w") as handle:
            handle.write("budget,dim,witness,floor\n")
            for row, floor in zip(demo["rows"], demo["floors"]):
                handle.write(f"{row['budget']},{row['dim']},{row['witness']!r},{floor!r}\n")

    return checks, results, "n", [("budgets.csv", write_rows)]


def _run_embed_check(params, seed):
    import numpy as np

    from . import hypercube, seeds
    from .reports import upper_check

    n = int(params.get("n", 8))
    s = int(params.get("s", 2))
    p = params.get("p", 2.0)
    points = int(params.get("points", 10))
    system = hypercube.build_trig_hypercube(n, s, p, dim=1)
    rng = seeds.stream(seed, "embed")

    # an arbitrary smooth functional on the coefficient cube, batched per
    # the embed_functional contract: (batch, n) -> (batch,)
    weights = rng.uniform(-1.0, 1.0, n)

    def f(y):
        return np.cos(np.atleast_2d(np.asarray(y, dtype=np.float64)) @ weights)

    iota_f, h_map = hypercube.embed_functional(f, system)
    worst = 0.0
    for _ in range(points):
        y = rng.random(n)
        worst = max(worst, abs(float(f(y)[0]) - iota_f(h_map(y))))
    checks = [upper_check("round-trip-identity", worst, 1e-10)]
    return checks, {"n": n, "points": points}, None, []


def _run_fno_forward(params, seed):
    import numpy as np

    from . import fno, seeds
    from .grids import GridFunction
    from .reports import upper_check

    config = _fno_config(
        params.get("config", {}),
        dim=1, d_in=1, d_out=1, d_c=3, kappa=3, depth=2, resolution=32,
        bound=2.0, activation="gate",
    )
    rng = seeds.stream(seed, "fno-forward")
    net = fno.FnoParams.random(config, rng, scale=0.5)
    # constant biases keep the operator translation-equivariant
    modes, _, _ = fno.mode_table(config.kappa, config.dim)
    zero_idx = modes.index((0,) * config.dim)
    for ell in range(config.depth):
        mode0 = net.biases[ell][zero_idx].copy()
        net.biases[ell][:] = 0.0
        net.biases[ell][zero_idx] = mode0.real + 0.0j

    u = GridFunction(
        rng.standard_normal((config.d_in,) + (config.resolution,) * config.dim),
        "cube-periodic",
    )
    out = fno.forward(net, u)

    shift = tuple(int(x) for x in rng.integers(1, config.resolution, config.dim))
    spatial = tuple(range(1, config.dim + 1))
    rolled_in = GridFunction(np.roll(u.values, shift, axis=spatial), "cube-periodic")
    lhs = fno.forward(net, rolled_in).values
    rhs = np.roll(out.values, shift, axis=spatial)
    equiv = float(np.max(np.abs(lhs - rhs)))

    exact, printed = fno.param_count(config)
    blob = fno.serialize(net)
    back = fno.deserialize(blob)
    vec_err = int(np.any(back.to_vector() != net.to_vector()))
    blob_err = int(fno.serialize(back) != blob)

    checks = [
        upper_check("translation-equivariance", equiv, 1e-10),
        upper_check("parameter-count-bound", float(exact), float(printed)),
        upper_check("deserialize-vector-exact", float(vec_err), 0.0),
        upper_check("reserialize-bytes-exact", float(blob_err), 0.0),
    ]
    results = {
        "param_count": exact,
        "param_bound": printed,
        "output_norm": float(np.sqrt(np.mean(out.values**2))),
    }
    return checks, results, None, [("checkpoint.bin", lambda path: Path(path).write_bytes(blob))]


def _run_grad_check(params, seed):
    import numpy as np

    from . import fno, seeds
    from .grids import GridFunction
    from .reports import upper_check

    config = _fno_config(
        params.get("config", {}),
        dim=1, d_in=1, d_out=1, d_c=2, kappa=2, depth=2, resolution=16,
        bound=2.0, activation="gate",
    )
    coords = int(params.get("coords", 20))
    h = params.get("h", 1e-5)
    omega = params.get("omega", 0.5)
    rng = seeds.stream(seed, "grad-check")
    net = fno.FnoParams.random(config, rng, scale=0.5)
    shape = (config.resolution,) * config.dim
    dataset = [
        (
            GridFunction(rng.standard_normal((config.d_in,) + shape), "cube-periodic"),
            GridFunction(rng.standard_normal((config.d_out,) + shape), "cube-periodic"),
        )
        for _ in range(3)
    ]
    _, grad = fno.grad_empirical_risk(net, dataset, omega=omega)
    gvec = grad.to_vector()
    base = net.to_vector()
    picks = rng.choice(base.size, size=min(coords, base.size), replace=False)
    worst = 0.0
    for i in picks:
        for sign, store in ((1.0, "hi"), (-1.0, "lo")):
            vec = base.copy()
            vec[i] += sign * h
            risk = fno.empirical_risk(net.from_vector(vec), dataset, omega=omega)
            if store == "hi":
                hi = risk
            else:
                lo = risk
        fd = (hi - lo) / (2.0 * h)
        err = abs(gvec[i] - fd) / max(1.0, abs(gvec[i]), abs(fd))
        worst = max(worst, err)
    checks = [upper_check("max-relative-gradient-error", worst, 1e-5)]
    return checks, {"coords": int(len(picks)), "h": h, "omega": omega}, None, []


def _run_audit(params, seed):
    from . import bounds
    from .reports import CheckRecord

    config = _fno_config(
        params.get("config", {}),
        dim=1, d_in=1, d_out=1, d_c=3, kappa=3, depth=2, resolution=32,
        bound=2.0, activation="gate",
    )
    which = params.get("which")
    probes = int(params.get("probes", 200))
    audits = bounds.run_bound_audits(config, which=which, n_probes=probes, seed=seed)
    checks, results = [], {}
    for audit in audits:
        rec = audit.as_record()
        checks.append(
            CheckRecord(
                name=rec["name"],
                bound=rec["bound"],
                measured=rec["measured"],
                margin=rec["margin"],
                passed=rec["passed"],
            )
        )
        results[rec["name"]] = rec
    return checks, results, None, []


def _run_covering(params, seed):
    from . import bounds
    from .reports import upper_check

    eps = params.get("eps", 0.5)
    input_norm_bound = params.get("input_norm_bound", 1.0)
    checks, results = [], {}
    if "config" in params:
        config = _fno_config(params["config"])
        log_n = bounds.covering_number_log(eps, config=config, input_norm_bound=input_norm_bound)
        log_half = bounds.covering_number_log(eps / 2.0, config=config, input_norm_bound=input_norm_bound)
        from .fno import param_count

        d_theta, _ = param_count(config)
        increment = log_half - log_n
        expected = d_theta * math.log(2.0)
        checks.append(upper_check("halving-increment", abs(increment - expected), 1e-9))
        results.update({"log_covering": log_n, "d_theta": d_theta})
    else:
        m = int(params.get("m", 2))
        dim = int(params.get("dim", 1))
        report = bounds.entropy_report(m, eps, dim, input_norm_bound)
        checks.append(upper_check("exact-below-paper-arch", report.arch_log, report.paper_arch_bound))
        checks.append(upper_check("exact-below-paper-sigma", report.sigma_log, report.paper_sigma_bound))
        checks.append(upper_check("chain-consistency", report.arch_log, report.sigma_log))
        results.update(
            {
                "m": m,
                "eps": eps,
                "class_logs": list(report.class_logs),
                "arch_log": report.arch_log,
                "sigma_log": report.sigma_log,
                "paper_arch_bound": report.paper_arch_bound,
                "paper_sigma_bound": report.paper_sigma_bound,
                "sample_size": report.sample_size,
            }
        )
    return checks, results, None, []


def _run_sample_size(params, seed):
    from . import bounds
    from .reports import lower_check

    eps = params.get("eps", 1.0)
    gamma = params.get("gamma", 2.0)
    plan = bounds.sample_size(
        eps,
        gamma,
        dim=int(params.get("dim", 1)),
        input_norm_bound=params.get("input_norm_bound", 1.0),
        delta=params.get("delta", 0.5),
    )
    required = (math.log(1.0 / plan.delta) + 2.0 * plan.required_log) / plan.eps
    checks = [lower_check("sample-count-covers-requirement", float(plan.n), required)]
    results = dataclasses.asdict(plan)
    return checks, results, None, []


def _run_erm_train(params, seed):
    from . import erm, fno
    from .reports import lower_check, upper_check

    spec = _measure_spec(params)
    gt = _ground_truth(params, spec, seed)
    tc = _train_config(params, m=gt.m_star or 1, seed=seed)
    config = _fno_config(params["architecture"]) if "architecture" in params else None
    if params.get("functional"):
        best, report = erm.functional_mode(gt, spec, tc, config=config)
    else:
        best, report = erm.train_erm(gt, spec, tc, config=config)

    checks = [upper_check("output-probe-bound", report.probe_max, 2.0)]
    if report.gt_risk is not None:
        checks.append(
            upper_check("erm-vs-in-class-target", report.best_risk, report.gt_risk, tol=1e-4)
        )
    if report.encoder_image is not None:
        checks.append(
            lower_check("encoder-image-length", float(len(report.encoder_image)), float(tc.n_train))
        )
    results = report.as_record()

    blob = fno.serialize(best)
    return checks, results, None, [("checkpoint.bin", lambda path: Path(path).write_bytes(blob))]


def _run_rate_sweep(params, seed):
    from . import erm, fno
    from .reports import lower_check, upper_check

    spec = _measure_spec(params)
    gt = _ground_truth(params, spec, seed)
    gamma = params.get("gamma", 2.0)
    schedule = [int(n) for n in params.get("schedule", (8, 16, 32, 64, 128))]
    tc = _train_config(params, m=gt.m_star or 1, seed=seed)
    config = _fno_config(params["architecture"]) if "architecture" in params else None
    repeats = int(params.get("repeats", 1))
    report = erm.rate_sweep(gt, spec, gamma, schedule, tc, config=config, repeats=repeats)

    checks, artifacts = [], []
    prev = None
    for row in report.rows:
        if row.error is not None:
            checks.append(
                upper_check(f"row-trained[n={row.n}]", 1.0, 0.0, key=float(row.n))
            )
            continue
        checks.append(
            upper_check(
                f"generalization-bound[n={row.n}]",
                row.bound_lhs,
                row.bound_rhs,
                key=float(row.n),
            )
        )
        checks.append(
            upper_check(f"feasible[n={row.n}]", 0.0 if row.feasible else 1.0, 0.0, key=float(row.n))
        )
        if prev is not None:
            slack = 2.0 * max(row.stderr, prev.stderr)
            checks.append(
                upper_check(
                    f"monotone[{prev.n}->{row.n}]",
                    row.pop_risk,
                    prev.pop_risk,
                    tol=slack,
                    key=float(row.n),
                )
            )
        prev = row
        blob = fno.serialize(row.params)
        artifacts.append(
            (f"checkpoint_n{row.n}.bin", lambda path, blob=blob: Path(path).write_bytes(blob))
        )

    audit_req = params.get("estimation_audit")
    results = report.as_record()
    if audit_req:
        audit_tc = _train_config(
            {"train": audit_req.get("train", {})}, m=1, steps=100, restarts=1, n_mc=2000, seed=seed
        )
        outcome = erm.estimation_probability_audit(
            gt,
            spec,
            gamma,
            eps=audit_req.get("eps", 1.0),
            repetitions=int(audit_req.get("repetitions", 40)),
            tc=audit_tc,
            delta=audit_req.get("delta", 0.05),
        )
        checks.append(lower_check("estimation-probability", outcome["rate"], 0.95))
        results["estimation_audit"] = outcome

    def write_sweep(path):
        with open(path, "w") as handle:
            handle.write("n,emp_risk,pop_risk,stderr,epsilon,bound_lhs,bound_rhs,pass\n")
            for row in report.rows:
                handle.write(
                    f"{row.n},{row.emp_risk!r},{row.pop_risk!r},{row.stderr!r},"
                    f"{row.eps!r},{row.bound_lhs!r},{row.bound_rhs!r},{int(row.passed)}\n"
                )

    artifacts.insert(0, ("sweep.csv", write_sweep))
    return checks, results, "n", artifacts


def _run_report(params, seed):
    from . import reports
    from .reports import lower_check

    paths = params.get("reports", [])
    if not isinstance(paths, list) or not paths:
        raise UsageError("the report verb needs a nonempty list of report paths")
    bodies = [reports.load_report_body(path) for path in paths]

    def write_plot(path):
        reports.emit_plot_data(bodies, path)

    # Validate before promising the artifact: emit into nothing via a dry run
    # is not possible with one pass, so collect the row count up front.
    keyed = sum(
        1
        for body in bodies
        for check in body["checks"]
        if check.get("key") is not None
    )
    keys = {body.get("sweep_key") for body in bodies}
    if None in keys or len(keys) != 1:
        raise ValidationError(f"inconsistent sweep keys across reports: {sorted(map(str, keys))}")
    if keyed == 0:
        raise ValidationError("no keyed check records to emit")
    checks = [lower_check("plot-rows-emitted", float(keyed), 1.0)]
    return checks, {"sources": list(map(str, paths)), "rows": keyed}, None, [("plot.csv", write_plot)]


_HANDLERS = {
    "bump-verify": _run_bump_verify,
    "fooling": lambda params, seed: _run_fooling(params, seed, kind="cube"),
    "gaussian-fooling": lambda params, seed: _run_fooling(params, seed, kind="gaussian"),
    "hypercube": _run_hypercube,
    "embed-check": _run_embed_check,
    "fno-forward": _run_fno_forward,
    "grad-check": _run_grad_check,
    "audit": _run_audit,
    "covering": _run_covering,
    "sample-size": _run_sample_size,
    "erm-train": _run_erm_train,
    "rate-sweep": _run_rate_sweep,
    "report": _run_report,
}


def run_job(job: JobSpec):
    """Execute one job: returns (exit_code, ExperimentReport or None).

    Artifacts and the report are written only after the computation finishes,
    so a failing run leaves no partial outputs.
    """
    from .reports import ExperimentReport

    started = time.perf_counter()
    handler = _HANDLERS[job.verb]
    checks, results, sweep_key, artifacts = handler(job.params, job.seed)
    report = ExperimentReport(
        job=job.echo(),
        checks=checks,
        artifacts=[name for name, _ in artifacts],
        results=results,
        sweep_key=sweep_key,
    )
    report.wall_time = time.perf_counter() - started
    if job.out is not None:
        job.out.mkdir(parents=True, exist_ok=True)
        for name, writer in artifacts:
            writer(job.out / name)
        report.write(job.out / "report.json")
    return (0 if report.passed else 1), report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="opwidth",
        description="Width-bound witnesses and audited operator learning, one verb per experiment.",
    )
    parser.add_argument("verb", choices=VERBS, help="experiment to run")
    parser.add_argument("--job", required=True, help="JSON job file")
    parser.add_argument("--out", required=True, help="output directory for report and artifacts")
    parser.add_argument("--seed", type=int, default=None, help="override the job's seed")
    args = parser.parse_args(argv)

    try:
        _apply_thread_cap()
        job = load_job(args.job, args.verb, args.seed)
        job = dataclasses.replace(job, out=Path(args.out))
    except UsageError as exc:
        print(f"opwidth: {exc}", file=sys.stderr)
        return 2

    try:
        code, report = run_job(job)
    except UsageError as exc:
        print(f"opwidth: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, FormatError) as exc:
        print(f"opwidth: invalid job for {job.verb}: {exc}", file=sys.stderr)
        return 2
    except OpwidthError as exc:
        print(f"opwidth: {job.verb} failed: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"opwidth: internal error in {job.verb}: {exc!r}", file=sys.stderr)
        return 3

    status = "pass" if code == 0 else "FAIL"
    print(f"opwidth {job.verb}: {len(report.checks)} checks, {status} ({report.wall_time:.2f}s)")
    return code


if __name__ == "__main__":
    sys.exit(main())
