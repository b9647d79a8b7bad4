"""Tests for the closed-form stability constants, the metric-entropy chain,
and the randomized audits that challenge each bound.

Frozen constants below were produced by an independent oracle (mpmath at 40
significant digits, hand-expanded formulas) and cross-checked against the
module before being pinned here.
"""

import dataclasses
import math

import numpy as np
import pytest
from pytest import approx

from opwidth import bounds
from opwidth.errors import ValidationError
from opwidth.fno import FnoConfig, param_count

# ---------------------------------------------------------------------------
# Frozen oracle values.
#
# Reference architecture: dim=1, d_in=d_out=1, d_c=2, kappa=1, depth=1, B=1.
# Its parameter-Lipschitz constant at |u| = 1 is 3 * 4^3 * (1 + sqrt(2)),
# and its parameter count is 14.
LAMBDA_AT_ONE = 463.5290039756342
LAMBDA_AT_ZERO = 271.5290039756343
LAMBDA_LOG_AT_ONE = 6.138868959047325
# dim=1, d_c=4, kappa=1, depth=160, B=10 at |u| = 1: log exceeds log(1e300).
OVERFLOW_LOG = 715.8572847394207
# architecture_covering_log(reference, eps=0.25, M=1) = 14 (log 2 + log lambda + log 4)
ARCH_LOG_QUARTER = 115.05634701018025
# sigma_m_covering_log at (m, eps, dim, M)
SIGMA_LOGS = {
    (2, 0.5, 1, 1.0): 931.9861658585978,
    (3, 0.25, 1, 2.0): 6845.919305992045,
    (4, 0.1, 2, 1.0): 37123.874492993775,
    (5, 1.0, 1, 0.5): 89182.02879523985,
}
# sample_size(eps=0.5, gamma=4, dim=1, M=1, delta=0.5)
PLAN_M = 2
PLAN_N = 3730
PLAN_REQUIRED_LOG = 931.9861658585978
# entropy_shape_constants(dim=1, M=1)
C_ARCH_1D = 163.5651580388477
C_SIGMA_1D = 152.27295967440622
# entropy_report(m=2, eps=0.5, dim=1, M=1) headline shapes (kappa = 2 here:
# the largest cutoff with kappa^dim <= m)
PAPER_ARCH_BOUND = 28608.12661568132
PAPER_SIGMA_BOUND = 40530.26790675184


def reference_config(**overrides) -> FnoConfig:
    base = dict(
        dim=1, d_in=1, d_out=1, d_c=2, kappa=1, depth=1,
        resolution=8, bound=1.0, activation="gate",
    )
    base.update(overrides)
    return FnoConfig(**base)


class TestParameterLipschitz:
    def test_frozen_example(self):
        lam = bounds.parameter_lipschitz(reference_config(), 1.0)
        assert lam.value == approx(LAMBDA_AT_ONE, rel=1e-14)
        assert lam.log_value == approx(LAMBDA_LOG_AT_ONE, rel=1e-14)
        assert not lam.overflowed

    def test_hand_formula(self):
        # (L+2) (2 d_c B)^(L+2) (|u| + (2 kappa)^(d/2)) with L=1, d_c=2, B=1.
        lam = bounds.parameter_lipschitz(reference_config(), 1.0)
        assert lam.value == approx(3 * 4**3 * (1 + math.sqrt(2.0)), rel=1e-14)

    def test_zero_input_level(self):
        lam = bounds.parameter_lipschitz(reference_config(), 0.0)
        assert lam.value == approx(LAMBDA_AT_ZERO, rel=1e-14)
        assert lam.value == approx(192.0 * math.sqrt(2.0), rel=1e-14)

    def test_log_track_consistent(self):
        lam = bounds.parameter_lipschitz(reference_config(depth=3), 2.5)
        assert math.exp(lam.log_value) == approx(lam.value, rel=1e-12)

    def test_overflow_flag(self):
        cfg = reference_config(d_c=4, depth=160, bound=10.0)
        lam = bounds.parameter_lipschitz(cfg, 1.0)
        assert lam.overflowed
        assert lam.value == math.inf
        assert lam.log_value == approx(OVERFLOW_LOG, rel=1e-14)
        hand = math.log(162) + 162 * math.log(80.0) + math.log(1 + math.sqrt(2.0))
        assert lam.log_value == approx(hand, rel=1e-14)

    def test_monotone_in_input_and_depth(self):
        shallow = bounds.parameter_lipschitz(reference_config(), 1.0)
        deeper = bounds.parameter_lipschitz(reference_config(depth=2), 1.0)
        larger = bounds.parameter_lipschitz(reference_config(), 2.0)
        assert deeper.value > shallow.value
        assert larger.value > shallow.value

    def test_negative_input_level_rejected(self):
        with pytest.raises(ValidationError):
            bounds.parameter_lipschitz(reference_config(), -0.1)


class TestLayerConstants:
    def test_layer_bounds_by_hand(self):
        cfg = reference_config(d_c=2, kappa=2, depth=2, resolution=16)
        table = bounds.layer_lipschitz_bounds(cfg)
        assert table["linear"] == approx(2.0)
        assert table["spectral"] == approx(2.0)
        assert table["bias_norm"] == approx(math.sqrt(2.0) * 2.0)  # sqrt(2) (2*2)^(1/2)
        assert table["layer"] == approx(4.0)
        assert table["hidden_composite"] == approx([4.0, 16.0])
        assert table["end_to_end"] == approx(4.0 * 16.0)

    def test_hidden_state_bounds_by_hand(self):
        cfg = reference_config(d_c=2, kappa=2, depth=2, resolution=16)
        # (2 d_c B)^(ell+1) (|u| + (2 kappa)^(1/2)) = 4^(ell+1) * 3 at |u| = 1.
        assert bounds.hidden_state_bounds(cfg, 1.0) == approx([12.0, 48.0, 192.0])

    def test_hidden_state_bounds_reject_negative(self):
        with pytest.raises(ValidationError):
            bounds.hidden_state_bounds(reference_config(), -1.0)


class TestCoveringLogs:
    def test_cube_frozen(self):
        assert bounds.cube_covering_log(1.0, 0.5, 2) == approx(
            2.0 * math.log(4.0), rel=1e-15
        )

    def test_cube_hand_formula(self):
        assert bounds.cube_covering_log(3.0, 0.1, 7) == approx(
            7.0 * math.log(60.0), rel=1e-14
        )

    def test_cube_halving_adds_n_log2(self):
        base = bounds.cube_covering_log(1.0, 0.2, 11)
        halved = bounds.cube_covering_log(1.0, 0.1, 11)
        assert halved - base == approx(11.0 * math.log(2.0), abs=1e-12)

    def test_cube_rejects_nonpositive_radius(self):
        with pytest.raises(ValidationError):
            bounds.cube_covering_log(1.0, 0.0, 2)

    def test_architecture_frozen(self):
        value = bounds.architecture_covering_log(reference_config(), 0.25, 1.0)
        assert value == approx(ARCH_LOG_QUARTER, rel=1e-14)

    def test_architecture_hand_formula(self):
        # d_theta (log 2B + log lambda(M) - log eps) with d_theta = 14.
        d_theta, _ = param_count(reference_config())
        assert d_theta == 14
        hand = 14.0 * (math.log(2.0) + math.log(LAMBDA_AT_ONE) + math.log(4.0))
        value = bounds.architecture_covering_log(reference_config(), 0.25, 1.0)
        assert value == approx(hand, rel=1e-12)

    def test_architecture_halving_increment(self):
        cfg = reference_config()
        coarse = bounds.architecture_covering_log(cfg, 0.25, 1.0)
        fine = bounds.architecture_covering_log(cfg, 0.125, 1.0)
        assert fine - coarse == approx(14.0 * math.log(2.0), abs=1e-9)

    def test_sigma_frozen_table(self):
        for (m, eps, dim, level), expected in SIGMA_LOGS.items():
            value = bounds.sigma_m_covering_log(m, eps, dim, level)
            assert value == approx(expected, rel=1e-13), (m, eps, dim, level)

    def test_sigma_hand_route_m2(self):
        # Union over depths 1..2 at width 2, cutoff kappa=1 fails (2^1 <= 2
        # admits kappa=2... the rule takes the largest kappa with kappa^d <= m),
        # so kappa = 2 and M = (2*2-1)^1 = 3.  Counts add, logs combine by
        # log-sum-exp.
        m, eps, level = 2, 0.5, 1.0
        kappa, mode_count = 2, 3
        logs = []
        for depth in (1, 2):
            d_theta = m * 1 + depth * (m * m + mode_count * m * m + mode_count * m) + 1 * m
            log_lam = (
                math.log(depth + 2)
                + (depth + 2) * (math.log(2 * m) + float(m))
                + math.log(level + (2.0 * kappa) ** 0.5)
            )
            logs.append(d_theta * (math.log(2.0) + float(m) + log_lam - math.log(eps)))
        peak = max(logs)
        hand = peak + math.log(sum(math.exp(x - peak) for x in logs))
        assert bounds.sigma_m_covering_log(m, eps, 1, level) == approx(hand, rel=1e-12)

    def test_sigma_union_dominates_each_class(self):
        report = bounds.entropy_report(3, 0.5, 1, 1.0)
        assert report.sigma_log >= max(report.class_logs)
        assert report.arch_log == report.class_logs[-1]

    def test_sigma_monotone(self):
        coarse = bounds.sigma_m_covering_log(2, 0.5, 1, 1.0)
        fine = bounds.sigma_m_covering_log(2, 0.25, 1, 1.0)
        wider = bounds.sigma_m_covering_log(3, 0.5, 1, 1.0)
        assert fine > coarse
        assert wider > coarse

    def test_sigma_log_bound_override(self):
        default = bounds.sigma_m_covering_log(3, 0.5, 1, 1.0)
        capped = bounds.sigma_m_covering_log(3, 0.5, 1, 1.0, log_bound=0.0)
        assert capped < default

    def test_sigma_validation(self):
        with pytest.raises(ValidationError):
            bounds.sigma_m_covering_log(0, 0.5, 1, 1.0)
        with pytest.raises(ValidationError):
            bounds.sigma_m_covering_log(2.0, 0.5, 1, 1.0)
        with pytest.raises(ValidationError):
            bounds.sigma_m_covering_log(2, -0.5, 1, 1.0)
        with pytest.raises(ValidationError):
            bounds.sigma_m_covering_log(1, 0.5, 1, 1.0, d_in=2)

    def test_dispatcher_routes(self):
        cfg = reference_config()
        via_config = bounds.covering_number_log(0.25, config=cfg, input_norm_bound=1.0)
        assert via_config == bounds.architecture_covering_log(cfg, 0.25, 1.0)
        via_m = bounds.covering_number_log(0.5, m=2, dim=1, input_norm_bound=1.0)
        assert via_m == bounds.sigma_m_covering_log(2, 0.5, 1, 1.0)

    def test_dispatcher_rejects_ambiguity(self):
        with pytest.raises(ValidationError):
            bounds.covering_number_log(0.5)
        with pytest.raises(ValidationError):
            bounds.covering_number_log(
                0.5, config=reference_config(), m=2, dim=1, input_norm_bound=1.0
            )


class TestEntropyShapes:
    def test_constants_frozen(self):
        c_arch, c_sigma = bounds.entropy_shape_constants(1, 1.0)
        assert c_arch == approx(C_ARCH_1D, rel=1e-15)
        assert c_sigma == approx(C_SIGMA_1D, rel=1e-15)

    def test_constants_hand_formula(self):
        ln2, ln3 = math.log(2.0), math.log(3.0)
        mass = math.log(1.0 + math.sqrt(2.0)) / ln2
        c_arch, c_sigma = bounds.entropy_shape_constants(1, 1.0)
        assert c_arch == approx(10.0 * (13.0 + ln3 / ln2 + mass + 0.5), rel=1e-15)
        assert c_sigma == approx(10.0 * (6.5 + ln3 / ln2 + 4.0 / ln2 + mass) + 1.0, rel=1e-15)

    def test_constants_reject_negative_level(self):
        with pytest.raises(ValidationError):
            bounds.entropy_shape_constants(1, -1.0)

    def test_report_frozen_fields(self):
        report = bounds.entropy_report(2, 0.5, 1, 1.0)
        assert report.sigma_log == approx(PLAN_REQUIRED_LOG, rel=1e-13)
        assert report.paper_arch_bound == approx(PAPER_ARCH_BOUND, rel=1e-13)
        assert report.paper_sigma_bound == approx(PAPER_SIGMA_BOUND, rel=1e-13)
        assert report.sample_size == PLAN_N

    def test_report_paper_shapes_by_hand(self):
        report = bounds.entropy_report(2, 0.5, 1, 1.0)
        c_arch, c_sigma = bounds.entropy_shape_constants(1, 1.0)
        # kappa = 2, m = 2: C_arch kappa^d m^4 (log(2 m^2 kappa / eps) + m).
        assert report.paper_arch_bound == approx(
            c_arch * 2 * 16 * (math.log(2.0 * 4 * 2 / 0.5) + 2.0), rel=1e-13
        )
        assert report.paper_sigma_bound == approx(
            c_sigma * 2.0**7 * math.log(2.0 * 2 / 0.5), rel=1e-13
        )

    def test_exact_chain_below_paper_shapes(self):
        for m in range(1, 7):
            for dim in (1, 2):
                for eps in (1.0, 0.3, 0.05):
                    for level in (0.5, 1.0, 3.0):
                        report = bounds.entropy_report(m, eps, dim, level)
                        assert report.arch_log <= report.paper_arch_bound
                        assert report.sigma_log <= report.paper_sigma_bound

    def test_report_rejects_radius_outside_unit(self):
        for eps in (0.0, -0.5, 1.5):
            with pytest.raises(ValidationError):
                bounds.entropy_report(2, eps, 1, 1.0)


class TestSampleSize:
    def test_frozen_plan(self):
        plan = bounds.sample_size(0.5, 4.0, dim=1, input_norm_bound=1.0)
        assert plan.m == PLAN_M
        assert plan.n == PLAN_N
        assert plan.required_log == approx(PLAN_REQUIRED_LOG, rel=1e-13)
        assert plan.risk_bound == approx(145.0 * 0.5)
        assert plan.estimation_slack == approx(144.0 * 0.5)
        assert plan.delta == 0.5

    def test_budget_hand_formula(self):
        plan = bounds.sample_size(0.5, 4.0, dim=1, input_norm_bound=1.0)
        # m = ceil((2/eps)^(1/gamma)); n = ceil((log(1/delta) + 2 log N)/eps).
        assert plan.m == math.ceil((2.0 / 0.5) ** 0.25)
        hand_n = math.ceil((math.log(2.0) + 2.0 * plan.required_log) / 0.5)
        assert plan.n == hand_n

    def test_rate_exponent(self):
        assert bounds.sample_size(
            0.5, 4.0, dim=1, input_norm_bound=1.0
        ).rate_exponent == approx(1.0 / 6.0)
        assert bounds.sample_size(
            0.5, 2.0, dim=1, input_norm_bound=1.0
        ).rate_exponent == approx(0.1)
        infinite = bounds.sample_size(0.5, math.inf, dim=1, input_norm_bound=1.0)
        assert infinite.rate_exponent == approx(0.5)
        assert infinite.m == 1

    def test_budget_grows_as_accuracy_tightens(self):
        coarse = bounds.sample_size(0.5, 2.0, dim=1, input_norm_bound=1.0)
        fine = bounds.sample_size(0.25, 2.0, dim=1, input_norm_bound=1.0)
        assert fine.n > coarse.n
        assert fine.m >= coarse.m

    def test_budget_grows_as_confidence_tightens(self):
        loose = bounds.sample_size(0.5, 2.0, dim=1, input_norm_bound=1.0, delta=0.5)
        tight = bounds.sample_size(0.5, 2.0, dim=1, input_norm_bound=1.0, delta=0.05)
        assert tight.n > loose.n

    def test_validation(self):
        with pytest.raises(ValidationError):
            bounds.sample_size(1.5, 2.0, dim=1, input_norm_bound=1.0)
        with pytest.raises(ValidationError):
            bounds.sample_size(0.0, 2.0, dim=1, input_norm_bound=1.0)
        with pytest.raises(ValidationError):
            bounds.sample_size(0.5, 0.0, dim=1, input_norm_bound=1.0)
        with pytest.raises(ValidationError):
            bounds.sample_size(0.5, 2.0, dim=1, input_norm_bound=1.0, delta=0.0)


class TestEpsilonInversion:
    def test_inverts_frozen_plan(self):
        eps, capped = bounds.epsilon_for_sample_count(
            PLAN_N, 4.0, dim=1, input_norm_bound=1.0
        )
        assert not capped
        budget = bounds.sample_size(eps, 4.0, dim=1, input_norm_bound=1.0).n
        assert budget <= PLAN_N
        # The bisection is geometrically tight: a hair below eps the budget
        # must already exceed the sample count.
        over = bounds.sample_size(
            eps * (1.0 - 1e-6), 4.0, dim=1, input_norm_bound=1.0
        ).n
        assert over > PLAN_N

    def test_inversion_never_exceeds_planned_accuracy(self):
        plan = bounds.sample_size(0.25, 2.0, dim=1, input_norm_bound=1.0)
        eps, capped = bounds.epsilon_for_sample_count(
            plan.n, 2.0, dim=1, input_norm_bound=1.0
        )
        assert not capped
        assert eps <= plan.eps

    def test_tiny_budget_is_capped(self):
        eps, capped = bounds.epsilon_for_sample_count(3, 4.0, dim=1, input_norm_bound=1.0)
        assert capped
        assert eps == 1.0
        assert bounds.sample_size(1.0, 4.0, dim=1, input_norm_bound=1.0).n > 3

    def test_validation(self):
        for bad in (0, -1, 2.5):
            with pytest.raises(ValidationError):
                bounds.epsilon_for_sample_count(bad, 4.0, dim=1, input_norm_bound=1.0)


class TestFlipFunction:
    def test_hand_values(self):
        assert float(bounds.flip_function(3.0, 1.0, 0.5)) == approx(2.0 / 3.5, rel=1e-15)
        assert float(bounds.flip_function(1.0, 3.0, 0.5)) == 0.0
        assert float(bounds.flip_function(0.0, 0.0, 0.5)) == 0.0

    def test_broadcasts(self):
        a = np.array([1.0, 2.0, 3.0])
        out = bounds.flip_function(a, 1.5, 0.5)
        assert out == approx(np.maximum(a - 1.5, 0.0) / (a + 0.5))

    def test_stays_below_one_on_quadrant(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0.0, 50.0, size=500)
        b = rng.uniform(0.0, 50.0, size=500)
        values = bounds.flip_function(a, b, 0.1)
        assert np.all(values >= 0.0)
        assert np.all(values < 1.0)

    def test_rejects_nonpositive_stabilizer(self):
        with pytest.raises(ValidationError):
            bounds.flip_function(1.0, 1.0, 0.0)

    def test_gradient_audit(self):
        result = bounds.audit_flip_gradient(eps=0.1, resolution=201)
        assert result.passed
        assert result.violations == 0
        assert result.worst_ratio < 1.0


class TestRiskDifferenceAudit:
    @staticmethod
    def constant_field(value: float):
        from opwidth.grids import GridFunction

        return GridFunction(np.full((1, 8), value), "cube-periodic")

    def test_hand_example(self):
        u = self.constant_field(1.0)
        psi = lambda _: self.constant_field(1.5)
        psi_prime = lambda _: self.constant_field(1.0)
        g = lambda _: self.constant_field(0.5)
        g_prime = lambda _: self.constant_field(0.8)
        report = bounds.audit_risk_lipschitz(psi, psi_prime, g, g_prime, [u])
        # Risks are (1.5-0.5)^2 = 1 and (1.0-0.8)^2 = 0.04; sups are 0.5, 0.3.
        assert report["lhs"] == approx(0.96, rel=1e-12)
        assert report["rhs"] == approx(6.0 * 0.8 + 1e-9, rel=1e-12)
        assert report["sup_model_dataset"] == approx(0.5, rel=1e-12)
        assert report["sup_target_dataset"] == approx(0.3, rel=1e-12)
        assert report["passed"]
        assert report["margin"] == approx(report["rhs"] - report["lhs"])

    def test_probes_sharpen_sup_estimates(self):
        from opwidth.grids import GridFunction

        u = GridFunction(np.full((1, 8), 1.0), "cube-periodic")
        probe = GridFunction(np.full((1, 8), 3.0), "cube-periodic")
        psi = lambda v: v
        psi_prime = lambda v: GridFunction(v.values * 0.5, "cube-periodic")
        g = lambda v: GridFunction(v.values * 0.9, "cube-periodic")
        g_prime = lambda v: GridFunction(v.values * 0.8, "cube-periodic")
        report = bounds.audit_risk_lipschitz(
            psi, psi_prime, g, g_prime, [u], probes=[probe]
        )
        assert report["sup_model_probes"] > report["sup_model_dataset"]
        assert report["sup_target_probes"] > report["sup_target_dataset"]
        # The certified inequality only ever uses dataset sups.
        assert report["rhs"] == approx(
            6.0 * (report["sup_model_dataset"] + report["sup_target_dataset"]) + 1e-9
        )

    def test_model_class_precondition(self):
        u = self.constant_field(1.0)
        oversized = lambda _: self.constant_field(2.5)
        inside = lambda _: self.constant_field(0.5)
        with pytest.raises(ValidationError):
            bounds.audit_risk_lipschitz(oversized, inside, inside, inside, [u])

    def test_target_class_precondition(self):
        u = self.constant_field(1.0)
        model = lambda _: self.constant_field(1.5)
        big_target = lambda _: self.constant_field(1.2)
        small = lambda _: self.constant_field(0.5)
        with pytest.raises(ValidationError):
            bounds.audit_risk_lipschitz(model, model, big_target, small, [u])

    def test_empty_dataset_rejected(self):
        f = lambda _: self.constant_field(0.5)
        with pytest.raises(ValidationError):
            bounds.audit_risk_lipschitz(f, f, f, f, [])


AUDIT_NAMES = [
    "linear-map",
    "spectral-map",
    "bias-norm",
    "layer-lipschitz",
    "parameter-direction",
    "hidden-growth",
    "output-bound",
    "parameter-lipschitz",
    "risk-difference",
    "flip-gradient",
]


@pytest.fixture(scope="module")
def results():
    cfg = FnoConfig(
        dim=1, d_in=1, d_out=1, d_c=2, kappa=2, depth=2,
        resolution=16, bound=1.0, activation="gate",
    )
    return bounds.run_bound_audits(cfg, n_probes=25, seed=0)


class TestBoundAudits:
    def test_every_audit_reports_zero_violations(self, results):
        assert [r.name for r in results] == AUDIT_NAMES
        for result in results:
            assert result.violations == 0, result.name
            assert result.passed, result.name
            assert result.worst_ratio <= 1.0, result.name
            assert result.probes >= 25, result.name

    def test_records_expose_margin(self, results):
        for result in results:
            record = result.as_record()
            assert record["margin"] == approx(1.0 - result.worst_ratio)
            assert record["passed"] is True
            assert set(record) == {
                "name", "formula", "bound", "measured", "margin",
                "probes", "violations", "passed",
            }

    def test_worst_probe_echoed(self, results):
        for result in results:
            assert result.measured_at_worst <= result.bound_at_worst
            assert result.worst_ratio == approx(
                result.measured_at_worst / result.bound_at_worst
            )

    def test_seeded_determinism(self):
        cfg = FnoConfig(
            dim=1, d_in=1, d_out=1, d_c=2, kappa=2, depth=1,
            resolution=16, bound=1.0, activation="gate",
        )
        first = bounds.run_bound_audits(cfg, which=["layer-lipschitz"], n_probes=5, seed=3)
        second = bounds.run_bound_audits(cfg, which=["layer-lipschitz"], n_probes=5, seed=3)
        other = bounds.run_bound_audits(cfg, which=["layer-lipschitz"], n_probes=5, seed=4)
        assert first[0] == second[0]
        assert first[0].worst_ratio != other[0].worst_ratio

    def test_subset_selection_preserves_order(self):
        cfg = FnoConfig(
            dim=1, d_in=1, d_out=1, d_c=2, kappa=2, depth=1,
            resolution=16, bound=1.0, activation="gate",
        )
        picked = bounds.run_bound_audits(
            cfg, which=["output-bound", "linear-map"], n_probes=3, seed=0
        )
        assert [r.name for r in picked] == ["output-bound", "linear-map"]

    def test_unknown_audit_rejected(self):
        with pytest.raises(ValidationError):
            bounds.run_bound_audits(reference_config(), which=["no-such-audit"])

    def test_certificate_assembles_all_pieces(self):
        cfg = FnoConfig(
            dim=1, d_in=1, d_out=1, d_c=2, kappa=2, depth=2,
            resolution=16, bound=1.0, activation="gate",
        )
        cert = bounds.lipschitz_certificate(cfg, 1.0, n_probes=10, seed=1)
        assert cert.passed
        assert sorted(cert.measured) == sorted(AUDIT_NAMES)
        assert cert.hidden_bounds == approx([12.0, 48.0, 192.0])
        assert cert.parameter_bound.value == approx(4 * 4.0**4 * 3.0)
        assert cert.layer_bounds["layer"] == approx(4.0)
