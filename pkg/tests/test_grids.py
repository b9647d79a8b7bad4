"""Grid-function container, norms, serialization, and seed streams."""

import math

import numpy as np
import pytest

from opwidth import grids, seeds
from opwidth.errors import FormatError, ValidationError
from opwidth.grids import GridFunction, NormSpec


def _sine(resolution=64):
    return GridFunction.from_callable(
        lambda x: np.sin(2 * np.pi * x[..., 0]), dim=1, resolution=resolution
    )


class TestGridFunction:
    def test_shape_and_metadata(self):
        f = _sine()
        assert f.dim == 1
        assert f.channels == 1
        assert f.resolution == 64
        assert f.values.shape == (1, 64)
        assert f.spacing() == pytest.approx(1.0 / 64)

    def test_axis_points_left_endpoints(self):
        f = _sine(8)
        assert np.allclose(f.axis_points(), np.arange(8) / 8.0)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValidationError):
            GridFunction(np.zeros((1, 12)), "cube-periodic")

    def test_rejects_unknown_domain(self):
        with pytest.raises(ValidationError):
            GridFunction(np.zeros((1, 16)), "torus")

    def test_rejects_ragged_axes(self):
        with pytest.raises(ValidationError):
            GridFunction(np.zeros((1, 16, 8)), "cube-periodic")

    def test_from_callable_2d(self):
        f = GridFunction.from_callable(
            lambda x: x[..., 0] + 2.0 * x[..., 1], dim=2, resolution=16
        )
        assert f.values.shape == (1, 16, 16)
        assert f.values[0, 3, 5] == pytest.approx(3 / 16 + 2 * 5 / 16)


class TestNorms:
    def test_l2_of_sine_is_inv_sqrt2(self):
        # ∫ sin² = 1/2 and the trapezoid rule is exact for this trig polynomial
        assert grids.norm(_sine(256), NormSpec.lp(2)) == pytest.approx(
            1 / math.sqrt(2), abs=1e-12
        )

    def test_l1_of_sine(self):
        # ∫₀¹ |sin 2πx| dx = 2/π
        assert grids.norm(_sine(4096), NormSpec.lp(1)) == pytest.approx(
            2 / math.pi, abs=1e-6
        )

    def test_sup_norm(self):
        f = GridFunction(np.array([[1.0, -3.0, 2.0, 0.5]]), "cube-periodic")
        assert grids.norm(f, NormSpec.lp(grids.INF)) == 3.0

    def test_float_inf_rejected_in_favor_of_sentinel(self):
        with pytest.raises(ValidationError):
            NormSpec.lp(math.inf)

    def test_constant_function_all_p(self):
        f = GridFunction(np.full((1, 32), 2.5), "cube-periodic")
        for p in (1, 2, 3.5, grids.INF):
            assert grids.norm(f, NormSpec.lp(p)) == pytest.approx(2.5)

    def test_multichannel_uses_euclidean_magnitude(self):
        # (3,4) everywhere has pointwise magnitude 5
        vals = np.stack([np.full(16, 3.0), np.full(16, 4.0)])
        f = GridFunction(vals, "cube-periodic")
        assert grids.norm(f, NormSpec.lp(2)) == pytest.approx(5.0)

    def test_sobolev_norm_counts_derivatives(self):
        f = _sine(512)
        w12 = grids.norm(f, NormSpec.wkq(1, 2))
        l2 = grids.norm(f, NormSpec.lp(2))
        # the k=1 seminorm adds the 2π-scaled derivative mass
        assert w12 > l2
        assert w12 == pytest.approx(
            (l2**2 + (2 * math.pi) ** 2 * 0.5) ** 0.5, rel=1e-3
        )

    def test_ck_norm_of_sine(self):
        f = _sine(2048)
        c1 = grids.norm(f, NormSpec.ck(1))
        assert c1 == pytest.approx(2 * math.pi, rel=1e-3)

    def test_lp_distance_symmetry_and_identity(self):
        f, g = _sine(64), _sine(64)
        assert grids.lp_distance(f, g) == 0.0
        h = GridFunction(g.values + 1.0, "cube-periodic")
        assert grids.lp_distance(f, h) == pytest.approx(grids.lp_distance(h, f))

    def test_lp_distance_rejects_mismatched_grids(self):
        with pytest.raises(ValidationError):
            grids.lp_distance(_sine(64), _sine(32))

    def test_invalid_exponent_rejected(self):
        with pytest.raises(ValidationError):
            NormSpec.lp(0.5)


class TestFiniteDifferences:
    def test_first_derivative_of_sine(self):
        f = _sine(1024)
        df = grids.finite_diff_derivative(f, (1,))
        target = GridFunction.from_callable(
            lambda x: 2 * np.pi * np.cos(2 * np.pi * x[..., 0]), dim=1, resolution=1024
        )
        assert np.max(np.abs(df.values - target.values)) < 1e-4

    def test_mixed_partial_2d(self):
        f = GridFunction.from_callable(
            lambda x: np.sin(2 * np.pi * x[..., 0]) * np.cos(2 * np.pi * x[..., 1]),
            dim=2,
            resolution=256,
        )
        dxy = grids.finite_diff_derivative(f, (1, 1))
        target = GridFunction.from_callable(
            lambda x: -((2 * np.pi) ** 2)
            * np.cos(2 * np.pi * x[..., 0])
            * np.sin(2 * np.pi * x[..., 1]),
            dim=2,
            resolution=256,
        )
        assert np.max(np.abs(dxy.values - target.values)) < 2e-2

    def test_multi_indices_enumeration(self):
        idx = grids.multi_indices(2, 2)
        assert (0, 0) in idx and (1, 1) in idx and (2, 0) in idx
        assert all(sum(nu) <= 2 for nu in idx)
        assert len(idx) == 6


class TestSerialization:
    def test_roundtrip_bytes_exact(self):
        rng = np.random.default_rng(3)
        f = GridFunction(rng.standard_normal((2, 16, 16)), "cube-periodic")
        g = grids.from_bytes(grids.to_bytes(f))
        assert g.domain == f.domain
        assert g.values.dtype == f.values.dtype
        assert np.array_equal(g.values, f.values)

    def test_roundtrip_preserves_signed_zero(self):
        f = GridFunction(np.array([[0.0, -0.0, 1.0, 2.0]]), "cube-periodic")
        g = grids.from_bytes(grids.to_bytes(f))
        assert np.signbit(g.values[0, 1])
        assert not np.signbit(g.values[0, 0])

    def test_rebytes_identical(self):
        rng = np.random.default_rng(4)
        f = GridFunction(rng.standard_normal((1, 32)), "gaussian-ambient")
        blob = grids.to_bytes(f)
        assert grids.to_bytes(grids.from_bytes(blob)) == blob

    def test_bad_magic_rejected(self):
        blob = grids.to_bytes(_sine(16))
        with pytest.raises(FormatError):
            grids.from_bytes(b"XXXXXXXX" + blob[8:])

    def test_truncated_payload_rejected(self):
        blob = grids.to_bytes(_sine(16))
        with pytest.raises(FormatError):
            grids.from_bytes(blob[:-8])

    def test_trailing_garbage_rejected(self):
        blob = grids.to_bytes(_sine(16))
        with pytest.raises(FormatError):
            grids.from_bytes(blob + b"\x00")

    def test_save_load_file(self, tmp_path):
        f = _sine(32)
        path = tmp_path / "field.bin"
        grids.save(f, path)
        g = grids.load(path)
        assert np.array_equal(g.values, f.values)

    def test_descriptor_roundtrip(self):
        f = _sine(16)
        g = grids.from_descriptor(grids.to_descriptor(f))
        assert np.array_equal(g.values, f.values)
        assert g.domain == f.domain


class TestSeedStreams:
    def test_same_path_same_draws(self):
        a = seeds.stream(7, "x", 3).standard_normal(5)
        b = seeds.stream(7, "x", 3).standard_normal(5)
        assert np.array_equal(a, b)

    def test_different_path_different_draws(self):
        a = seeds.stream(7, "x", 3).standard_normal(5)
        b = seeds.stream(7, "x", 4).standard_normal(5)
        assert not np.array_equal(a, b)

    def test_string_and_int_parts_mix(self):
        a = seeds.stream(0, "erm", "sweep", 128).uniform(size=3)
        b = seeds.stream(0, "erm", "sweep", 128).uniform(size=3)
        assert np.array_equal(a, b)

    def test_spawn_count(self):
        gens = seeds.spawn(5, "pool", count=4)
        assert len(gens) == 4
        draws = {float(g.uniform()) for g in gens}
        assert len(draws) == 4
