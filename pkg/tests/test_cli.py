"""Tests for the job-file command line: parsing, exit codes, artifacts, and
the determinism of report bodies."""

import json
import math

import numpy as np
import pytest

from opwidth import bounds, cli, fno
from opwidth.cli import JobSpec, UsageError, load_job, main
from opwidth.reports import load_report_body


def write_job(tmp_path, payload, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestJobSpec:
    def test_unknown_verb(self):
        with pytest.raises(UsageError):
            JobSpec(verb="transmogrify", params={}, seed=0, out=None)

    def test_params_must_be_object(self):
        with pytest.raises(UsageError):
            JobSpec(verb="covering", params=[1, 2], seed=None, out=None)

    def test_seed_must_be_integer(self):
        with pytest.raises(UsageError):
            JobSpec(verb="audit", params={}, seed="zero", out=None)

    def test_stochastic_verbs_need_a_seed(self):
        with pytest.raises(UsageError):
            JobSpec(verb="audit", params={}, seed=None, out=None)
        JobSpec(verb="covering", params={}, seed=None, out=None)  # fine

    def test_echo_excludes_location(self):
        job = JobSpec(verb="audit", params={"probes": 5}, seed=3, out=None)
        assert job.echo() == {"verb": "audit", "params": {"probes": 5}, "seed": 3}


class TestLoadJob:
    def test_nested_form(self, tmp_path):
        path = write_job(tmp_path, {"verb": "covering", "params": {"m": 3}, "seed": 9})
        job = load_job(path, "covering", None)
        assert job.params == {"m": 3}
        assert job.seed == 9

    def test_flat_form_folds_into_params(self, tmp_path):
        path = write_job(tmp_path, {"m": 3, "eps": 0.25, "seed": 1})
        job = load_job(path, "covering", None)
        assert job.params == {"m": 3, "eps": 0.25}
        assert job.seed == 1

    def test_explicit_params_win_over_flat_keys(self, tmp_path):
        path = write_job(tmp_path, {"params": {"m": 3}, "m": 7})
        job = load_job(path, "covering", None)
        assert job.params["m"] == 3

    def test_seed_override_wins(self, tmp_path):
        path = write_job(tmp_path, {"params": {}, "seed": 1})
        assert load_job(path, "audit", 42).seed == 42

    def test_verb_mismatch(self, tmp_path):
        path = write_job(tmp_path, {"verb": "covering", "params": {}})
        with pytest.raises(UsageError):
            load_job(path, "audit", 0)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(UsageError):
            load_job(str(path), "covering", None)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            load_job(str(tmp_path / "absent.json"), "covering", None)

    def test_non_object_payload(self, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(UsageError):
            load_job(str(path), "covering", None)


class TestExitCodes:
    def test_malformed_job_exits_2_without_output(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        out = tmp_path / "out"
        assert main(["covering", "--job", str(bad), "--out", str(out)]) == 2
        assert "malformed job JSON" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_seed_exits_2(self, tmp_path, capsys):
        path = write_job(tmp_path, {"params": {"probes": 2}})
        out = tmp_path / "out"
        assert main(["audit", "--job", path, "--out", str(out)]) == 2
        assert "needs a seed" in capsys.readouterr().err
        assert not out.exists()

    def test_invalid_parameters_exit_2_without_output(self, tmp_path, capsys):
        # eps outside (0, 1] fails validation inside the handler.
        path = write_job(tmp_path, {"params": {"m": 2, "eps": 1.5}})
        out = tmp_path / "out"
        assert main(["covering", "--job", path, "--out", str(out)]) == 2
        assert "invalid job" in capsys.readouterr().err
        assert not out.exists()

    def test_infeasible_run_exits_3(self, tmp_path, capsys):
        path = write_job(
            tmp_path,
            {
                "params": {
                    "measure": {"dim": 1, "resolution": 16, "j_max": 4, "seed": 3},
                    "truth": {"kind": "constant", "value": 0.25},
                    "train": {"steps": 5, "lr": 1e308, "restarts": 1, "n_train": 4, "n_mc": 100},
                },
                "seed": 0,
            },
        )
        out = tmp_path / "out"
        with np.errstate(over="ignore"):
            code = main(["erm-train", "--job", path, "--out", str(out)])
        assert code == 3
        assert "failed" in capsys.readouterr().err
        assert not out.exists()

    def test_unknown_verb_is_an_argparse_error(self, tmp_path):
        path = write_job(tmp_path, {"params": {}})
        with pytest.raises(SystemExit):
            main(["transmogrify", "--job", path, "--out", str(tmp_path / "o")])

    def test_thread_cap_must_be_positive_integer(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("OPWIDTH_THREADS", "lots")
        path = write_job(tmp_path, {"params": {"m": 2}})
        assert main(["covering", "--job", path, "--out", str(tmp_path / "o")]) == 2
        assert "OPWIDTH_THREADS" in capsys.readouterr().err

    def test_thread_cap_fills_blas_variables(self, monkeypatch):
        monkeypatch.setenv("OPWIDTH_THREADS", "2")
        for var in cli._THREAD_VARS:
            monkeypatch.delenv(var, raising=False)
        cli._apply_thread_cap()
        import os

        assert all(os.environ[var] == "2" for var in cli._THREAD_VARS)


class TestCoveringVerb:
    def test_class_route_passes(self, tmp_path, capsys):
        path = write_job(tmp_path, {"params": {"m": 2, "eps": 0.5}})
        out = tmp_path / "out"
        assert main(["covering", "--job", path, "--out", str(out)]) == 0
        assert "pass" in capsys.readouterr().out
        body = load_report_body(out / "report.json")
        assert body["passed"] is True
        names = [c["name"] for c in body["checks"]]
        assert names == [
            "exact-below-paper-arch", "exact-below-paper-sigma", "chain-consistency",
        ]
        assert body["results"]["sample_size"] == 3730

    def test_architecture_route_checks_halving(self, tmp_path):
        config = dict(
            dim=1, d_in=1, d_out=1, d_c=2, kappa=1, depth=1,
            resolution=8, bound=1.0, activation="gate",
        )
        path = write_job(tmp_path, {"params": {"config": config, "eps": 0.25}})
        out = tmp_path / "out"
        assert main(["covering", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        assert body["checks"][0]["name"] == "halving-increment"
        assert body["results"]["d_theta"] == 14


class TestSampleSizeVerb:
    def test_plan_matches_library(self, tmp_path):
        path = write_job(
            tmp_path, {"params": {"eps": 0.5, "gamma": 4.0, "dim": 1, "input_norm_bound": 1.0}}
        )
        out = tmp_path / "out"
        assert main(["sample-size", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        plan = bounds.sample_size(0.5, 4.0, dim=1, input_norm_bound=1.0)
        assert body["results"]["m"] == plan.m
        assert body["results"]["n"] == plan.n
        assert body["checks"][0]["passed"] is True


class TestWitnessVerbs:
    """Small smoke runs of each witness verb through the full CLI path."""

    def test_bump_verify(self, tmp_path):
        path = write_job(
            tmp_path, {"params": {"dims": [1], "subdivisions": [2], "k_values": [1]}}
        )
        out = tmp_path / "out"
        assert main(["bump-verify", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        assert body["passed"] is True
        assert body["results"]["configs"][0]["dim"] == 1

    def test_fooling(self, tmp_path):
        path = write_job(
            tmp_path,
            {
                "params": {
                    "trials": 2,
                    "decoders": ["nearest"],
                    "slope": {"subdivisions": [2, 3]},
                },
                "seed": 0,
            },
        )
        out = tmp_path / "out"
        assert main(["fooling", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        assert body["passed"] is True
        assert (out / "trials.csv").exists()

    def test_gaussian_fooling(self, tmp_path):
        path = write_job(tmp_path, {"params": {"draws": 2000}, "seed": 0})
        out = tmp_path / "out"
        assert main(["gaussian-fooling", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        names = [c["name"] for c in body["checks"]]
        assert "pushforward-ks" in names
        assert body["passed"] is True

    def test_hypercube(self, tmp_path):
        path = write_job(tmp_path, {"params": {"n": 8, "budgets": [4, 16]}, "seed": 0})
        out = tmp_path / "out"
        assert main(["hypercube", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        assert body["passed"] is True
        assert (out / "budgets.csv").exists()

    def test_embed_check(self, tmp_path):
        # the embedded functional is evaluated both directly and through the
        # batched round-trip contract, so this covers both call shapes
        path = write_job(tmp_path, {"params": {"n": 8, "points": 4}, "seed": 0})
        out = tmp_path / "out"
        assert main(["embed-check", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        assert body["checks"][0]["name"] == "round-trip-identity"
        assert body["passed"] is True


class TestFnoForwardVerb:
    def job(self, tmp_path):
        return write_job(tmp_path, {"params": {}, "seed": 5})

    def test_writes_verifiable_checkpoint(self, tmp_path):
        out = tmp_path / "out"
        assert main(["fno-forward", "--job", self.job(tmp_path), "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        assert body["artifacts"] == ["checkpoint.bin"]
        params = fno.deserialize((out / "checkpoint.bin").read_bytes())
        assert params.config.resolution == 32
        names = [c["name"] for c in body["checks"]]
        assert "translation-equivariance" in names
        assert body["passed"] is True

    def test_bodies_are_deterministic(self, tmp_path):
        job = self.job(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["fno-forward", "--job", job, "--out", str(out_a)]) == 0
        assert main(["fno-forward", "--job", job, "--out", str(out_b)]) == 0
        payload_a = json.loads((out_a / "report.json").read_text())
        payload_b = json.loads((out_b / "report.json").read_text())
        assert payload_a["body_sha256"] == payload_b["body_sha256"]
        assert payload_a["body"] == payload_b["body"]

    def test_seed_changes_the_body(self, tmp_path):
        job = self.job(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["fno-forward", "--job", job, "--out", str(out_a)]) == 0
        assert main(["fno-forward", "--job", job, "--seed", "6", "--out", str(out_b)]) == 0
        hash_a = json.loads((out_a / "report.json").read_text())["body_sha256"]
        hash_b = json.loads((out_b / "report.json").read_text())["body_sha256"]
        assert hash_a != hash_b


class TestGradCheckVerb:
    def test_failing_check_exits_1_but_reports(self, tmp_path, capsys):
        # A huge finite-difference step breaks the 1e-5 agreement bound.
        path = write_job(tmp_path, {"params": {"coords": 3, "h": 1.0}, "seed": 0})
        out = tmp_path / "out"
        assert main(["grad-check", "--job", path, "--out", str(out)]) == 1
        assert "FAIL" in capsys.readouterr().out
        body = load_report_body(out / "report.json")
        assert body["passed"] is False

    def test_default_step_passes(self, tmp_path):
        path = write_job(tmp_path, {"params": {"coords": 5}, "seed": 0})
        out = tmp_path / "out"
        assert main(["grad-check", "--job", path, "--out", str(out)]) == 0


class TestErmTrainVerb:
    def test_functional_training_run(self, tmp_path):
        path = write_job(
            tmp_path,
            {
                "params": {
                    "measure": {"dim": 1, "resolution": 16, "j_max": 4, "seed": 3},
                    "truth": {"kind": "constant", "value": 0.25},
                    "train": {
                        "steps": 150, "lr": 0.5, "restarts": 1, "n_train": 6,
                        "n_mc": 200, "trainable": ["biases", "proj"],
                    },
                    "functional": True,
                },
                "seed": 1,
            },
        )
        out = tmp_path / "out"
        assert main(["erm-train", "--job", path, "--out", str(out)]) == 0
        body = load_report_body(out / "report.json")
        names = [c["name"] for c in body["checks"]]
        assert "output-probe-bound" in names
        assert "encoder-image-length" in names
        assert (out / "checkpoint.bin").exists()
        assert body["results"]["encoder_image"] == [0.25] * 6


class TestRateSweepAndReportVerbs:
    def sweep_job(self, tmp_path):
        return write_job(
            tmp_path,
            {
                "params": {
                    "measure": {"dim": 1, "resolution": 16, "j_max": 4, "seed": 3},
                    "truth": {"kind": "constant", "value": 0.25},
                    "train": {
                        "steps": 100, "lr": 0.5, "restarts": 1, "n_mc": 200,
                        "trainable": ["biases", "proj"],
                        "target_risk": 1e-9, "check_every": 10,
                    },
                    "gamma": 2.0,
                    # One row: the monotonicity tolerance is meaningless for a
                    # constant-output family (its Monte Carlo spread is zero),
                    # so cross-n comparisons are exercised at the library level.
                    "schedule": [8],
                    "repeats": 2,
                },
                "seed": 0,
            },
        )

    def test_sweep_artifacts_and_report_chaining(self, tmp_path):
        out = tmp_path / "sweep"
        assert main(["rate-sweep", "--job", self.sweep_job(tmp_path), "--out", str(out)]) == 0

        body = load_report_body(out / "report.json")
        assert body["sweep_key"] == "n"
        assert (out / "checkpoint_n8.bin").exists()

        csv_lines = (out / "sweep.csv").read_text().splitlines()
        assert csv_lines[0] == "n,emp_risk,pop_risk,stderr,epsilon,bound_lhs,bound_rhs,pass"
        assert len(csv_lines) == 2
        assert csv_lines[1].split(",")[0] == "8"

        # Chain the written report into the plot verb.
        report_job = write_job(
            tmp_path, {"params": {"reports": [str(out / "report.json")]}}, name="rep.json"
        )
        plot_out = tmp_path / "plot"
        assert main(["report", "--job", report_job, "--out", str(plot_out)]) == 0
        plot_lines = (plot_out / "plot.csv").read_text().splitlines()
        assert plot_lines[0] == "n,measured,bound,margin"
        assert len(plot_lines) > 1

    def test_report_verb_needs_sources(self, tmp_path, capsys):
        path = write_job(tmp_path, {"params": {}})
        assert main(["report", "--job", path, "--out", str(tmp_path / "o")]) == 2
        assert "report paths" in capsys.readouterr().err


class TestConsoleScript:
    def test_installed_entry_point(self, tmp_path):
        import subprocess
        import sys

        path = write_job(tmp_path, {"params": {"m": 2, "eps": 0.5}})
        out = tmp_path / "out"
        proc = subprocess.run(
            ["opwidth", "covering", "--job", path, "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "opwidth covering: 3 checks, pass" in proc.stdout
        assert (out / "report.json").exists()
