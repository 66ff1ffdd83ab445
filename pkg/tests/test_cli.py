"""Command line behavior: artifacts, determinism, and exit codes."""

import json
from types import SimpleNamespace

import pytest

from thermosig.cli import EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO, EXIT_OK, main

CONSTANTS = {"c": 1.21, "m_z": 12000.0, "t_p": 37.0, "beta_v": 100.0, "step": 60.0}
SCENARIO = {"duration_steps": 1441, "constants": CONSTANTS}
GRID = {"cells": 60, "spacing": "log", "refinement_passes": 2}


def _write_config(path, **sections) -> str:
    payload = {"constants": CONSTANTS, "grid": GRID}
    payload.update(sections)
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def day_run(tmp_path_factory):
    """One simulated day, generated through the CLI itself."""
    root = tmp_path_factory.mktemp("cli_day")
    config = _write_config(root / "config.json", scenario=SCENARIO)
    out = root / "sim"
    assert main(["simulate", "--config", config, "--out", str(out)]) == EXIT_OK
    return SimpleNamespace(
        root=root,
        config=config,
        dataset=str(out / "dataset.csv"),
        truth=str(out / "truth.json"),
    )


class TestSimulate:
    def test_artifacts_and_truth_content(self, day_run):
        truth = json.loads(open(day_run.truth, encoding="utf-8").read())
        assert truth["theta"] == {"c_p": 100.0, "alpha": 50.0, "beta_ac": 2000.0}
        assert truth["dataset"]["rows"] == 1441
        assert truth["dataset"]["step"] == 60.0
        with open(day_run.dataset, encoding="utf-8") as handle:
            header = handle.readline().strip().split(",")
        assert header[0] == "timestamp"
        assert "passengers" in header

    def test_missing_scenario_section(self, day_run, tmp_path):
        config = _write_config(tmp_path / "c.json")
        assert main(["simulate", "--config", config, "--out", str(tmp_path)]) == EXIT_CONFIG


class TestFit:
    def test_recovers_the_planted_coefficients(self, day_run):
        out = day_run.root / "fit"
        code = main(["fit", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--out", str(out)])
        assert code == EXIT_OK
        fit = json.loads((out / "fit.json").read_text())
        assert fit["used_integration"] is True
        assert fit["theta"]["c_p"] == pytest.approx(100.0, rel=0.05)
        assert fit["theta"]["alpha"] == pytest.approx(50.0, rel=0.05)
        assert fit["theta"]["beta_ac"] == pytest.approx(2000.0, rel=0.05)
        surface_lines = (out / "error_surface.csv").read_text().splitlines()
        assert surface_lines[0] == "c_p,alpha,beta_ac,objective"
        assert len(surface_lines) == GRID["cells"] ** 2 + 1

    def test_raw_flag_disables_integration(self, day_run):
        out = day_run.root / "fit_raw"
        code = main(["fit", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--raw", "--out", str(out)])
        assert code == EXIT_OK
        assert json.loads((out / "fit.json").read_text())["used_integration"] is False

    def test_outputs_are_byte_deterministic(self, day_run):
        outs = [day_run.root / "det_a", day_run.root / "det_b"]
        for out in outs:
            assert main(["fit", "--config", day_run.config, "--dataset", day_run.dataset,
                         "--out", str(out)]) == EXIT_OK
        for name in ("fit.json", "error_surface.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_thread_count_does_not_change_the_bytes(self, day_run, monkeypatch):
        payloads = []
        for threads in ("1", "4"):
            monkeypatch.setenv("THERMOSIG_THREADS", threads)
            out = day_run.root / f"threads_{threads}"
            assert main(["fit", "--config", day_run.config, "--dataset", day_run.dataset,
                         "--out", str(out)]) == EXIT_OK
            payloads.append((out / "fit.json").read_bytes())
        assert payloads[0] == payloads[1]

    @pytest.mark.parametrize("value", ["0", "abc", "-2"])
    def test_bad_thread_env_is_a_config_error(self, day_run, monkeypatch, value):
        monkeypatch.setenv("THERMOSIG_THREADS", value)
        out = day_run.root / "threads_bad"
        code = main(["fit", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--out", str(out)])
        assert code == EXIT_CONFIG


class TestSignature:
    def test_truth_theta_closes_the_balance(self, day_run):
        out = day_run.root / "signature"
        code = main(["signature", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--theta", day_run.truth, "--out", str(out)])
        assert code == EXIT_OK

        summary = json.loads((out / "summary.json").read_text())
        assert summary["frames"] == 1440
        shares = summary["shares"]
        assert shares["passenger_share"] + shares["environment_share"] == pytest.approx(1.0)
        assert summary["integrated_relative_error"] <= 1e-9

        rows = (out / "signature.csv").read_text().splitlines()[1:]
        assert len(rows) == 1440
        l_total = [abs(float(line.split(",")[2])) for line in rows]
        residuals = [abs(float(line.split(",")[6])) for line in rows]
        assert max(residuals) <= 1e-9 * max(l_total)

    def test_accepts_a_fit_result_as_theta_source(self, day_run):
        fit_out = day_run.root / "fit"
        out = day_run.root / "signature_from_fit"
        code = main(["signature", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--theta", str(fit_out / "fit.json"), "--out", str(out)])
        assert code == EXIT_OK


class TestEval:
    def test_compares_raw_and_integrated(self, day_run):
        out = day_run.root / "eval"
        code = main(["eval", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--theta", day_run.truth, "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads((out / "eval.json").read_text())
        assert report["theta_true"]["c_p"] == 100.0
        for side in ("raw", "integrated"):
            assert set(report[side]["coefficient_errors"]) == {"c_p", "alpha", "beta_ac"}
        # the data is noiseless, so both variants land close and the
        # integrated one must not lose
        assert report["integrated_not_worse"] is True

    def test_rejects_truth_for_a_different_dataset(self, day_run, tmp_path):
        truth = json.loads(open(day_run.truth, encoding="utf-8").read())
        truth["dataset"]["rows"] = 9999
        tampered = tmp_path / "truth.json"
        tampered.write_text(json.dumps(truth))
        code = main(["eval", "--config", day_run.config, "--dataset", day_run.dataset,
                     "--theta", str(tampered), "--out", str(tmp_path)])
        assert code == EXIT_CONFIG


class TestExitCodes:
    def test_missing_dataset_is_io(self, day_run, tmp_path):
        code = main(["fit", "--config", day_run.config,
                     "--dataset", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
        assert code == EXIT_IO

    def test_missing_config_is_io(self, tmp_path):
        code = main(["fit", "--config", str(tmp_path / "absent.json"),
                     "--dataset", "x.csv", "--out", str(tmp_path)])
        assert code == EXIT_IO

    def test_invalid_json_config(self, tmp_path):
        config = tmp_path / "broken.json"
        config.write_text("{not json")
        assert main(["fit", "--config", str(config), "--dataset", "x.csv",
                     "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "typo.json"
        config.write_text(json.dumps({"gird": {}}))
        assert main(["fit", "--config", str(config), "--dataset", "x.csv",
                     "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_section_value(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"grid": {"cells": 0}}))
        assert main(["fit", "--config", str(config), "--dataset", "x.csv",
                     "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_dataset_without_active_cooling_is_degenerate(self, tmp_path):
        # a plant that never switches on leaves nothing to fit against
        scenario = {
            "duration_steps": 1441,
            "constants": CONSTANTS,
            "outdoor": {"mean": 20.0, "amplitude": 0.0},
            "hvac": {"on_hour": 0.0, "off_hour": 0.0},
        }
        config = _write_config(tmp_path / "off.json", scenario=scenario)
        out = tmp_path / "sim"
        assert main(["simulate", "--config", config, "--out", str(out)]) == EXIT_OK
        code = main(["fit", "--config", config, "--dataset", str(out / "dataset.csv"),
                     "--out", str(tmp_path / "fit")])
        assert code == EXIT_DEGENERATE
