import json
import math

import numpy as np
import pytest

import isoval
from lib.command_processor import (COMMANDS, EXIT_NUMERIC, EXIT_OK, EXIT_SPEC, EXIT_VIOLATION, RunConfig,
                                   build_run_config, run_command)
from lib.config_handler import generate_default_config
from lib.file_handler import write_raster
from lib.helper_handler import NumericFailure
from lib.sphere_quadrature import make_grid


@pytest.fixture
def config_data():
    config = generate_default_config()
    config["grid"].update({"level": 8, "extremize_level": 6, "sobolev_level": 8})
    return config


def _run(command, tmp_path, name="out.json", **kwargs):
    kwargs.setdefault("grid_level", 8)
    return RunConfig(command=command, out=str(tmp_path / name), **kwargs)


def test_build_run_config_prefers_flags(config_data):
    args = isoval.build_parser().parse_args(["verify", "thm1", "--body", "cube", "--seed", "7"])
    run = build_run_config(args, config_data)
    assert run.command == "verify"
    assert run.options == {"tag": "thm1"}
    assert run.seed == 7
    assert run.trials == config_data["verification"]["trials"]
    assert run.grid_level == 8
    assert run.fmt == "json"


def test_extremize_defaults_to_csv(config_data):
    args = isoval.build_parser().parse_args(["extremize", "--steps", "3"])
    run = build_run_config(args, config_data)
    assert run.fmt == "csv"
    assert run.options == {"steps": 3}


def test_unknown_command_and_bad_input(tmp_path, config_data):
    assert run_command(RunConfig(command="plot"), config_data) == EXIT_SPEC
    assert run_command(_run("compute", tmp_path, body="torus"), config_data) == EXIT_SPEC
    assert run_command(_run("verify", tmp_path, options={"tag": "thm9"}), config_data) == EXIT_SPEC
    assert run_command(_run("sobolev", tmp_path, options={"mode": "plot"}), config_data) == EXIT_SPEC


def test_numeric_failures_have_their_own_code(tmp_path, config_data, monkeypatch):
    def fail(run, config):
        raise NumericFailure("polar volume diverged")

    monkeypatch.setitem(COMMANDS, "grid", fail)
    assert run_command(_run("grid", tmp_path), config_data) == EXIT_NUMERIC


def test_compute_report(tmp_path, config_data):
    run = _run("compute", tmp_path, body="cube", measure="discrete:0.5", p=2.0)
    assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert report["schema"] == "isoval/1"
    assert set(report["operators"]) == {"pi", "pi_p", "phi_mu", "phi_mu_p"}
    assert report["operators"]["pi"]["polar_volume"] == pytest.approx(4.0 / 3.0, rel=1e-9)
    assert report["operators"]["pi"]["volume_product"] == pytest.approx(4.0 / 3.0, rel=1e-9)
    assert report["volume"] == pytest.approx(1.0)
    assert report["perimeter"] == pytest.approx(6.0)


def test_compute_csv(tmp_path, config_data):
    run = _run("compute", tmp_path, name="h.csv", body="ball:1", measure="lebesgue:0.5", fmt="csv")
    assert run_command(run, config_data) == EXIT_OK
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "u1,u2,u3,w,h_pi,h_pi_p,h_phi_mu,h_phi_mu_p"
    assert len(lines) == make_grid(3, 8).size + 1
    assert float(lines[1].split(",")[4]) == pytest.approx(math.pi, rel=1e-9)


def test_verify_cube_thm1(tmp_path, config_data):
    run = _run("verify", tmp_path, body="cube", measure="discrete:0.5", options={"tag": "thm1"})
    assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert report["theorem"] == "thm1"
    assert report["trials"][0]["margin"] == pytest.approx(0.4375, rel=1e-9)
    assert report["summary"]["violations"] == 0


def test_verify_body_without_measure_uses_the_discrete_one(tmp_path, config_data):
    run = _run("verify", tmp_path, body="cube", options={"tag": "thm1"})
    assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert len(report["trials"]) == 1
    assert report["trials"][0]["mu"]["kind"] == "discrete_poles"
    assert report["trials"][0]["margin"] == pytest.approx(0.4375, rel=1e-9)


def test_verify_trials_csv(tmp_path, config_data):
    run = _run("verify", tmp_path, name="trials.csv", measure="lebesgue:0.5", trials=2, fmt="csv",
               options={"tag": "thm2"})
    assert run_command(run, config_data) == EXIT_OK
    lines = (tmp_path / "trials.csv").read_text().splitlines()
    assert lines[0].startswith("index,check,p,lhs,bound,margin")
    assert len(lines) == 1 + 2 * 2


def test_sobolev_constants(tmp_path, config_data):
    run = _run("sobolev", tmp_path, options={"mode": "constants"})
    assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert report["p"] == 2.0
    assert report["c_np"] == pytest.approx((math.pi / 16.0) ** (1.0 / 3.0), rel=1e-12)
    assert report["tilde_c_np"] == pytest.approx((3.0 * math.pi / 16.0) ** (1.0 / 3.0), rel=1e-12)


def test_unset_p_is_not_an_explicit_one(config_data):
    parser = isoval.build_parser()
    assert build_run_config(parser.parse_args(["sobolev", "constants"]), config_data).p is None
    assert build_run_config(parser.parse_args(["sobolev", "constants", "--p", "1"]), config_data).p == 1.0


def test_explicit_p_outside_the_sobolev_range(tmp_path, config_data):
    assert run_command(_run("sobolev", tmp_path, p=1.0, options={"mode": "constants"}), config_data) == EXIT_SPEC
    assert run_command(_run("sobolev", tmp_path, p=3.0, options={"mode": "constants"}), config_data) == EXIT_SPEC
    run = _run("sobolev", tmp_path, p=1.0, measure="lebesgue:1", options={"mode": "grid", "points": 16})
    assert run_command(run, config_data) == EXIT_SPEC
    assert run_command(_run("compute", tmp_path, body="cube", p=0.5), config_data) == EXIT_SPEC


def test_sobolev_char(tmp_path, config_data):
    for body in ("ball:1", "cube"):
        run = _run("sobolev", tmp_path, body=body, measure="discrete:0.5", options={"mode": "char"})
        assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert report["margin"] > 0.01
    assert report["lhs_polar"] == pytest.approx(report["lhs"], rel=1e-10)


def test_sobolev_gromov(tmp_path, config_data):
    run = _run("sobolev", tmp_path, measure="lebesgue:0.5", options={"mode": "gromov"})
    assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert report["thm3_rhs"] == pytest.approx(3.0 ** (2.0 / 3.0) / 4.0, rel=1e-12)
    assert abs(report["gap"]) < 1e-6


def test_sobolev_grid_from_raster(tmp_path, config_data):
    axis = -7.75 + 0.5 * np.arange(32)
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    path = str(tmp_path / "gauss.raw")
    write_raster(path, np.exp(-(x ** 2 + y ** 2 + z ** 2) / 4.0), 0.5, lower=[-7.75] * 3)
    run = _run("sobolev", tmp_path, p=2.0, measure="lebesgue:1", options={"mode": "grid", "raster": path})
    assert run_command(run, config_data) == EXIT_OK
    report = json.loads((tmp_path / "out.json").read_text())
    assert report["ratio"] > 1.05


def test_extremize_csv(tmp_path, config_data):
    run = _run("extremize", tmp_path, name="path.csv", measure="equatorial:0.5", seed=1, fmt="csv",
               options={"steps": 3})
    assert run_command(run, config_data) == EXIT_OK
    lines = (tmp_path / "path.csv").read_text().splitlines()
    assert lines[0] == "step,a1,a2,a3,product"
    products = [float(line.split(",")[-1]) for line in lines[1:]]
    assert products == sorted(products)


def test_grid_export(tmp_path, config_data):
    assert run_command(_run("grid", tmp_path, name="grid.csv"), config_data) == EXIT_OK
    assert len((tmp_path / "grid.csv").read_text().splitlines()) == make_grid(3, 8).size + 1


def test_main_runs_end_to_end(tmp_path):
    config = tmp_path / "config.json"
    out = tmp_path / "grid.csv"
    code = isoval.main(["grid", "--grid-level", "4", "--out", str(out), "--config", str(config)])
    assert code == EXIT_OK
    assert config.exists()
    assert out.read_text().startswith("u1,u2,u3,w")


def test_violation_exit_code_is_distinct():
    assert len({EXIT_OK, EXIT_VIOLATION, EXIT_SPEC, EXIT_NUMERIC}) == 4
