"""End-to-end CLI tests: exit codes, flag/config precedence, file flows."""

import json

import numpy as np
import pytest

from twometric.cli import main
from twometric.oracle import instance_from_json


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolveBound:
    def test_scaled_quadratic_with_bound_printed(self, capsys):
        code, out, _ = run(capsys, "solve-bound", "--variant", "scaled",
                           "--problem", "quadratic", "--n", "20", "--seed", "1",
                           "--eps", "1e-2")
        assert code == 0
        assert "status: converged" in out
        line = next(l for l in out.splitlines() if "worst-case iteration bound" in l)
        bound = int(line.split(":")[1].split("(")[0])
        observed = int(next(l for l in out.splitlines()
                            if l.startswith("iterations")).split(":")[1])
        assert observed <= bound

    def test_missing_problem_definition(self, capsys):
        code, _, err = run(capsys, "solve-bound", "--variant", "classic")
        assert code == 1
        assert "error" in err

    def test_eps_above_one_warns_but_runs(self, capsys):
        code, out, err = run(capsys, "solve-bound", "--variant", "scaled",
                             "--problem", "quadratic", "--n", "5", "--seed", "0",
                             "--eps", "2")
        assert code == 0
        assert "warning" in err

    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["solve-bound", "--badflag"])
        assert exc.value.code == 1

    def test_classic_variant_tight_tolerance(self, capsys):
        code, out, _ = run(capsys, "solve-bound", "--variant", "classic",
                           "--problem", "quadratic", "--n", "10", "--seed", "2",
                           "--eps", "1e-6", "--metric", "newton")
        assert code == 0
        assert "status: converged" in out


class TestGenAndSolveLasso:
    def test_gen_writes_readable_instance(self, tmp_path, capsys):
        path = tmp_path / "inst.json"
        code, out, _ = run(capsys, "gen", "--m", "10", "--n", "30", "--seed", "5",
                           "--out", str(path))
        assert code == 0
        inst = instance_from_json(path.read_text())
        assert (inst.m, inst.n) == (10, 30)

    def test_solve_from_instance_and_check_roundtrip(self, tmp_path, capsys):
        inst_path = tmp_path / "inst.json"
        run(capsys, "gen", "--m", "10", "--n", "30", "--seed", "5",
            "--out", str(inst_path))
        out_dir = tmp_path / "run"
        code, out, _ = run(capsys, "solve-lasso", "--instance", str(inst_path),
                           "--out", str(out_dir), "--trace",
                           str(out_dir / "trace.csv"))
        assert code == 0
        assert "residual" in out
        code, out, _ = run(capsys, "check", "--mode", "l1",
                           "--point", str(out_dir / "point.json"),
                           "--instance", str(inst_path), "--eps", "1e-8")
        assert code == 0
        header = (out_dir / "trace.csv").read_text().split("\n")[0]
        assert header == "k,stage,gamma,psi,residual,n_plus,support_size,m_k,alpha_k,time_s"

    def test_generator_flags(self, capsys):
        code, out, _ = run(capsys, "solve-lasso", "--m", "20", "--n", "50",
                           "--seed", "3", "--gamma-scale", "0.1")
        assert code == 0
        assert "status: converged" in out

    def test_identity_metric_needs_more_iterations(self, capsys):
        args = ["solve-lasso", "--m", "20", "--n", "50", "--seed", "3",
                "--gamma-scale", "0.1", "--tol", "1e-5"]
        code_n, out_n, _ = run(capsys, *args, "--metric", "newton")
        code_i, out_i, _ = run(capsys, *args, "--metric", "identity")
        assert code_n == 0 and code_i == 0
        its = {}
        for tag, out in (("newton", out_n), ("identity", out_i)):
            its[tag] = int(next(l for l in out.splitlines()
                                if l.startswith("iterations")).split(":")[1])
        assert its["identity"] > its["newton"]

    def test_mismatched_instance_rejected(self, tmp_path, capsys):
        inst_path = tmp_path / "bad.json"
        run(capsys, "gen", "--m", "4", "--n", "6", "--seed", "1",
            "--out", str(inst_path))
        doc = inst_path.read_text().replace('"m": 4', '"m": 5')
        inst_path.write_text(doc)
        code, _, err = run(capsys, "solve-lasso", "--instance", str(inst_path))
        assert code == 1
        assert "error" in err

    def test_no_continuation_flag(self, capsys):
        code, out, _ = run(capsys, "solve-lasso", "--m", "20", "--n", "50",
                           "--seed", "3", "--no-continuation", "--tol", "1e-7")
        assert code == 0

    def test_small_absolute_weight_converges(self, capsys):
        # near basis-pursuit regime: continuation carries the solve
        code, out, _ = run(capsys, "solve-lasso", "--m", "50", "--n", "200",
                           "--seed", "7", "--gamma", "0.1", "--metric", "newton")
        assert code == 0
        res = float(next(l for l in out.splitlines()
                         if l.startswith("residual")).split(":")[1].split("(")[0])
        assert res <= 1e-8

    def test_seed_determines_outputs(self, tmp_path, capsys):
        args = ["solve-lasso", "--m", "12", "--n", "30", "--seed", "9"]
        run(capsys, *args, "--out", str(tmp_path / "a"))
        run(capsys, *args, "--out", str(tmp_path / "b"))
        assert ((tmp_path / "a" / "point.json").read_bytes()
                == (tmp_path / "b" / "point.json").read_bytes())


class TestCheck:
    def test_stationary_point_of_quadratic(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        run(capsys, "solve-bound", "--variant", "classic", "--problem", "quadratic",
            "--n", "6", "--seed", "4", "--eps", "1e-6", "--out", str(out_dir))
        code, out, _ = run(capsys, "check", "--mode", "bound",
                           "--point", str(out_dir / "point.json"),
                           "--problem", "quadratic", "--n", "6", "--seed", "4",
                           "--eps", "1e-6")
        assert code == 0
        assert "pass" in out

    def test_zero_point_with_dominant_weight(self, tmp_path, capsys):
        inst_path = tmp_path / "inst.json"
        run(capsys, "gen", "--m", "6", "--n", "10", "--seed", "2",
            "--gamma-scale", "1.5", "--out", str(inst_path))
        point = tmp_path / "zero.json"
        point.write_text("[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]")
        code, out, _ = run(capsys, "check", "--mode", "l1", "--point", str(point),
                           "--instance", str(inst_path), "--eps", "1e-12")
        assert code == 0

    def test_infeasible_point_in_bound_mode(self, tmp_path, capsys):
        point = tmp_path / "neg.json"
        point.write_text("[-1.0, 2.0, 3.0, 1.0, 1.0, 1.0]")
        code, _, err = run(capsys, "check", "--mode", "bound",
                           "--point", str(point), "--problem", "quadratic",
                           "--n", "6", "--seed", "4", "--eps", "1e-6")
        assert code == 1
        assert "error" in err


class TestConfigFile:
    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eps": 1e-1, "seed": 0, "n": 5,
                                   "problem": "quadratic"}))
        code, out, _ = run(capsys, "solve-bound", "--variant", "classic",
                           "--config", str(cfg), "--eps", "1e-3")
        assert code == 0
        assert "(eps 0.001)" in out

    def test_config_supplies_missing_values(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"m": 8, "n": 20, "seed": 1}))
        code, out, _ = run(capsys, "solve-lasso", "--config", str(cfg))
        assert code == 0


class TestBenchmarkCommand:
    def test_plan_file_roundtrip(self, tmp_path, capsys):
        plan = {
            "problems": [{"name": "tiny", "generator": "lasso",
                          "params": {"m": 8, "n": 16, "density": 0.2,
                                     "gamma_scale": 0.1, "seed": 1}}],
            "solvers": [{"name": "prox", "method": "ista",
                         "options": {"tol": 1e-6, "max_iterations": 50000}},
                        {"name": "adp", "method": "adaptive",
                         "metric": {"kind": "newton", "ridge": 1e-6},
                         "options": {"tol": 1e-8}}],
        }
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(json.dumps(plan))
        out_dir = tmp_path / "results"
        code, out, _ = run(capsys, "benchmark", "--plan", str(plan_path),
                           "--out", str(out_dir))
        assert code == 0
        assert (out_dir / "summary.json").exists()
        assert (out_dir / "figure.svg").exists()

    def test_empty_plan_file(self, tmp_path, capsys):
        plan_path = tmp_path / "plan.json"
        plan_path.write_text("{}")
        code, _, err = run(capsys, "benchmark", "--plan", str(plan_path),
                           "--out", str(tmp_path / "o"))
        assert code == 1

    def test_preset_with_custom_seed(self, tmp_path, capsys):
        code, out, _ = run(capsys, "benchmark", "--preset", "figure1",
                           "--seeds", "0", "--out", str(tmp_path / "o"))
        assert code == 0
        assert "figure.svg" in out
