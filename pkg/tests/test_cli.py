import json
import os

import numpy as np
import pytest

import conicproj as cp
from conicproj.cli import run_cli
from conicproj.io import parse_sdpa
from conftest import fixture_path


def run(capsys, argv):
    code = run_cli(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def strip_time(report):
    report = dict(report)
    report.pop("wall_time_ms", None)
    return report


class TestTheta:
    def test_c5_value_and_exit_code(self, capsys):
        code, rep = run(
            capsys,
            ["theta", fixture_path("c5.col"), "--solver", "simple", "--tol", "1e-7"],
        )
        assert code == 0
        assert rep["status"] == "converged"
        assert abs(rep["objective"] - 2.23607) <= 1e-4
        assert rep["theta"] == rep["objective"]
        assert rep["problem"]["m"] == 6

    def test_regularized_solver_path(self, capsys):
        code, rep = run(
            capsys,
            [
                "theta",
                fixture_path("c5.col"),
                "--solver",
                "regularized",
                "--inner",
                "ssnewton",
                "--tol",
                "1e-8",
                "--max-outer",
                "100",
            ],
        )
        assert code == 0
        assert abs(rep["objective"] - np.sqrt(5.0)) <= 1e-4


class TestDeterminism:
    def test_byte_identical_reports_except_wall_time(self, capsys):
        argv = [
            "sos-check",
            fixture_path("motzkin.txt"),
            "--degree",
            "4",
            "--max-outer",
            "200",
            "--seed",
            "5",
        ]
        code1, rep1 = run(capsys, argv)
        code2, rep2 = run(capsys, argv)
        assert code1 == code2
        assert strip_time(rep1) == strip_time(rep2)

    def test_gen_deterministic_per_seed(self, capsys, tmp_path):
        p1 = tmp_path / "a.dat-s"
        p2 = tmp_path / "b.dat-s"
        for path in (p1, p2):
            code, _ = run(
                capsys,
                [
                    "gen", "sos", "--out", str(path),
                    "--num-vars", "2", "--degree", "2",
                    "--seed", "3",
                ],
            )
            assert code == 0
        assert p1.read_text() == p2.read_text()


class TestExitCodes:
    def test_motzkin_low_degree_fails(self, capsys):
        code, rep = run(
            capsys,
            [
                "sos-check",
                fixture_path("motzkin.txt"),
                "--degree", "3",
                "--tol", "1e-5",
                "--max-outer", "3000",
            ],
        )
        assert code in (2, 3)
        assert rep["status"] != "converged"

    def test_input_error_is_4(self, capsys, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("this is not a polynomial\n")
        code = run_cli(["sos-check", str(bad), "--degree", "3"])
        capsys.readouterr()
        assert code == 4
        assert run_cli(["theta", str(tmp_path / "missing.col")]) == 4
        capsys.readouterr()

    def test_unknown_flag_is_4(self, capsys):
        assert run_cli(["theta", "--bogus"]) == 4
        capsys.readouterr()


class TestSolveAndSolutions:
    def test_solve_sdpa_with_solution_residual_match(self, capsys, tmp_path):
        sol = tmp_path / "sol.json"
        code, rep = run(
            capsys,
            [
                "solve",
                fixture_path("sos_n3_d2.dat-s"),
                "--tol", "1e-9",
                "--solution-out", str(sol),
            ],
        )
        assert code == 0
        data = json.loads(sol.read_text())
        prob = parse_sdpa(open(fixture_path("sos_n3_d2.dat-s")).read())
        from conicproj.io import blockpoint_from_json
        from conicproj.regsolver import IterateTriple, residuals

        trip = IterateTriple(
            p=blockpoint_from_json(prob.cone, data["p"]),
            y=np.array(data["y"]),
            u=blockpoint_from_json(prob.cone, data["u"]),
        )
        rp, rd = residuals(prob, trip)
        assert abs(rp - rep["primal_residual"]) <= 1e-12
        assert abs(rd - rep["dual_residual"]) <= 1e-12

    def test_nearcorr_command(self, capsys, tmp_path):
        mat = tmp_path / "c.txt"
        mat.write_text("1.0 2.0\n2.0 1.0\n")
        sol = tmp_path / "x.json"
        code, rep = run(
            capsys,
            [
                "nearcorr", str(mat),
                "--method", "quasi_newton",
                "--tol", "1e-10",
                "--solution-out", str(sol),
            ],
        )
        assert code == 0
        x = np.array(json.loads(sol.read_text())["x"])
        assert np.allclose(x, np.ones((2, 2)), atol=1e-8)
        # half the squared distance from [[1,2],[2,1]] to all-ones
        assert abs(rep["objective"] - 1.0) <= 1e-6

    def test_nearcorr_rescale_flag(self, capsys, tmp_path):
        mat = tmp_path / "c.txt"
        mat.write_text("1.0 0.9\n0.9 1.0\n")
        code, rep = run(
            capsys, ["nearcorr", str(mat), "--rescale", "--tol", "1e-8"]
        )
        assert code == 0
        assert rep["max_diag_error"] == 0.0

    def test_project_json_with_soc(self, capsys, tmp_path):
        prob = tmp_path / "p.json"
        prob.write_text(
            json.dumps(
                {
                    "cone": {"psd": [], "soc": [3], "nonneg": 0},
                    "center": [[3.0, 4.0, 0.0]],
                    "eq": {"rows": [[[0.0, 0.0, 1.0]]], "rhs": [2.5]},
                }
            )
        )
        sol = tmp_path / "x.json"
        code, rep = run(
            capsys,
            ["project", str(prob), "--method", "quasi_newton",
             "--tol", "1e-10", "--solution-out", str(sol)],
        )
        assert code == 0
        x = np.array(json.loads(sol.read_text())["x"][0])
        assert abs(x[2] - 2.5) <= 1e-8
        assert np.linalg.norm(x[:2]) <= 2.5 + 1e-8

    def test_project_sdpa_default_center_zero(self, capsys):
        code, rep = run(
            capsys,
            ["project", fixture_path("trace2.dat-s"), "--method", "dykstra",
             "--tol", "1e-9"],
        )
        assert code == 0
        assert rep["status"] == "converged"

    def test_project_sdpa_with_center_matrix(self, capsys, tmp_path):
        # project [[1,2],[2,1]] onto {trace X = 1} cap PSD
        center = tmp_path / "center.txt"
        center.write_text("1.0 2.0\n2.0 1.0\n")
        sol = tmp_path / "x.json"
        code, rep = run(
            capsys,
            ["project", fixture_path("trace2.dat-s"),
             "--center", str(center), "--method", "ssnewton",
             "--tol", "1e-10", "--solution-out", str(sol)],
        )
        assert code == 0
        x = np.array(json.loads(sol.read_text())["x"][0])
        assert abs(np.trace(x) - 1.0) <= 1e-9
        assert np.linalg.eigvalsh(x)[0] >= -1e-10

    def test_polymin_bound(self, capsys, tmp_path):
        poly = tmp_path / "sq.txt"
        poly.write_text("nvars 1\n1 2\n-2 1\n1 0\n")  # (v-1)^2
        code, rep = run(capsys, ["polymin", str(poly), "--tol", "1e-9"])
        assert code == 0
        assert abs(rep["objective"]) <= 1e-7  # certified lower bound 0
        assert rep["gram_min_eigenvalue"] <= 1e-6

    def test_report_written_to_out_file(self, capsys, tmp_path):
        out = tmp_path / "rep.json"
        code = run_cli(
            ["theta", fixture_path("c5.col"), "--tol", "1e-6", "--out", str(out)]
        )
        captured = capsys.readouterr()
        assert captured.out == ""
        rep = json.loads(out.read_text())
        assert abs(rep["objective"] - np.sqrt(5.0)) <= 1e-3
        assert code == 0


class TestGen:
    def test_batch_with_thread_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CONIC_PROJ_THREADS", "2")
        out = tmp_path / "inst.dat-s"
        code, rep = run(
            capsys,
            ["gen", "sos", "--out", str(out), "--num-vars", "2",
             "--degree", "2", "--seed", "10", "--count", "3"],
        )
        assert code == 0
        assert len(rep["instances"]) == 3
        seeds = [i["seed"] for i in rep["instances"]]
        assert seeds == [10, 11, 12]  # split rule: seed + index
        for info in rep["instances"]:
            assert os.path.exists(info["path"])
            parsed = parse_sdpa(open(info["path"]).read())
            assert parsed.cone.psd_dims == (6,)

    def test_gen_motzkin_and_structured(self, capsys, tmp_path):
        out = tmp_path / "m.txt"
        code, rep = run(capsys, ["gen", "motzkin", "--out", str(out)])
        assert code == 0
        from conicproj.io import parse_polynomial

        assert parse_polynomial(out.read_text()) == cp.motzkin()
        out2 = tmp_path / "s.txt"
        code, rep = run(
            capsys,
            ["gen", "structured", "--out", str(out2), "--num-vars", "3"],
        )
        assert code == 0
        p = parse_polynomial(out2.read_text())
        assert p == cp.structured_polymin_instance(3)

    def test_gen_requires_seed(self, capsys, tmp_path):
        code = run_cli(["gen", "sos", "--out", str(tmp_path / "x.dat-s")])
        capsys.readouterr()
        assert code == 4
