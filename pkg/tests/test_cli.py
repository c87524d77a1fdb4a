import json
import math
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gauss_conjunction import cli
from gauss_conjunction.bounds import corollary1_bound
from gauss_conjunction.scalar_stats import phi, phi_bar

SE1 = {"type": "se", "lengthscale": 1.0}
PAIR = {"T": 1.0, "independent": [SE1, SE1]}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(tmp_path, command, cfg, *extra):
    out = tmp_path / "out.csv"
    code = cli.main([command, "--config", _write(tmp_path, cfg), "--output", str(out), *extra])
    return code, out


def test_bound_command(tmp_path, capsys):
    code, out = _run(tmp_path, "bound", {"command": "bound", "C": [1, 1], "T": 1, "u": 2})
    assert code == 0
    cfg, rows = cli.read_csv_report(out)
    assert rows[0]["bound_total"] == pytest.approx(1.4976113960310475e-3, rel=1e-13)
    assert cfg["command"] == "bound" and cfg["seed"] == 0
    assert "bound_total" in capsys.readouterr().out


def test_ec_command_matches_bound(tmp_path):
    _, out = _run(tmp_path, "ec", {"command": "ec", "C": [1, 1], "T": 1, "u": 2})
    total = cli.read_csv_report(out)[1][0]["bound_total"]
    assert abs(total - corollary1_bound([1, 1], 1, 2).total) <= 1e-12 * total


def test_ec_from_process_set_uses_derivative_variance(tmp_path):
    report = cli.run(cli.resolve_config({"processes": {"T": 1.0, "independent": [SE1, {"type": "se",
                                                                                       "lengthscale": 0.5}]},
                                         "u": 2.0}, "ec"))
    assert report.rows[0]["bound_total"] == pytest.approx(corollary1_bound([1.0, 4.0], 1.0, 2.0).total, rel=1e-12)


def test_validate_kernel_command(tmp_path):
    code, out = _run(tmp_path, "validate-kernel", {"processes": {"T": 1.0, "independent": [SE1]}})
    assert code == 0
    row = cli.read_csv_report(out)[1][0]
    assert row["passed"] is True
    assert abs(row["fitted_C"] - 0.5) < 1e-6


def test_validate_kernel_failure_exits_one(tmp_path):
    cfg = {"processes": {"T": 1.0, "independent": [{"type": "se", "lengthscale": 1e6}]}, "validate": {"grid_n": 5}}
    code, out = _run(tmp_path, "validate-kernel", cfg)
    assert code == 1
    assert cli.read_csv_report(out)[1][0]["passed"] is False


@pytest.mark.parametrize("cfg", [
    {"command": "bound", "C": [1, 1], "T": 1, "u": 2, "bogus": 1},
    {"command": "bound", "C": [-1], "T": 1, "u": 2},
    {"command": "bound", "C": [1], "T": 1, "u": -2},
    {"command": "simulate", "processes": PAIR, "u": 1, "reps": 10},
    {"command": "sweep", "processes": PAIR, "u": [1.0], "reps": 0},
    {"command": "correlated", "processes": PAIR, "u": 1},
    {"command": "bound", "processes": {"T": 1.0, "correlated_pair": {"base": SE1, "rho": 1.0}}, "u": 1},
])
def test_invalid_configs_exit_one(tmp_path, capsys, cfg):
    code = cli.main([cfg["command"], "--config", _write(tmp_path, cfg)])
    assert code == 1
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["status"] == "error" and diag["kind"] == "validation"


def test_command_mismatch_exits_one(tmp_path):
    assert cli.main(["ec", "--config", _write(tmp_path, {"command": "bound", "C": [1], "T": 1, "u": 2})]) == 1


def test_missing_config_file_exits_one(tmp_path):
    assert cli.main(["bound", "--config", str(tmp_path / "nope.json")]) == 1


def test_quadrature_failure_exits_two(tmp_path, capsys):
    cfg = {"command": "correlated", "u": 2.0,
           "processes": {"T": 1.0, "correlated_pair": {"base": SE1, "rho": 0.5}},
           "quadrature": {"abs_tol": 1e-300, "rel_tol": 0.0, "max_subdivisions": 1}}
    assert cli.main(["correlated", "--config", _write(tmp_path, cfg)]) == 2
    assert json.loads(capsys.readouterr().err)["kind"] == "numerical"


def test_rho_sweep_bound_only(tmp_path):
    cfg = {"command": "sweep", "u": 2.0, "rho": [0.0, 0.3, 0.6, 0.9], "reps": 0, "plot_data": True,
           "processes": {"T": 1.0, "correlated_pair": {"base": SE1, "rho": 0.0}}}
    code, out = _run(tmp_path, "sweep", cfg)
    assert code == 0
    rows = cli.read_csv_report(out)[1]
    assert len(rows) == 4
    totals = [r["bound_total"] for r in rows]
    assert all(b >= a for a, b in zip(totals, totals[1:]))
    assert [r["plot_x"] for r in rows] == [0.0, 0.3, 0.6, 0.9]
    assert all(r["mc_estimate"] is None for r in rows)


def test_u_sweep_with_mc(tmp_path):
    cfg = {"command": "sweep", "u": [1.0, 1.5, 2.0, 2.5], "reps": 2000, "grid_points": 129, "seed": 5,
           "processes": PAIR}
    code, out = _run(tmp_path, "sweep", cfg)
    assert code == 0
    rows = cli.read_csv_report(out)[1]
    assert len(rows) == 4
    for r in rows:
        assert r["ci_low"] <= r["bound_total"]
        scale = phi_bar(r["u"]) * phi(r["u"])
        assert r["gap_normalized"] == pytest.approx((r["bound_total"] - r["mc_estimate"]) / scale, rel=1e-12)


def test_moments_rows_carry_reference(tmp_path):
    cfg = {"command": "moments", "u": 1.0, "reps": 500, "grid_points": 65, "processes": PAIR}
    report = cli.run(cli.resolve_config(cfg))
    conj = [r for r in report.rows if r["quantity"] == "mean_conj_up"]
    assert len(conj) == 2
    assert conj[0]["reference"] == pytest.approx(phi_bar(1.0) * phi(1.0) / math.sqrt(2 * math.pi), rel=1e-14)


def test_pickands_command(tmp_path):
    cfg = {"command": "pickands", "C": [1.0], "reps": 20_000, "pickands": {"a": [0.05, 0.02]}}
    report = cli.run(cli.resolve_config(cfg))
    assert [r["quantity"] for r in report.rows] == ["pickands_h", "pickands_h", "pickands_h_extrapolated"]
    assert report.meta["pickands_verdict"] in ("paper_literal", "derivative_consistent", "inconclusive")


def test_report_is_self_contained(tmp_path):
    cfg = {"command": "simulate", "u": [1.0, 2.0], "reps": 300, "grid_points": 33, "processes": PAIR}
    code, out = _run(tmp_path, "simulate", cfg, "--seed", "77", "--threads", "2")
    assert code == 0
    embedded, rows = cli.read_csv_report(out)
    assert embedded["seed"] == 77 and all(r["seed"] == 77 for r in rows)
    # rerunning the embedded config reproduces the file
    again = tmp_path / "again.csv"
    assert cli.main(["simulate", "--config", _write(tmp_path, embedded, "emb.json"), "--output", str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_thread_count_does_not_change_files(tmp_path):
    cfg = {"command": "euler", "u": [1.0, 2.0], "reps": 3000, "grid_points": 129, "processes": PAIR}
    path = _write(tmp_path, cfg)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["euler", "--config", path, "--output", str(a), "--threads", "1"]) == 0
    assert cli.main(["euler", "--config", path, "--output", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["rows"][0]["quantity"] == "euler_characteristic"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=6))
def test_csv_round_trip_full_precision(values):
    rows = [cli._row({"command": "bound", "seed": 3}, u=v, bound_total=v * 0.5, n=i) for i, v in enumerate(values)]
    text = cli.report_to_csv(cli.Report({"command": "bound"}, rows))
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "r.csv")
        with open(path, "w") as fh:
            fh.write(text)
        _, back = cli.read_csv_report(path)
    for row, parsed in zip(rows, back):
        for key in ("u", "bound_total", "n", "seed"):
            assert parsed[key] == row[key] and type(parsed[key]) is type(row[key])
            if isinstance(row[key], float):
                assert np.float64(parsed[key]).tobytes() == np.float64(row[key]).tobytes()


def test_env_default_threads(monkeypatch):
    monkeypatch.setenv("GC_DEFAULT_THREADS", "3")
    from gauss_conjunction.montecarlo import default_threads
    assert default_threads() == 3


def test_csv_fixed_columns_first(tmp_path):
    _, out = _run(tmp_path, "bound", {"command": "bound", "C": [1], "T": 1, "u": [1, 2]})
    header = [line for line in out.read_text().splitlines() if not line.startswith("#")][0].split(",")
    assert header[:len(cli.CSV_COLUMNS)] == list(cli.CSV_COLUMNS)
