import io
import json
import math
import subprocess
import sys

import pytest

from freeot import cli
from freeot.ctransforms import cauchy_G
from freeot.measures import two_point


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_freeconv_examples(capsys):
    code, rep, _ = run(capsys, "freeconv", "--kind", "add", "--mu", "bern", "--nu", "bern", "--z", "3")
    assert code == 0 and rep["schema"] == 1
    assert rep["cauchy"] == pytest.approx(1 / math.sqrt(5), abs=1e-10)
    assert set(rep) >= {"kind", "z", "omega", "omega_mu", "omega_nu", "cauchy",
                        "log_potential", "residual"}
    code, rep, _ = run(capsys, "freeconv", "--kind", "comp", "--mu", "bern", "--tau", "0.5",
                       "--z", "1.4142135624")
    assert rep["cauchy"] == pytest.approx(1.0, abs=1e-9)
    code, rep, _ = run(capsys, "freeconv", "--kind", "mul", "--mu", "two-point(0.5,2,0.3)",
                       "--nu", "delta1", "--z", "5")
    assert rep["cauchy"] == pytest.approx(cauchy_G(two_point(0.5, 2, 0.3), 5.0), rel=1e-12)


def test_otsolve_bernoulli(capsys):
    code, rep, _ = run(capsys, "otsolve", "--kind", "add", "--mu", "bern", "--nu", "bern", "--z", "3")
    assert code == 0
    assert rep["value"] == pytest.approx(math.log(3 + math.sqrt(5)) - math.log(2), abs=1e-12)
    assert rep["gap"] < 1e-8
    assert len(rep["coupling"]["pi"]) == 2


def test_otsolve_three_marginals(capsys):
    code, rep, _ = run(capsys, "otsolve", "--kind", "add", "--mu", "bern", "--z", "4", "--d", "3")
    assert code == 0 and rep["gap"] < 1e-10


def test_quadrature_example(capsys):
    code, rep, _ = run(capsys, "quadrature", "--op", "add", "--n", "4", "--z", "6",
                       "--samples", "20000", "--seed", "1")
    assert code == 0 and rep["z_score"] < 4


def test_finitefree_table_and_csv(capsys, tmp_path):
    path = tmp_path / "ff.csv"
    code, rep, _ = run(capsys, "finitefree", "--kind", "add", "--mu", "bern", "--nu", "bern",
                       "--n", "8,16", "--z", "3", "--reference", "arcsine", "--csv", str(path))
    assert code == 0
    assert [r["N"] for r in rep["table"]] == [8, 16]
    assert path.read_text().splitlines()[0].startswith("N,")
    code, rep, _ = run(capsys, "finitefree", "--kind", "add", "--mu", "bern", "--nu", "bern",
                       "--n", "2")
    assert rep["polynomial"]["coeffs"] == [-2.0, 0.0, 1.0]
    assert rep["roots"] == pytest.approx([-math.sqrt(2), math.sqrt(2)])


def test_ldp_example(capsys):
    code, rep, _ = run(capsys, "ldp", "--n", "2", "--m", "2", "--d", "2", "--hist", "diag")
    assert code == 0 and rep["count"] == 2 and rep["brute_force_count"] == 2


def test_measure_from_stdin_and_grid(capsys, monkeypatch, tmp_path):
    path = tmp_path / "rows.csv"
    code, rep, _ = run(capsys, "freeconv", "--kind", "add", "--mu", "-", "--nu", "bern",
                       "--z-grid", "4:5:3", "--csv", str(path),
                       stdin='{"atoms": [1, 2], "weights": [0.5, 0.5]}', monkeypatch=monkeypatch)
    assert code == 0 and len(rep["rows"]) == 3
    assert len(path.read_text().splitlines()) == 4


def test_measure_from_file(capsys, tmp_path):
    f = tmp_path / "m.json"
    f.write_text('{"atoms": [0.0, 1.0]}')
    code, rep, _ = run(capsys, "freeconv", "--kind", "add", "--mu", str(f), "--nu", "delta:0", "--z", "3")
    assert rep["cauchy"] == pytest.approx(0.5 / 3 + 0.5 / 2)


def test_domain_error_exit_code(capsys):
    code, rep, err = run(capsys, "freeconv", "--kind", "add", "--mu", "bern", "--nu", "bern", "--z", "1")
    assert code == 2 and rep is None
    assert "2.0" in err


def test_unknown_measure(capsys):
    code, _, err = run(capsys, "freeconv", "--kind", "add", "--mu", "nope", "--nu", "bern", "--z", "3")
    assert code == 2 and "unknown measure" in err


def test_convergence_error_exit_code(capsys):
    code, _, err = run(capsys, "otsolve", "--kind", "add", "--mu", "uniform-grid:9,-1,1",
                       "--nu", "bern", "--z", "3.0001", "--tol", "1e-30")
    assert code == 3 and "marginal_residual" in err


def test_mutually_exclusive_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["freeconv", "--kind", "add", "--mu", "bern", "--nu", "bern", "--z", "3",
                  "--z-grid", "3:4:2"])
    assert exc.value.code == 2


def test_json_output_is_reproducible(capsys):
    argv = ["quadrature", "--op", "mul", "--n", "3", "--z", "4", "--samples", "2000", "--seed", "3"]
    cli.main(argv)
    first = capsys.readouterr().out
    cli.main(argv)
    assert capsys.readouterr().out == first


def test_verify_filter(capsys):
    code, rep, err = run(capsys, "verify", "--filter", "bernoulli")
    assert code == 0 and rep["all_passed"]
    names = {c["name"] for c in rep["checks"]}
    assert "bernoulli_closed_forms" in names and "quadrature_identities" not in names
    assert "[PASS]" in err


def test_verify_filter_matching_nothing(capsys):
    code, _, _ = run(capsys, "verify", "--filter", "zzz")
    assert code == 2


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "freeot.cli", "ldp", "--n", "4", "--hist", "flat"],
                         capture_output=True, text=True, check=True)
    rep = json.loads(out.stdout)
    assert rep["count"] == rep["brute_force_count"] == 384
