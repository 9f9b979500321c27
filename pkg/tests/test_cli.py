import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from brownmeasure.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_closed_lp(capsys):
    code, out, _ = run(capsys, "closed", "--family", "zn", "--n", "1", "--what", "lp", "--p", "0.5")
    assert code == 0
    (row,) = rows(out)
    assert float(row["norm_pow_p"]) == pytest.approx(1.414213562, abs=1e-9)
    assert float(row["norm"]) == pytest.approx(2.0)


def test_closed_lp_domain_error(capsys):
    code, _, err = run(capsys, "closed", "--what", "lp", "--p", "2")
    assert code == 2 and "error" in err


def test_brown_named(capsys):
    code, out, _ = run(capsys, "brown", "--measure", "named:abs_z_pow_n:1", "--r", "1")
    assert code == 0
    header = json.loads(out.splitlines()[0].lstrip("# "))
    assert header["kernel_mass"] == 0.0 and header["fk_determinant"] == pytest.approx(1.0)
    (row,) = rows(out)
    assert float(row["F"]) == pytest.approx(0.5, abs=1e-12)
    assert float(row["planar_density"]) == pytest.approx(1 / (4 * np.pi), rel=1e-6)


def test_brown_atoms(capsys):
    spec = '{"type":"atoms","atoms":[[1,0.5],[3,0.5]]}'
    code, out, _ = run(capsys, "brown", "--measure", spec, "--r", "1,1.5,2,3")
    assert code == 0
    f = [float(r["F"]) for r in rows(out)]
    assert f[0] == 0.0 and f[-1] == 1.0 and 0 < f[1] < f[2] < 1


def test_brown_discretized(capsys):
    code, out, _ = run(capsys, "brown", "--measure", "named:abs_z_pow_n:1", "--discretize", "--atoms", "2000", "--r", "1")
    assert code == 0
    assert float(rows(out)[0]["F"]) == pytest.approx(0.5, abs=5e-3)


def test_measure_summary(capsys):
    code, out, _ = run(capsys, "measure", "--measure", '{"type":"atoms","atoms":[[1,0.5],[3,0.5]]}')
    vals = {r["quantity"]: float(r["value"]) for r in rows(out)}
    assert code == 0
    assert vals["fk_determinant"] == pytest.approx(np.sqrt(3))
    assert vals["lambda2"] == pytest.approx(np.sqrt(5))


def test_measure_json_round_trip(capsys, tmp_path):
    path = tmp_path / "mu.json"
    path.write_text(json.dumps({"type": "atoms", "atoms": [[2, 0.25], [0.5, 0.75]]}))
    code, out, _ = run(capsys, "measure", "--measure", str(path), "--json")
    assert code == 0
    assert json.loads(out)["atoms"] == [[0.5, 0.75], [2.0, 0.25]]


def test_transform(capsys):
    code, out, _ = run(capsys, "transform", "--measure", "named:abs_z_sq", "--kind", "s", "--at=-0.5")
    assert code == 0
    (row,) = rows(out)
    assert float(row["value"]) == pytest.approx(1.0, rel=1e-10)
    assert row["domain_tag"] == "s_interval"


def test_transform_domain_error(capsys):
    code, _, err = run(capsys, "transform", "--measure", "named:abs_z_sq", "--kind", "psi", "--at", "1")
    assert code == 2 and "error" in err


def test_fkdet(capsys):
    spec = '{"type":"atoms","atoms":[[1,0.5],[3,0.5]]}'
    code, out, _ = run(capsys, "fkdet", "--measure", spec, "--lam", "0,10")
    assert code == 0
    r = rows(out)
    assert float(r[0]["delta"]) == pytest.approx(np.sqrt(3))
    assert float(r[1]["delta"]) == pytest.approx(10.0, abs=1e-12)


def test_simulate_deterministic(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["simulate", "--ensemble", "spherical", "--n", "8", "--trials", "3", "--seed", "5", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].splitlines()[0] == b"trial,kind,value"


def test_brown_matrix(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"real": [[0.5, 0], [0, -0.5]], "imag": [[0, 0], [0, 0]]}))
    code, out, _ = run(capsys, "brown-matrix", "--matrix", str(path), "--box=-1,1,-1,1", "--resolution", "64", "--neg-tol", "0.01")
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["x", "y", "mass"]
    assert sum(float(x["mass"]) for x in r) == pytest.approx(1.0, abs=0.02)


def test_every_csv_has_header(capsys):
    commands = [
        ["closed", "--what", "density", "--grid", "0.5,1"],
        ["closed", "--what", "brown", "--grid", "0.5,1"],
        ["closed", "--what", "h", "--grid", "log:0.1:10:3"],
        ["transform", "--measure", "named:abs_x_sq", "--kind", "psi", "--at=-2:-1:3"],
    ]
    for argv in commands:
        code, out, _ = run(capsys, *argv)
        assert code == 0
        first = next(ln for ln in out.splitlines() if not ln.startswith("#"))
        assert all(not c.strip().lstrip("-").replace(".", "").isdigit() for c in first.split(","))


def test_seventeen_digits(capsys):
    _, out, _ = run(capsys, "closed", "--what", "density", "--grid", "0.3")
    value = rows(out)[0]
    assert any(len(v.replace(".", "").lstrip("0")) >= 16 for v in value.values())


def test_bad_flags_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["closed", "--what", "nope"])
    assert exc.value.code == 2


def test_verify_single_criterion(capsys):
    code, out, _ = run(capsys, "verify", "--only", "4")
    assert code == 0
    assert "[PASS]" in out


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "brownmeasure", "closed", "--what", "lp", "--p", "0.5"],
        capture_output=True, text=True, check=True,
    )
    assert res.stdout.splitlines()[0] == "p,norm_pow_p,norm"


@pytest.mark.slow
def test_verify_quick():
    res = subprocess.run([sys.executable, "-m", "brownmeasure", "verify", "--quick"], capture_output=True, text=True)
    assert res.returncode == 0, res.stdout + res.stderr
