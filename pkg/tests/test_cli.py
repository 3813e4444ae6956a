import json
import math
from fractions import Fraction

import numpy as np
import pytest

from vbs_entropy import cli, invariants, transfer


def run(argv, tmp_path, capsys):
    code = cli.main(list(argv) + ["--output-dir", str(tmp_path)])
    out = capsys.readouterr()
    return code, out.out, out.err


def per_bond_line(out):
    line = [s for s in out.splitlines() if s.startswith("S/|Lambda_A|")][0]
    return line.split("=")[1].split()[0]


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["entropy", "--family", "square", "--nx", "3", "--ny", "2", "--engine", "transfer"], "0.6494635"),
        (["entropy", "--family", "hex", "--nx", "1", "--ny", "6", "--engine", "transfer"], "0.6878024"),
        (["entropy", "--family", "square", "--nx", "1", "--ny", "1", "--engine", "ed"], f"{math.log(2):.7f}"),
    ],
)
def test_entropy_examples(argv, expected, tmp_path, capsys):
    code, out, _ = run(argv, tmp_path, capsys)
    assert code == 0
    assert per_bond_line(out) == expected


def test_singlet_total_entropy(tmp_path, capsys):
    code, out, _ = run(["entropy", "--family", "square", "--nx", "1", "--ny", "1", "--engine", "ed"], tmp_path, capsys)
    rec = json.loads((tmp_path / "entropy_square_1x1_ed.json").read_text())
    assert rec["spectrum"]["entropy"] == pytest.approx(math.log(2), abs=1e-15)
    assert out.splitlines()[0] == f"S = {math.log(2):.7f}"


def test_record_is_self_describing(tmp_path, capsys):
    argv = ["entropy", "--family", "square", "--nx", "2", "--ny", "2", "--engine", "transfer"]
    run(argv, tmp_path, capsys)
    rec = json.loads((tmp_path / "entropy_square_2x2_transfer.json").read_text())
    for key in ("command", "engine", "version", "backend", "started", "finished", "graph", "spectrum"):
        assert key in rec
    assert rec["graph"]["descriptor"] == "square(2,2)"
    # re-running the echoed command reproduces the payload bit for bit
    other = tmp_path / "again"
    assert cli.main(rec["command"][:-2] + ["--output-dir", str(other)]) == 0
    rec2 = json.loads((other / "entropy_square_2x2_transfer.json").read_text())
    assert rec2["spectrum"] == rec["spectrum"]


def test_mc_record_reproducible(tmp_path, capsys):
    argv = ["entropy", "--family", "square", "--nx", "1", "--ny", "2", "--engine", "mc",
            "--samples", "16000", "--batches", "8", "--seed", "5"]
    code, out, _ = run(argv, tmp_path, capsys)
    assert code == 0
    assert "+-" in out
    rec = json.loads((tmp_path / "entropy_square_1x2_mc.json").read_text())
    assert rec["overlap"]["config"]["seed"] == 5
    other = tmp_path / "again"
    cli.main(argv + ["--output-dir", str(other)])
    rec2 = json.loads((other / "entropy_square_1x2_mc.json").read_text())
    assert rec2["spectrum"] == rec["spectrum"]
    assert rec2["overlap"]["mean"] == rec["overlap"]["mean"]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["entropy", "--family", "cube", "--nx", "1", "--ny", "2"],
        ["entropy", "--family", "square", "--nx", "1"],
        ["entropy", "--family", "square", "--nx", "1", "--ny", "9", "--engine", "transfer"],
        ["entropy", "--family", "square", "--nx", "2", "--ny", "3", "--engine", "vertical"],
        ["entropy", "--family", "hex", "--nx", "1", "--ny", "5", "--engine", "transfer"],
        ["entropy", "--family", "square", "--nx", "2", "--ny", "3", "--engine", "loop"],
        ["entropy", "--family", "square", "--nx", "1", "--ny", "2", "--engine", "mc", "--batches", "4"],
        ["sweep", "--family", "square", "--nx", "5:1", "--ny", "2"],
        ["sweep", "--family", "square", "--nx", "1:3", "--ny", "2:3"],
        ["sweep", "--family", "square", "--nx", "a:b", "--ny", "2"],
        ["fit"],
    ],
)
def test_usage_errors(argv, tmp_path, capsys):
    code, _, _ = run(argv, tmp_path, capsys) if argv else (cli.main([]), None, None)
    assert code == 1


def test_unsupported_geometry_prints_matrix(tmp_path, capsys):
    code, _, err = run(["entropy", "--family", "square", "--nx", "1", "--ny", "9", "--engine", "transfer"], tmp_path, capsys)
    assert code == 1
    assert "supported engine/geometry combinations" in err


def test_parse_range():
    assert cli.parse_range("4:24:2") == list(range(4, 25, 2))
    assert cli.parse_range("3") == [3]
    assert cli.parse_range("1:5") == [1, 2, 3, 4, 5]
    assert cli.parse_range("5:1") == []


def test_sweep_square_top_row(tmp_path, capsys):
    code, out, _ = run(["sweep", "--family", "square", "--nx", "1:5", "--ny", "2", "--engine", "transfer"], tmp_path, capsys)
    assert code == 0
    data = json.loads((tmp_path / "sweep_square.json").read_text())
    vals = [f"{p['per_bond']:.7f}" for p in data["points"]]
    assert vals == ["0.6553433", "0.6498531", "0.6494635", "0.6494368", "0.6494349"]
    assert (tmp_path / "sweep_square.dat").exists()
    assert len(list(tmp_path.glob("entropy_square_*x2_transfer.json"))) == 5


def test_sweep_records_partial_failures(tmp_path, capsys):
    code, out, _ = run(["sweep", "--family", "square", "--nx", "1", "--ny", "2:9", "--engine", "transfer"], tmp_path, capsys)
    assert code == 2
    data = json.loads((tmp_path / "sweep_square.json").read_text())
    assert len(data["points"]) == 5
    assert sum("error" in r for r in data["records"]) == 3


def test_sweep_and_fit_hex_vertical(tmp_path, capsys):
    code, _, _ = run(["sweep", "--family", "hex", "--nx", "1", "--ny", "2:24:2", "--engine", "vertical"], tmp_path, capsys)
    assert code == 0
    path = tmp_path / "sweep_hex.json"
    code, out, _ = run(["fit", str(path)], tmp_path, capsys)
    assert code == 0
    assert out.splitlines()[0] == "C = 0.008082(6), Delta = 0.986(2), alpha = 0.685068(5)"
    rec = json.loads((tmp_path / "sweep_hex_fit.json").read_text())
    assert rec["report"]["below_ln2"]
    curve = np.loadtxt(tmp_path / "sweep_hex_fit.dat")
    assert curve.shape == (201, 2)


def test_fit_synthetic_file(tmp_path, capsys):
    pts = [{"boundary": L, "per_bond": 0.1 * L**-0.8 + 0.6, "stderr": 0.0} for L in range(2, 12)]
    path = tmp_path / "synthetic.json"
    path.write_text(json.dumps({"family": "square", "nx": 1, "points": pts}))
    code, _, _ = run(["fit", str(path)], tmp_path, capsys)
    assert code == 0
    fit = json.loads((tmp_path / "synthetic_fit.json").read_text())["fit"]
    assert fit["C"] == pytest.approx(0.1, abs=1e-8)
    assert fit["Delta"] == pytest.approx(0.8, abs=1e-8)
    assert fit["alpha"] == pytest.approx(0.6, abs=1e-8)


def test_fit_numerical_failure_exit_code(tmp_path, capsys):
    pts = [{"boundary": L, "per_bond": 0.6, "stderr": 0.0} for L in range(2, 10)]
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"points": pts}))
    code, _, err = run(["fit", str(path)], tmp_path, capsys)
    assert code == 2
    assert "numerical failure" in err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "hex", "nx": 1, "ny": 6, "engine": "transfer"}))
    code, out, _ = run(["entropy", "--config", str(cfg)], tmp_path, capsys)
    assert code == 0
    assert per_bond_line(out) == "0.6878024"
    code, out, _ = run(["entropy", "--config", str(cfg), "--ny", "4"], tmp_path, capsys)
    assert per_bond_line(out) == "0.6891577"


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    code, _, _ = run(["entropy", "--config", str(cfg)], tmp_path, capsys)
    assert code == 1


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    target = tmp_path / "env_out"
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(target))
    code = cli.main(["entropy", "--family", "square", "--nx", "1", "--ny", "2"])
    assert code == 0
    assert (target / "entropy_square_1x2_transfer.json").exists()


def test_verify_quick_passes(tmp_path, capsys):
    code, out, _ = run(["verify", "--level", "quick"], tmp_path, capsys)
    assert code == 0
    assert out.splitlines()[-1].endswith("PASS")
    rep = json.loads((tmp_path / "verify_quick.json").read_text())["report"]
    assert rep["passed"] and rep["seconds"] < 60


def test_verify_detects_wrong_moment(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(invariants, "SECOND_MOMENT", Fraction(3, 10))
    transfer.clear_caches()
    try:
        code, out, _ = run(["verify", "--level", "quick"], tmp_path, capsys)
    finally:
        monkeypatch.undo()
        transfer.clear_caches()
    assert code == 3
    failed = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert any("ladder entropy" in line and "square(3,2)" in line for line in failed)
