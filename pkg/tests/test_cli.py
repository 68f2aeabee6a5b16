import json
import subprocess
import sys
from pathlib import Path

import pytest

from saboa import cli
from saboa.streams import stream_from_spec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


TRIVIAL = """
[experiment]
algorithm = squint
horizon = 1
seed = 0

[stream]
kind = experts
experts = 1
"""


def data_rows(csv_path):
    return [l for l in csv_path.read_text().splitlines() if l and not l.startswith("#")][1:]


def test_trivial_run(tmp_path):
    p = write(tmp_path, TRIVIAL)
    assert cli.main(["run", str(p)]) == 0
    rows = data_rows(tmp_path / "exp.csv")
    assert len(rows) == 1 and rows[0].startswith("1,")
    summary = json.loads((tmp_path / "exp.summary.json").read_text())
    assert summary["complete"] and summary["schema"] == 1


def test_malformed_config_names_key(tmp_path, capsys):
    p = write(tmp_path, TRIVIAL.replace("horizon = 1", "horizon = 1\nhorizn = 5"))
    assert cli.main(["run", str(p)]) == 2
    assert "horizn" in capsys.readouterr().err
    p = write(tmp_path, TRIVIAL.replace("experts = 1", "experts = 1\ndims = 4"))
    assert cli.main(["run", str(p)]) == 2
    assert "dims" in capsys.readouterr().err
    p = write(tmp_path, TRIVIAL.replace("horizon = 1", "horizon = many"))
    assert cli.main(["run", str(p)]) == 2
    assert "horizon" in capsys.readouterr().err


def test_unknown_algorithm(tmp_path, capsys):
    p = write(tmp_path, TRIVIAL.replace("algorithm = squint", "algorithm = hedge"))
    assert cli.main(["run", str(p)]) == 2
    assert "hedge" in capsys.readouterr().err


def test_unsupported_regime_is_config_error(tmp_path):
    p = write(tmp_path, TRIVIAL.replace("algorithm = squint", "algorithm = saboa")
              .replace("kind = experts\nexperts = 1", "kind = adversarial\ndim = 6"))
    assert cli.main(["run", str(p)]) == 2


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    def tight(spec, seed=0):
        s = stream_from_spec(spec, seed)
        s.G = 1e-6
        return s
    monkeypatch.setattr(cli, "stream_from_spec", tight)
    p = write(tmp_path, TRIVIAL.replace("horizon = 1", "horizon = 16")
              .replace("kind = experts\nexperts = 1", "kind = quadratic\ndim = 4"))
    assert cli.main(["run", str(p)]) == 3
    summary = json.loads((tmp_path / "exp.summary.json").read_text())
    assert summary["complete"] is False and summary["invariant_violations"] == 1


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    src = (CONFIGS / "reference_saboa.ini").read_text().replace("4096", "512")
    p = write(tmp_path, src)
    assert cli.main(["run", str(p), "--out", str(a)]) == 0
    assert cli.main(["run", str(p), "--out", str(b)]) == 0
    assert (a / "exp.csv").read_bytes() == (b / "exp.csv").read_bytes()
    head = (a / "exp.csv").read_text().splitlines()[:2]
    assert head[0].startswith("# saboa ") and head[1].startswith("# config {")


def test_seed_override_changes_output(tmp_path):
    src = (CONFIGS / "reference_saboa.ini").read_text().replace("4096", "64")
    p = write(tmp_path, src)
    cli.main(["run", str(p), "--out", str(tmp_path / "a")])
    cli.main(["run", str(p), "--out", str(tmp_path / "b"), "--seed", "8"])
    assert data_rows(tmp_path / "a" / "exp.csv") != data_rows(tmp_path / "b" / "exp.csv")


SWEEP = """
[experiment]
algorithm = squint-corners
horizon = 64
seed = 0

[stream]
kind = quadratic
dim = 4

[sweep]
experiment.horizon = 16, 32, 64, 128, 256
"""


def test_sweep_five_cells(tmp_path):
    p = write(tmp_path, SWEEP, "sw.ini")
    assert cli.main(["sweep", str(p)]) == 0
    agg = json.loads((tmp_path / "sw.sweep.json").read_text())
    assert len(agg["cells"]) == 5 and agg["failed"] == 0
    for i, h in enumerate((16, 32, 64, 128, 256)):
        rows = data_rows(tmp_path / f"sw.cell{i:03d}.csv")
        assert rows[-1].startswith(f"{h},")


def test_sweep_keep_going(tmp_path):
    p = write(tmp_path, SWEEP.replace("16, 32, 64, 128, 256", "16, 0, 64"), "sw.ini")
    assert cli.main(["sweep", str(p)]) == 2
    assert cli.main(["sweep", str(p), "--keep-going"]) == 0
    agg = json.loads((tmp_path / "sw.sweep.json").read_text())
    assert [c["status"] for c in agg["cells"]] == ["ok", "failed", "ok"]
    assert "horizon" in agg["cells"][1]["error"]


def test_parallel_matches_sequential(tmp_path):
    p = write(tmp_path, SWEEP, "sw.ini")
    assert cli.main(["sweep", str(p), "--out", str(tmp_path / "seq")]) == 0
    assert cli.main(["sweep", str(p), "--out", str(tmp_path / "par"), "--workers", "3"]) == 0
    seq = (tmp_path / "seq" / "sw.sweep.json").read_bytes()
    par = (tmp_path / "par" / "sw.sweep.json").read_bytes()
    assert seq == par


def test_sweep_without_section(tmp_path):
    p = write(tmp_path, TRIVIAL)
    assert cli.main(["sweep", str(p)]) == 2


def test_console_entry_point(tmp_path):
    p = write(tmp_path, TRIVIAL)
    out = subprocess.run([sys.executable, "-m", "saboa.cli", "run", str(p)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "squint: T=1" in out.stdout
