import json
import math

import numpy as np
import pytest

from catcorrect.cli import main
from catcorrect.errors import ConfigError
from catcorrect.fock import FockVector, fidelity
from catcorrect.serialization import (
    config_from_dict,
    config_to_dict,
    parse_config,
    read_state,
    write_state,
)
from catcorrect.states import cat_state, ys_state

MODMEAS_INI = """
[experiment]
circuit = modmeas
K = 4
N = 2
samples = 120
seed = 5
chunk_size = 50

[model]
mode = finite_lo
beta = 6

[rail1]
alpha = 8

[rail2]
alpha = 4
kind = cat
"""


def test_state_cat_round_trip(tmp_path):
    out = tmp_path / "cat.state"
    assert main(["state", "cat", "--alpha", "2", "--distance", "1", "--mu", "0", "--out", str(out)]) == 0
    st, meta = read_state(out)
    assert meta["type"] == "cat" and meta["params"]["distance"] == "1"
    ref = cat_state(2.0, 1, 0)
    assert np.array_equal(st.amplitudes, ref.amplitudes)
    assert abs(st.amplitudes[0]) ** 2 == pytest.approx(math.exp(-4) / ((1 + math.exp(-8)) / 2), rel=1e-12)


def test_state_coherent_vacuum(tmp_path):
    out = tmp_path / "v.state"
    assert main(["state", "coherent", "--alpha", "0", "--out", str(out)]) == 0
    st, _ = read_state(out)
    assert st.amplitudes[0] == 1 and np.all(st.amplitudes[1:] == 0)


def test_state_degenerate_exit_code(tmp_path):
    assert main(["state", "cat", "--alpha", "0", "--mu", "1", "--out", str(tmp_path / "x")]) == 4


def test_state_bad_code_exit_code(tmp_path):
    assert main(["state", "logical", "--alpha", "2", "--code", "3", "--out", str(tmp_path / "x")]) == 2


def test_state_file_lossless(tmp_path):
    s = ys_state(3.3, 5)
    path = tmp_path / "ys.state"
    write_state(path, s, "ys", {"alpha": 3.3, "components": 5})
    back, _ = read_state(path)
    assert np.array_equal(back.amplitudes, s.amplitudes)
    assert fidelity(back, s) == pytest.approx(1, abs=1e-15)


def test_state_file_rejects_gaps(tmp_path):
    path = tmp_path / "bad.state"
    path.write_text("0 1.0 0.0\n2 0.0 0.0\n")
    with pytest.raises(ConfigError):
        read_state(path)


def test_analytics_point(capsys):
    assert main(["analytics", "--alpha-min", "4", "--alpha-max", "4", "--alpha-steps", "1", "--distances", "2"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[1].split("\t")
    assert float(row[2]) == pytest.approx(math.erf(4), abs=1e-15)
    assert float(row[3]) == pytest.approx(1 - math.exp(-16), abs=1e-15)
    assert float(row[4]) == pytest.approx(math.erfc(4) / 2, rel=1e-12)


def test_analytics_zero_and_monotone(capsys):
    assert main(["analytics", "--alpha-min", "0", "--alpha-max", "5", "--alpha-steps", "11", "--distances", "3"]) == 0
    rows = [r.split("\t") for r in capsys.readouterr().out.strip().splitlines()[1:]]
    assert float(rows[0][2]) == 0 and float(rows[0][4]) == 0.5
    tvd = [float(r[2]) for r in rows]
    assert all(b >= a for a, b in zip(tvd, tvd[1:]))


def test_parse_config():
    cfg = parse_config(MODMEAS_INI)
    assert cfg.circuit == "modmeas" and cfg.K == 4 and cfg.alphas == (8.0, 4.0)
    assert cfg.model.mode == "finite_lo" and cfg.model.beta == 6.0


def test_parse_config_field_diagnostics():
    with pytest.raises(ConfigError, match=r"\[experiment\].*'samples'"):
        parse_config(MODMEAS_INI.replace("samples = 120", "samples = many"))
    with pytest.raises(ConfigError, match=r"rail2"):
        parse_config(MODMEAS_INI.split("[rail2]")[0])
    with pytest.raises(ConfigError):
        parse_config("not an ini file")


def test_config_echo_round_trip():
    cfg = parse_config(MODMEAS_INI)
    assert config_from_dict(json.loads(json.dumps(config_to_dict(cfg)))) == cfg


def test_experiment_config_run_and_replay(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(MODMEAS_INI)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "--config", str(ini), "--out", str(a), "--threads", "1"]) == 0
    assert main(["experiment", "--config", str(ini), "--out", str(b), "--threads", "2"]) == 0
    assert (a / "records.jsonl").read_bytes() == (b / "records.jsonl").read_bytes()
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seed"] == 5 and len(manifest["outputs"]) == 2
    c = tmp_path / "c"
    assert main(["experiment", "--config", str(a / "manifest.json"), "--out", str(c)]) == 0
    sa = json.loads((a / "summary.json").read_text())
    sc = json.loads((c / "summary.json").read_text())
    assert sa == sc
    first = json.loads((a / "records.jsonl").read_text().splitlines()[0])
    assert set(first) >= {"shot", "indices", "fidelity"}


def test_experiment_records_random_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("CATCORRECT_OUT", str(tmp_path / "env"))
    assert main(["experiment", "--figure", "fig3-left", "--samples", "5"]) == 0
    summary = json.loads((tmp_path / "env" / "summary.json").read_text())
    assert isinstance(summary["seed"], int) and summary["shots"] == 5


def test_experiment_config_error_exit(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text(MODMEAS_INI.replace("mode = finite_lo", "mode = finite_lo\nbeta = -1").replace("beta = 6\n", ""))
    assert main(["experiment", "--config", str(ini), "--out", str(tmp_path)]) == 2
    assert main(["experiment", "--out", str(tmp_path)]) == 2


def test_experiment_coverage_exit(tmp_path):
    ini = tmp_path / "cov.ini"
    ini.write_text(MODMEAS_INI.replace("beta = 6", "beta = 6\ngrid_radius = 1.0"))
    assert main(["experiment", "--config", str(ini), "--out", str(tmp_path)]) == 3


def test_fig4_inset_table(tmp_path, capsys):
    assert main(["experiment", "--figure", "fig4-inset", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "fig4_inset.tsv").read_text().strip().splitlines()[1:]
    assert [int(r.split("\t")[0]) for r in rows] == [2, 3, 4, 6, 8]
    assert (tmp_path / "fig4_populations.tsv").exists()


def test_readme_config_example_parses():
    import re
    from pathlib import Path

    text = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    ini = re.search(r"```ini\n(.*?)```", text, re.S).group(1)
    cfg = parse_config(ini)
    assert cfg.circuit == "telecorrect" and cfg.model.mode == "finite_lo"
    assert cfg.ys_sigma is None and cfg.ys_rail == "first" and cfg.thresholds == (0.9, 0.99)
