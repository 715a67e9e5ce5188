import json
import subprocess
import sys

import pytest

from conftest import XS_CONFIG, brute_costs
from dpovqe.cli import main
from dpovqe.market import MarketModel
from dpovqe.problem import build_hamiltonian


def write_config(path, body):
    path.write_text(body)
    return str(path)


XS_TOML = """
[data]
source = "synthetic"
days = 120
seed = 11

[problem]
preset = "xs"

[run]
seed = 3
generations = 20
shots = 2000
sae_steps = 100
sae_time = 1.0
"""

PENALTY_TOML = """
[data]
source = "zero"

[problem]
preset = "xs"
"""


@pytest.fixture
def xs_cfg(tmp_path):
    return write_config(tmp_path / "xs.toml", XS_TOML)


def strip_meta(path):
    doc = json.loads(open(path).read())
    doc.pop("metadata")
    return doc


def test_gen_data_and_csv_source(tmp_path, capsys):
    csv = tmp_path / "p.csv"
    assert main(["gen-data", "--assets", "3", "--days", "120", "--seed", "2", "--out", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 1 + 3 * 120
    cfg = write_config(tmp_path / "c.toml", '[data]\nsource = "csv"\npath = "p.csv"\n[problem]\npreset = "xs"\n')
    assert main(["build", "--config", cfg, "--out", str(tmp_path / "prob.json")]) == 0
    doc = json.loads((tmp_path / "prob.json").read_text())
    assert set(doc) == {"problem", "qubo", "ising", "offset"}
    assert "6-qubit" in capsys.readouterr().err


@pytest.mark.parametrize("method", ["vqe", "exhaustive", "sa", "sae", "random"])
def test_solve_methods(tmp_path, xs_cfg, method):
    out = tmp_path / f"{method}.json"
    hist = tmp_path / "h.csv"
    assert main(["solve", "--config", xs_cfg, "--method", method, "--out", str(out), "--hist", str(hist)]) == 0
    doc = json.loads(out.read_text())
    assert doc["method"] == method and len(doc["best_bitstring"]) == 6
    assert hist.read_text().startswith("cost_bin,count\n")


def test_solve_exhaustive_penalty_only(tmp_path):
    cfg = write_config(tmp_path / "p.toml", PENALTY_TOML)
    out = tmp_path / "r.json"
    assert main(["solve", "--config", cfg, "--method", "exhaustive", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    h = build_hamiltonian(XS_CONFIG, MarketModel.zeros(2, 3))
    assert doc["min_cost"] == pytest.approx(brute_costs(h).min(), abs=1e-12)
    # all-zeros costs n_t * rho; the minimum can only be lower
    assert doc["min_cost"] <= XS_CONFIG.n_t * XS_CONFIG.rho


def test_sae_trace_export(tmp_path, xs_cfg):
    trace = tmp_path / "t.csv"
    assert main(["solve", "--config", xs_cfg, "--method", "sae", "--out", str(tmp_path / "r.json"), "--trace", str(trace)]) == 0
    assert len(trace.read_text().splitlines()) == 12


def test_reports_are_reproducible(tmp_path, xs_cfg):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", "--config", xs_cfg, "--out", str(a)]) == 0
    assert main(["--threads", "3", "solve", "--config", xs_cfg, "--out", str(b)]) == 0
    assert strip_meta(a) == strip_meta(b)


def test_report_subcommand(tmp_path, xs_cfg, capsys):
    out, hist = tmp_path / "r.json", tmp_path / "h.csv"
    main(["solve", "--config", xs_cfg, "--method", "random", "--out", str(out)])
    assert main(["report", "--in", str(out), "--hist", str(hist)]) == 0
    rows = hist.read_text().splitlines()[1:]
    assert sum(int(r.split(",")[1]) for r in rows) == 2000
    assert "below offset" in capsys.readouterr().err


def test_xxl_vqe_hits_qubit_cap(tmp_path, capsys):
    cfg = write_config(tmp_path / "x.toml", '[problem]\npreset = "xxl"\n')
    assert main(["solve", "--config", cfg, "--method", "vqe", "--out", str(tmp_path / "r.json")]) == 2
    assert "qubit cap exceeded" in capsys.readouterr().err


def test_depth_xxl_real_amplitudes(tmp_path, capsys):
    cfg = write_config(tmp_path / "x.toml", '[problem]\npreset = "xxl"\n')
    assert main(["depth", "--config", cfg, "--ansatz", "real_amplitudes"]) == 0
    assert "n_params = 448" in capsys.readouterr().err


def test_depth_with_coupling_map(tmp_path, capsys):
    cfg = write_config(tmp_path / "x.toml", '[problem]\npreset = "xs"\n')
    edges = tmp_path / "line.txt"
    edges.write_text("".join(f"{i} {i + 1}\n" for i in range(5)))
    assert main(["depth", "--config", cfg, "--ansatz", "cyclic", "--coupling", str(edges)]) == 0
    err = capsys.readouterr().err
    assert "swaps = " in err and "routed_depth = " in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["solve"],
        ["bogus"],
        ["--threads", "0", "gen-data", "--assets", "1", "--days", "5", "--out", "x.csv"],
        ["gen-data", "--assets", "0", "--days", "5", "--out", "x.csv"],
        ["report", "--in", "does-not-exist.json"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


@pytest.mark.parametrize(
    "body",
    [
        '[problem]\npreset = "huge"\n',
        '[problem]\npreset = "xs"\n[run]\nmethod = "magic"\n',
        '[problem]\npreset = "xs"\n[run]\nfoo = 1\n',
        '[data]\nsource = "csv"\n[problem]\npreset = "xs"\n',
        'not toml [',
    ],
)
def test_config_errors_exit_1(tmp_path, body, capsys):
    cfg = write_config(tmp_path / "bad.toml", body)
    assert main(["solve", "--config", cfg]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_csv_is_runtime_error(tmp_path):
    cfg = write_config(tmp_path / "c.toml", '[data]\nsource = "csv"\npath = "nope.csv"\n[problem]\npreset = "xs"\n')
    assert main(["solve", "--config", cfg, "--method", "exhaustive", "--out", str(tmp_path / "r.json")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dpovqe", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout == "" and "error" in proc.stderr
