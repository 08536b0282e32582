import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dirac1d import cli
from dirac1d.io import config_from_dict, load_config, phases_csv, potential_csv, read_potential_csv
from dirac1d.errors import ConfigError
from dirac1d.potential_dynamics import solve_phases
from dirac1d.spectral_basis import SimulationDomain

from conftest import ROOT

GOLDEN = ROOT / "tests" / "golden"

TWO_MODE = {
    "domain": {"L": 2 * np.pi, "n_z": 256, "r_max": 4},
    "state": {"terms": [
        {"amplitude": [1.0, 0.0], "electrons": [2]},
        {"amplitude": [1.0, 0.0], "electrons": [1]},
    ]},
    "potential": {"kind": "feedback", "f": 100.0, "t_f": 1.0, "n_t": 64},
}


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_current_vacuum(tmp_path):
    cfg = write_cfg(tmp_path, {"state": {"terms": [{"amplitude": [1, 0]}]}})
    out = tmp_path / "j.csv"
    assert cli.main(["current", "--config", cfg, "--out-csv", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 256
    assert all(float(r["J0"]) == 0 for r in rows)


def test_current_profile_and_shift(tmp_path):
    cfg = write_cfg(tmp_path, TWO_MODE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["current", "--config", cfg, "--t", "0", "--out-csv", str(a)]) == 0
    assert cli.main(["current", "--config", cfg, "--t", "0.5", "--out-csv", str(b)]) == 0
    z = np.array([float(r["z"]) for r in read_rows(a)])
    J0 = np.array([float(r["J0"]) for r in read_rows(a)])
    J1 = np.array([float(r["J0"]) for r in read_rows(b)])
    np.testing.assert_allclose(J0, (1 + np.cos(z)) / (2 * np.pi), atol=1e-15)
    np.testing.assert_allclose(J1, (1 + np.cos(z - 0.5)) / (2 * np.pi), atol=1e-15)


def test_extract_outputs(tmp_path):
    cfg = write_cfg(tmp_path, TWO_MODE)
    out_csv, out_json = tmp_path / "r.csv", tmp_path / "r.json"
    assert cli.main(["extract", "--config", cfg, "--out-csv", str(out_csv), "--out-json", str(out_json)]) == 0
    (row,) = read_rows(out_csv)
    assert list(row) == ["f", "delta_quadrature", "delta_direct", "delta_closed_form",
                         "xi0_initial", "xi0_final", "rel_disagreement"]
    assert float(row["xi0_final"]) < 0
    assert float(row["delta_closed_form"]) == pytest.approx(-100 / (4 * np.pi), rel=1e-12)
    doc = json.loads(out_json.read_text())
    run = doc["runs"][0]
    assert set(run["estimators"]) == {"quadrature", "direct", "closed_form"}
    assert run["estimators_agree"] is True
    assert run["current_amplitude_oracle"] == pytest.approx(2 * run["current_amplitude_half_form"], rel=1e-13)


def test_extract_zero_coupling(tmp_path):
    cfg = write_cfg(tmp_path, TWO_MODE)
    out = tmp_path / "r.csv"
    assert cli.main(["extract", "--config", cfg, "--f", "0", "--out-csv", str(out)]) == 0
    (row,) = read_rows(out)
    for key in ("delta_quadrature", "delta_direct", "delta_closed_form"):
        assert float(row[key]) == 0


def test_extract_default_grid_agreement(configs_dir, tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["extract", "--config", str(configs_dir / "two_mode.json"), "--out-csv", str(out)]) == 0
    (row,) = read_rows(out)
    assert float(row["rel_disagreement"]) <= 1e-6
    assert float(row["xi0_final"]) < 0


def test_outputs_are_byte_identical(tmp_path, configs_dir):
    paths = []
    for i in range(2):
        c, j = tmp_path / f"s{i}.csv", tmp_path / f"s{i}.json"
        cli.main(["sweep", "--config", str(configs_dir / "sweep.json"), "--out-csv", str(c), "--out-json", str(j)])
        paths.append((c.read_bytes(), j.read_bytes()))
    assert paths[0] == paths[1]
    assert b"\r" not in paths[0][0]


def test_sweep_matches_golden(tmp_path, configs_dir):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--config", str(configs_dir / "sweep.json"), "--out-csv", str(out)]) == 0
    got, ref = read_rows(out), read_rows(GOLDEN / "sweep_two_mode.csv")
    assert list(got[0]) == list(ref[0])
    for g, r in zip(got, ref, strict=True):
        for key in r:
            assert float(g[key]) == pytest.approx(float(r[key]), rel=1e-10, abs=1e-15)


def test_sweep_rows_and_ratio(tmp_path):
    cfg = write_cfg(tmp_path, TWO_MODE)
    out = tmp_path / "s.csv"
    argv = ["sweep", "--config", cfg, "--out-csv", str(out)]
    for f in ("1", "10", "100", "1000"):
        argv += ["--f", f]
    assert cli.main(argv) == 0
    rows = read_rows(out)
    assert len(rows) == 4
    deltas = [float(r["delta_quadrature"]) for r in rows]
    assert all(b < a for a, b in zip(deltas, deltas[1:]))
    ratios = np.array([float(r["delta_over_f"]) for r in rows])
    assert np.max(np.abs(ratios / ratios[0] - 1)) <= 1e-9


def test_sweep_empty_list_is_config_error(tmp_path):
    doc = json.loads(json.dumps(TWO_MODE))
    doc["potential"]["f"] = []
    assert cli.main(["sweep", "--config", write_cfg(tmp_path, doc)]) == 2


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bogus=1),
    lambda d: d["domain"].update(n_z=1),
    lambda d: d["potential"].update(kind="magic"),
    lambda d: d["state"]["terms"][0].update(electrons=[99]),
    lambda d: d["state"].update(terms=[{"amplitude": [0, 0]}]),
    lambda d: d["potential"].update(kind="tabulated"),
])
def test_bad_config_exit_code(tmp_path, mutate, capsys):
    doc = json.loads(json.dumps(TWO_MODE))
    mutate(doc)
    assert cli.main(["extract", "--config", write_cfg(tmp_path, doc)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    (tmp_path / "x.json").write_text("{not json")
    assert cli.main(["extract", "--config", str(tmp_path / "x.json")]) == 2
    assert cli.main(["extract", "--config", str(tmp_path / "missing.json")]) == 2


def test_resolution_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, TWO_MODE)
    assert cli.main(["extract", "--config", cfg, "--nz", "2"]) == 3


def test_overrides(tmp_path):
    cfg = load_config(write_cfg(tmp_path, TWO_MODE), {"f": 3.0, "t_f": 0.5, "n_z": 32, "n_t": 16})
    assert (cfg.f, cfg.t_f, cfg.domain.n_z, cfg.n_t) == (3.0, 0.5, 32, 16)


def test_defaults_fill_in():
    cfg = config_from_dict({"state": {"terms": [{"amplitude": [1, 0], "electrons": [1]}]}})
    assert cfg.domain == SimulationDomain(2 * np.pi, 256, 16)
    assert (cfg.t_f, cfg.n_t, cfg.q_charge, cfg.kind) == (1.0, 1024, 1.0, "feedback")


def test_tabulated_roundtrip(tmp_path):
    domain = SimulationDomain(2 * np.pi, 128, 4)
    n_t = 16
    t = np.linspace(0, 1, n_t + 1)[:, None]
    values = np.sin(domain.z)[None, :] * (1 + t)
    potential_csv(values, tmp_path / "V.csv")
    pot = read_potential_csv(tmp_path / "V.csv", domain, 1.0, n_t)
    np.testing.assert_array_equal(pot.values, values)
    doc = json.loads(json.dumps(TWO_MODE))
    doc["domain"] = {"L": 2 * np.pi, "n_z": 128, "r_max": 4}
    doc["potential"] = {"kind": "tabulated", "table": "V.csv", "t_f": 1.0, "n_t": n_t}
    out = tmp_path / "r.csv"
    assert cli.main(["extract", "--config", write_cfg(tmp_path, doc), "--out-csv", str(out)]) == 0
    (row,) = read_rows(out)
    assert row["delta_closed_form"] == ""
    assert float(row["rel_disagreement"]) <= 1e-6


def test_tabulated_incomplete_table(tmp_path):
    (tmp_path / "V.csv").write_text("z_index,t_index,V\n0,0,1.0\n")
    with pytest.raises(ConfigError):
        read_potential_csv(tmp_path / "V.csv", SimulationDomain(2 * np.pi, 4, 1), 1.0, 2)


def test_phase_export(tmp_path):
    from dirac1d.potential_dynamics import AnalyticPotential
    domain = SimulationDomain(2 * np.pi, 8, 2)
    ph = solve_phases(AnalyticPotential(1.0, func=lambda z, t: np.cos(z)), domain, 4)
    text = phases_csv(ph, tmp_path / "ph.csv")
    rows = read_rows(tmp_path / "ph.csv")
    assert len(rows) == 5 * 8 and text.startswith("t_index,z_index,t,z,c1,c2\n")
    assert float(rows[-1]["c1"]) == pytest.approx(ph.c1[-1, -1], rel=1e-15)


def test_verify_passes():
    assert cli.main(["verify"]) == 0


def test_verify_detects_c2_sign_fault(capsys):
    assert cli.main(["verify", "--inject", "c2-sign"]) == 1
    out = capsys.readouterr().out
    assert "FAIL  PDE residual convergence order (static cosine)" in out


def test_verify_amplitude_fault_is_advisory(capsys):
    assert cli.main(["verify", "--inject", "amplitude"]) == 0
    out = capsys.readouterr().out
    assert "PASS  quadrature vs direct oracle" in out
    assert "FLAG  closed-form estimator vs quadrature [advisory]" in out


def test_module_entry_point(configs_dir):
    proc = subprocess.run([sys.executable, "-m", "dirac1d", "extract", "--config", str(configs_dir / "vacuum.json")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    lines = proc.stdout.strip().split("\n")
    assert lines[1].split(",")[1:4] == ["0", "0", ""]
