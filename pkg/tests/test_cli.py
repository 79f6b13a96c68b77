import json
import math
import subprocess
import sys

import numpy as np
import pytest

from apconv.cli import ConfigError, RunConfig, main, parse_config_text
from apconv.funcspace import (half_line, make_trig_polynomial, read_csv, sample, whole_line,
                              write_csv)

SMALL_DOSS = """
# quasi-periodic input on a short window
T_max = 2500
tau_max = 300
tol_tail = 1e-3
epsilons = 0.2, 0.3, 0.4
"""


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys is not None else None
    return code, out


# -- config ---------------------------------------------------------------------

def test_config_parsing():
    cfg, lines = parse_config_text("p = 3\n# comment\nfreqs = 1, 2.5  # trailing\ncoeffs = 1, 0.5i\n"
                                   "dtau = none\nlevels = 6\n")
    assert cfg.p == 3.0 and cfg.freqs == (1.0, 2.5) and cfg.coeffs == (1 + 0j, 0.5j)
    assert cfg.dtau is None and cfg.levels == 6
    assert lines == {"p": 1, "freqs": 3, "coeffs": 4, "dtau": 5, "levels": 6}
    assert RunConfig().T_max == 7000.0


@pytest.mark.parametrize("text,needle", [
    ("p = 2\nbogus = 1\n", "line 2, field 'bogus'"),
    ("beta = abc\n", "line 1, field 'beta'"),
    ("no equals sign\n", "line 1"),
    ("epsilon = nan\n", "field 'epsilon'"),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError) as err:
        parse_config_text(text)
    assert needle in str(err.value)


def test_invalid_value_reports_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("p = 2\nbeta = 1.5\n")
    code, out = run(["verify", "doss", "--config", cfg, "--out", tmp_path], capsys)
    assert code == 2
    assert "line 2, field 'beta'" in out.err


def test_unknown_theorem_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["verify", "nope"])
    assert err.value.code == 2


# -- classify ----------------------------------------------------------------------

def test_classify_constant_csv(tmp_path, capsys):
    f = make_trig_polynomial([0.0], [1.0], whole_line(400.0, 0.05))
    write_csv(f, tmp_path / "c.csv")
    code, out = run(["classify", tmp_path / "c.csv", "--out", tmp_path / "o"], capsys)
    assert code == 0
    d = json.loads((tmp_path / "o" / "classify.json").read_text())
    assert d["label"] == "besicovitch-doss"
    assert "besicovitch-doss" in out.out
    meta = json.loads((tmp_path / "o" / "classify.json.meta.json").read_text())
    assert "created" in meta and "created" not in d


def test_classify_short_window_is_honest(tmp_path):
    f = make_trig_polynomial([1.0, math.sqrt(2)], [1.0, 1.0], whole_line(400.0, 0.05))
    write_csv(f, tmp_path / "q.csv")
    assert run(["classify", tmp_path / "q.csv", "--out", tmp_path])[0] == 0
    d = json.loads((tmp_path / "classify.json").read_text())
    # 400 time units cannot certify relative density for two incommensurate frequencies
    assert d["label"] == "none"


def test_classify_nan_row(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("t,re_1,im_1\n-0.2,1,0\n-0.1,1,0\n0.0,1,0\n0.1,nan,0\n0.2,1,0\n")
    code, out = run(["classify", p, "--out", tmp_path], capsys)
    assert code == 2
    assert "row 4: non-finite value" in out.err


def test_missing_input_file(tmp_path):
    assert run(["classify", tmp_path / "missing.csv", "--out", tmp_path])[0] == 2


# -- convolve ----------------------------------------------------------------------

def test_convolve_exponential_round_trip(tmp_path, capsys):
    g = sample(np.sin, whole_line(40.0, 0.01))
    write_csv(g, tmp_path / "g.csv")
    out = tmp_path / "G.csv"
    code, cap = run(["convolve", tmp_path / "g.csv", "--kernel", "exponential", "--tol-tail", "1e-6",
                     "-o", out], capsys)
    assert code == 0
    assert "tail bound" in cap.err
    G = read_csv(out)
    assert np.max(np.abs(G.values[:, 0] - (np.sin(G.t) - np.cos(G.t)) / 2)) <= 1e-5
    # the output parses back losslessly
    write_csv(G, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_text() == out.read_text()


def test_convolve_finite_mode(tmp_path):
    h = sample(np.ones_like, half_line(10.0, 0.01))
    write_csv(h, tmp_path / "h.csv")
    code, _ = run(["convolve", tmp_path / "h.csv", "--kernel", "exponential", "--mode", "finite",
                   "--out", tmp_path])
    assert code == 0
    H = read_csv(tmp_path / "convolution.csv")
    assert np.max(np.abs(H.values[:, 0] - (1 - np.exp(-H.t)))) <= 1e-5


def test_convolve_inadmissible(tmp_path, capsys):
    g = sample(np.sin, whole_line(40.0, 0.05))
    write_csv(g, tmp_path / "g.csv")
    code, out = run(["convolve", tmp_path / "g.csv", "--beta", "0.5", "--out", tmp_path], capsys)
    assert code == 3
    assert "q(beta-1)>-1" in out.err


def test_convolve_window_too_short(tmp_path, capsys):
    g = sample(np.sin, whole_line(20.0, 0.05))
    write_csv(g, tmp_path / "g.csv")
    code, out = run(["convolve", tmp_path / "g.csv", "--out", tmp_path], capsys)
    assert code == 2
    assert "too short" in out.err


def test_convolve_mode_domain_mismatch(tmp_path):
    h = sample(np.ones_like, half_line(10.0, 0.05))
    write_csv(h, tmp_path / "h.csv")
    assert run(["convolve", tmp_path / "h.csv", "--out", tmp_path])[0] == 2


# -- verify ------------------------------------------------------------------------

@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "doss.cfg"
    p.write_text(SMALL_DOSS)
    return p


def test_verify_doss_small(tmp_path, small_cfg, capsys):
    code, out = run(["verify", "doss", "--config", small_cfg, "--out", tmp_path / "a"], capsys)
    assert code == 0, out.err
    d = json.loads((tmp_path / "a" / "doss.json").read_text())
    assert d["pass"] is True
    assert d["empirical_constant"] <= d["details"]["envelope_bound"]
    assert (tmp_path / "a" / "doss_defects.csv").exists()


def test_verify_is_deterministic(tmp_path, small_cfg):
    for sub in ("a", "b"):
        assert run(["verify", "doss", "--config", small_cfg, "--out", tmp_path / sub])[0] == 0
    for name in ("doss.json", "doss_defects.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_doss_inadmissible(tmp_path, small_cfg, capsys):
    code, out = run(["verify", "doss", "--config", small_cfg, "--beta", "0.5", "--out", tmp_path],
                    capsys)
    assert code == 1
    d = json.loads((tmp_path / "doss.json").read_text())
    assert d["pass"] is False
    assert ["q(beta-1)>-1", False] in d["hypotheses_checked"]
    assert "q(beta-1)>-1" in out.err


def test_verify_dfp_and_relaxation(tmp_path):
    assert run(["verify", "dfp", "--gamma-frac", "1", "--T-max", "20", "--out", tmp_path])[0] == 0
    d = json.loads((tmp_path / "dfp.json").read_text())
    assert d["pass"] is True
    assert run(["verify", "relaxation", "--gamma-frac", "0.7", "--lam", "2", "--t-out", "5",
                "--out", tmp_path])[0] == 0
    r = json.loads((tmp_path / "relaxation.json").read_text())
    assert r["empirical_constant"] <= 1e-2


def test_verify_perturbation_small(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("T_max = 3000\ntau_max = 100\ntol_tail = 1e-3\nq_pert = shrinking-spikes\n")
    assert run(["verify", "perturbation", "--config", cfg, "--out", tmp_path])[0] == 0


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "apconv", "verify", "dfp", "--gamma-frac", "1",
                           "--T-max", "10", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "dfp: pass" in proc.stdout
    ver = subprocess.run([sys.executable, "-m", "apconv", "--version"], capture_output=True, text=True)
    assert ver.returncode == 0 and ver.stdout.strip().startswith("apconv ")
