import hashlib

import pytest

from transcrit.cli import DEFAULTS, load_config, main, parse_config_text
from transcrit.errors import ParameterError
from transcrit.io import read_csv


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_simulate_zero_steps(tmp_path):
    assert run(tmp_path, "simulate", "--n", "0", "--x0", "-1", "--y0", "-1") == 0
    header, rows = read_csv(tmp_path / "simulate.csv")
    assert header == ["step", "x", "y", "eps", "h", "branch", "flag"]
    assert rows == [["0", "-1.0", "-1.0", "0.025", "0.01", "S_a_minus", ""]]


def test_simulate_diagonal_canard(tmp_path):
    assert run(tmp_path, "simulate", "--lambda", "1", "--n", "2000") == 0
    _, rows = read_csv(tmp_path / "simulate.csv")
    assert len(rows) == 2001
    assert all(float(r[1]) == float(r[2]) for r in rows)


def test_simulate_is_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "simulate", "--n", "500") == 0
    assert run(b, "simulate", "--n", "500") == 0
    assert sha(a / "simulate.csv") == sha(b / "simulate.csv")


def test_simulate_divergence_row(tmp_path):
    assert run(tmp_path, "simulate", "--x0", "2", "--y0", "0", "--h", "0.1", "--n",
               "5000") == 0
    _, rows = read_csv(tmp_path / "simulate.csv")
    assert rows[-1][-1] == "divergence"
    assert all(r[-1] == "" for r in rows[:-1])


@pytest.mark.parametrize("chart,point", [("K1", "1,-1,0.025,0.01"),
                                         ("K2", "-3,-3,0.2,0.002"),
                                         ("K3", "0.5,0.1,0.09,0.005")])
def test_chart_residual_and_invariants(tmp_path, chart, point):
    assert run(tmp_path, "chart", "--chart", chart, f"--point={point}", "--n", "200",
               "--delta", "0.1") == 0
    header, rows = read_csv(tmp_path / f"chart_{chart}.csv")
    res = [float(r[header.index("conj_residual")]) for r in rows]
    assert max(res) <= 1e-12
    eh = [float(r[header.index("eps_h")]) for r in rows]
    assert max(eh) - min(eh) <= 1e-12 * abs(eh[0])
    if chart == "K2":
        assert len({r[3] for r in rows}) == 1 and len({r[4] for r in rows}) == 1
    else:
        prod = [float(r[1]) * float(r[3]) * float(r[4]) for r in rows]
        assert max(prod) - min(prod) <= 1e-12 * prod[0]


def test_chart_outside_domain(tmp_path, capsys):
    assert run(tmp_path, "chart", "--chart", "K1", "--point=2,-1,0.025,0.01") == 2
    assert "r1" in capsys.readouterr().err


def test_sweep_empty_grid(tmp_path):
    assert run(tmp_path, "sweep", "--grid", "") == 2


def test_sweep_writes_fits_and_svg(tmp_path):
    assert run(tmp_path, "sweep", "--grid", "0.2,0.3,0.4", "--samples", "3",
               "--format", "svg") == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header[-1] == "flag" and len(rows) == 3
    _, fits = read_csv(tmp_path / "sweep_fits.csv")
    assert "log_width_ratio_vs_inv_nu_delta" in {r[0] for r in fits}
    assert (tmp_path / "sweep_width_ratio.svg").read_text().startswith("<svg")


def test_verify_rejects_hypothesis_violation(tmp_path):
    # h rho^3 = 0.05 >= eps = 0.025
    assert run(tmp_path, "verify", "--h", "0.05") == 2
    assert not (tmp_path / "report.csv").exists()


def test_verify_canard_only(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("chart_samples = 2000\n")
    assert run(tmp_path, "verify", "--lambda", "1", "--config", str(cfg)) == 0
    _, rows = read_csv(tmp_path / "report.csv")
    status = {r[0]: r[1] for r in rows}
    assert status["k2_passages"] == "skip"
    assert any(k.startswith("canard") and v == "pass" for k, v in status.items())


def test_verify_exit_code_tracks_rows(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("# reduced sizes\nchart_samples = 2000\nk2_samples = 20\n"
                   "transition_starts = 6\ncontainment_samples = 200\n"
                   "composition_samples = 4\nlams = [0.5, 2]\ndeltas = [0.1]\nnus = [0.01]\n")
    rc = run(tmp_path, "verify", "--config", str(cfg))
    _, rows = read_csv(tmp_path / "report.csv")
    all_pass = all(r[1] != "fail" for r in rows)
    assert rc == (0 if all_pass else 1)
    assert (tmp_path / "report.txt").exists()


def test_print_config_and_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("eps = 0.03\nh = 0.002\nlams = [0.5, 2.0]\n")
    monkeypatch.setenv("TRANSCRIT_H", "0.004")
    assert main(["simulate", "--config", str(cfg), "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "eps = 0.03\n" in out and "h = 0.004\n" in out and "lams = [0.5, 2.0]" in out
    assert main(["simulate", "--config", str(cfg), "--h", "0.001", "--print-config"]) == 0
    assert "h = 0.001\n" in capsys.readouterr().out
    assert set(DEFAULTS) == {line.split(" = ")[0] for line in out.splitlines()}


def test_config_parser_errors():
    assert parse_config_text("# c\n\nseed = 3\ngrid = [0.1, 0.2]\n") == {
        "seed": 3, "grid": (0.1, 0.2)}
    with pytest.raises(ParameterError):
        parse_config_text("bogus = 1\n")
    with pytest.raises(ParameterError):
        parse_config_text("seed 3\n")
    with pytest.raises(ParameterError):
        load_config(None, {"format": "png"}, environ={})
