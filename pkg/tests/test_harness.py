import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nchhs import experiments as ex
from nchhs.cli import main
from nchhs.config import DEFAULTS, ConfigError, SimConfig, parse_config
from nchhs.fieldio import FieldFormatError, read_field, write_field, write_pgm
from nchhs.rng import splitmix64, symmetric_noise, uniform

SMALL = """
[domain]
nx = 16
ny = 16
[stepper]
t_end = 0.004
snapshot_every = 2
[initial]
amplitude = 0.3
"""


# -- config -------------------------------------------------------------------
def test_defaults_fill_empty_text():
    cfg = parse_config("")
    assert isinstance(cfg, SimConfig)
    assert cfg.grid.nx == DEFAULTS["domain"]["nx"] and cfg.grid.boundary_mode == "neumann"
    assert cfg.step.tau == 1e-3 and cfg.step.form == "b_form" and cfg.step.tau_max is None
    assert cfg.material.theta == 1.0 and cfg.material.theta0 == 1.5
    assert cfg.kernel.family == "gaussian" and cfg.solver.brinkman_nu == 0.0
    assert cfg.initial.kind == "spinodal" and cfg.seed == 0


def test_theta_constraint_message():
    with pytest.raises(ConfigError) as exc:
        parse_config("[material]\ntheta0 = 0.5\ntheta = 1.0\n")
    assert any("theta0 > theta required" in e and "line 2" in e for e in exc.value.errors)


def test_eps_range_message():
    with pytest.raises(ConfigError) as exc:
        parse_config("[material]\neps = 1.5\n")
    assert any("eps in [0,1)" in e for e in exc.value.errors)


def test_all_violations_reported():
    text = ("[domain]\nnx = four\n[stepper]\ntau = -1\nform = rk4\n[bogus]\n"
            "[kernel]\ncolour = red\n[initial]\namplitude = 1.0\n")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    errs = exc.value.errors
    assert len(errs) == 6
    for frag in ("nx (line 2)", "tau (line 4)", "form (line 5)", "[bogus] (line 6)",
                 "colour", "amplitude (line 10)"):
        assert any(frag in e for e in errs), frag


def test_missing_initial_file(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config("[initial]\nkind = file\npath = nothere.fld\n", base_dir=tmp_path)
    assert "not found" in exc.value.errors[0]


def test_comments_and_case():
    cfg = parse_config("# header\n[Domain]\nNX = 32  # cells\n")
    assert cfg.grid.nx == 32


# -- rng ----------------------------------------------------------------------
def test_splitmix_reference_vector():
    assert splitmix64(1234567, 5).tolist() == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
        4593380528125082431, 16408922859458223821]


def test_uniform_and_noise_ranges():
    u = uniform(7, (64, 64))
    assert u.min() >= 0 and u.max() < 1 and abs(u.mean() - 0.5) < 0.02
    n = symmetric_noise(7, (64, 64), 0.3)
    assert np.abs(n).max() <= 0.3
    assert np.array_equal(n, symmetric_noise(7, (64, 64), 0.3))
    assert not np.array_equal(n, symmetric_noise(8, (64, 64), 0.3))


# -- field files --------------------------------------------------------------
@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)),
              elements=st.floats(allow_nan=False, allow_infinity=False)),
       st.booleans())
def test_field_round_trip(tmp_path_factory, values, ascii_mode):
    path = tmp_path_factory.mktemp("f") / "x.fld"
    write_field(path, values, 1.0, 2.0, 0.125, ascii=ascii_mode)
    snap = read_field(path)
    assert snap.values.tobytes() == values.tobytes()
    assert (snap.lx, snap.ly, snap.t) == (1.0, 2.0, 0.125)
    assert not path.with_name("x.fld.partial").exists()


def test_field_format_errors(tmp_path):
    p = tmp_path / "bad.fld"
    p.write_bytes(b"NOT-A-FIELD 2 2 1 1 0\n")
    with pytest.raises(FieldFormatError):
        read_field(p)
    p.write_bytes(b"NCHHS-FIELD 2 2 1 1 0\n1.0\n2.0\n")
    with pytest.raises(FieldFormatError):
        read_field(p)


def test_pgm(tmp_path):
    v = np.arange(12.0).reshape(4, 3)
    data = write_pgm(tmp_path / "a.pgm", v).read_bytes()
    assert data.startswith(b"P5\n4 3\n255\n") and len(data) == len(b"P5\n4 3\n255\n") + 12


# -- experiments --------------------------------------------------------------
def test_tau_sweep_order():
    cfg = parse_config("[domain]\nnx = 16\nny = 16\n[stepper]\nt_end = 0.02\nform = mu_form\n"
                       "[material]\neps = 0.1\n[initial]\nkind = bubble\namplitude = 0.6\n")
    res = ex.sweep(cfg, "tau", [4e-3, 2e-3, 1e-3])
    assert all(r.status == "ok" for r in res.rows)
    assert res.orders[0] >= 0.9
    assert res.csv().splitlines()[0].startswith("axis,value")


def test_grid_sweep_compares_on_coarse_grid():
    cfg = parse_config("[stepper]\nt_end = 0.002\nform = mu_form\n[material]\neps = 0.1\n"
                       "[initial]\nkind = bubble\namplitude = 0.6\n")
    res = ex.sweep(cfg, "grid", [8, 16])
    assert res.diffs[0] > 0 and np.isnan(res.rows[-1].l2_diff)
    with pytest.raises(ValueError):
        ex.sweep(cfg, "colour", [1, 2])


def test_threaded_sweep_matches_serial():
    cfg = parse_config(SMALL)
    a = ex.sweep(cfg, "eps", [0.1, 0.05], threads=1)
    b = ex.sweep(cfg, "eps", [0.1, 0.05], threads=2)
    assert a.csv() == b.csv()


# -- cli ----------------------------------------------------------------------
def test_cli_run_is_deterministic(tmp_path):
    cfg = tmp_path / "a.ini"
    cfg.write_text(SMALL)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o1"), "--quiet"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o2"), "--quiet"]) == 0
    a = (tmp_path / "o1" / "diagnostics.csv").read_bytes()
    assert a == (tmp_path / "o2" / "diagnostics.csv").read_bytes()
    assert (tmp_path / "o1" / "snapshots" / "pi_000002.fld").exists()
    assert not list(tmp_path.glob("o1/**/*.partial"))
    assert main(["diagnose", str(tmp_path / "o1" / "snapshots" / "phi_000004.fld"),
                 "--config", str(cfg), "--out", str(tmp_path / "d"), "--quiet"]) == 0
    assert "holder_alpha=" in (tmp_path / "d" / "diagnose.txt").read_text()


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[material]\neps = 2\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "eps in [0,1)" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 4
    junk = tmp_path / "junk.fld"
    junk.write_text("garbage\n")
    assert main(["diagnose", str(junk)]) == 4


def test_cli_solver_failure_leaves_partial(tmp_path):
    cfg = tmp_path / "a.ini"
    cfg.write_text(SMALL.replace("[initial]", "[solver]\nmax_iter = 1\n[initial]"))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 3
    assert (tmp_path / "o" / "diagnostics.csv.partial").exists()
    assert not (tmp_path / "o" / "diagnostics.csv").exists()


def test_cli_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("NCHHS_THREADS", "3")
    assert ex.default_threads() == 3
    monkeypatch.setenv("NCHHS_THREADS", "lots")
    assert ex.default_threads() == 1
    cfg = tmp_path / "a.ini"
    cfg.write_text(SMALL)
    assert main(["stability", "--config", str(cfg), "--deltas", "1e-2,1e-3",
                 "--out", str(tmp_path / "s"), "--quiet"]) == 0
    assert (tmp_path / "s" / "stability.csv").read_text().count("\n") == 3
