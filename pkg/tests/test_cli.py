from __future__ import annotations

import math

import numpy as np
import pytest

from thermophase.cli import main
from thermophase.config import ConfigError, effective_config, load_run

BASE_MODEL = """\
model.rho = 1.0
model.c_p = 1.0
model.d_c = 0.2
model.tau_phi = 1.0
model.eps_interface = 0.1
model.lambda_cpl = 0.5
model.beta = 1.0
model.gamma = 1.0
model.alpha = 0.037
model.L_c = 0.5
model.L_phi = 0.5
model.A_d = 1.0
model.A_r = 1.2
model.E_d = 2.0
model.E_r = 1.0
model.R_gas = 1.0
model.k_lo = 0.8
model.k_hi = 1.2
"""

PERTURBED_RUN = BASE_MODEL + """\
source.preset = zero
source.C0 = 0.05
source.s_sup = 0.05
grid.n = 24
grid.length = 1.0
controls.dt = auto
controls.scheme = explicit-monotone
controls.t_end = 1.0
controls.snapshot_every = 500
initial.preset = equilibrium-perturbed
initial.theta_bar = 1.0
initial.amplitude = 0.01
initial.mode = 1
seed = 42
"""

HOMOGENEOUS_RUN = BASE_MODEL + """\
source.preset = zero
grid.n = 16
grid.length = 1.0
controls.dt = auto
controls.t_end = 0.0
initial.preset = homogeneous
initial.theta0 = 1.0
initial.c0 = 0.5
initial.phi0 = 0.5
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigParsing:
    def test_unknown_key_cites_line(self, tmp_path):
        cfg = write_cfg(tmp_path, HOMOGENEOUS_RUN + "solver.tolerance = 1\n")
        with pytest.raises(ConfigError) as err:
            load_run(cfg)
        assert "unknown key" in str(err.value)
        assert f":{len(HOMOGENEOUS_RUN.splitlines()) + 1}:" in str(err.value)

    def test_duplicate_key_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, HOMOGENEOUS_RUN + "grid.n = 8\n")
        with pytest.raises(ConfigError, match="duplicate"):
            load_run(cfg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            load_run(tmp_path / "absent.cfg")

    def test_invalid_parameter_cites_hypothesis_and_line(self, tmp_path):
        text = HOMOGENEOUS_RUN.replace("model.tau_phi = 1.0", "model.tau_phi = -1.0")
        cfg = write_cfg(tmp_path, text)
        with pytest.raises(ConfigError) as err:
            load_run(cfg)
        assert "H4" in str(err.value)
        assert ":4:" in str(err.value)

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        cfg = write_cfg(tmp_path, "# header comment\n\n" + HOMOGENEOUS_RUN
                        + "\n# trailing\n")
        prep = load_run(cfg)
        assert prep.grid.n == (16,)

    def test_auto_dt_resolves_to_monotonicity_bound(self, tmp_path):
        from thermophase import cfl_limits
        cfg = write_cfg(tmp_path, HOMOGENEOUS_RUN)
        prep = load_run(cfg)
        assert prep.controls.dt == cfl_limits(prep.params, prep.grid, 1.0)

    def test_effective_config_reparses_identically(self, tmp_path):
        cfg = write_cfg(tmp_path, PERTURBED_RUN)
        prep = load_run(cfg)
        text = effective_config(prep)
        cfg2 = write_cfg(tmp_path, text, name="effective.cfg")
        prep2 = load_run(cfg2)
        assert prep2.params == prep.params
        assert prep2.controls == prep.controls
        assert prep2.seed == prep.seed
        assert np.array_equal(prep2.initial.theta.values, prep.initial.theta.values)

    def test_file_preset_roundtrip(self, tmp_path):
        from thermophase import Field, Grid, write_field
        g = Grid.line(16, 1.0)
        rng = np.random.default_rng(5)
        for name, values in (("theta", 1.0 + 0.1 * rng.uniform(size=16)),
                             ("c", rng.uniform(size=16)),
                             ("phi", rng.uniform(size=16))):
            write_field(Field(g, values), tmp_path / f"{name}.csv")
        text = BASE_MODEL + f"""\
source.preset = zero
grid.n = 16
grid.length = 1.0
controls.dt = auto
controls.t_end = 0.0
initial.preset = file
initial.theta_file = {tmp_path / 'theta.csv'}
initial.c_file = {tmp_path / 'c.csv'}
initial.phi_file = {tmp_path / 'phi.csv'}
"""
        prep = load_run(write_cfg(tmp_path, text))
        assert prep.theta_min0 == prep.initial.theta.min()

    def test_two_dimensional_grid(self, tmp_path):
        text = PERTURBED_RUN.replace("grid.n = 24", "grid.n = 8,6")
        text = text.replace("grid.length = 1.0", "grid.length = 1.0,0.75")
        text = text.replace("controls.t_end = 1.0", "controls.t_end = 0.01")
        prep = load_run(write_cfg(tmp_path, text))
        assert prep.grid.shape == (8, 6)
        assert prep.grid.lengths == (1.0, 0.75)
        out = tmp_path / "out2d"
        assert main(["run", "--config", write_cfg(tmp_path, text), "--out", str(out)]) == 0
        assert (out / "diagnostics.csv").exists()

    def test_grid_dim_mismatch_rejected(self, tmp_path):
        text = PERTURBED_RUN.replace("grid.n = 24", "grid.n = 8,6\ngrid.dim = 1")
        with pytest.raises(ConfigError, match="grid.dim"):
            load_run(write_cfg(tmp_path, text))

    def test_missing_field_file_rejected(self, tmp_path):
        text = BASE_MODEL + """\
source.preset = zero
grid.n = 16
grid.length = 1.0
controls.dt = auto
controls.t_end = 0.0
initial.preset = file
initial.theta_file = /nonexistent/theta.csv
initial.c_file = /nonexistent/c.csv
initial.phi_file = /nonexistent/phi.csv
"""
        with pytest.raises(ConfigError, match="does not exist"):
            load_run(write_cfg(tmp_path, text))


class TestRunCommand:
    def test_zero_horizon_run_succeeds(self, tmp_path):
        cfg = write_cfg(tmp_path, HOMOGENEOUS_RUN)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "snap_0.csv").exists()
        assert (out / "plot.gp").exists()
        assert (out / "effective_config.cfg").exists()
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_invalid_parameter_exits_2(self, tmp_path, capsys):
        text = HOMOGENEOUS_RUN.replace("model.tau_phi = 1.0", "model.tau_phi = -1.0")
        cfg = write_cfg(tmp_path, text)
        assert main(["run", "--config", cfg]) == 2
        assert "H4" in capsys.readouterr().err

    def test_out_of_range_initial_exits_2(self, tmp_path, capsys):
        text = HOMOGENEOUS_RUN.replace("initial.c0 = 0.5", "initial.c0 = 1.2")
        cfg = write_cfg(tmp_path, text)
        assert main(["run", "--config", cfg]) == 2
        assert "H6" in capsys.readouterr().err

    def test_perturbed_run_reports_decay(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, PERTURBED_RUN)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        captured = capsys.readouterr().out
        assert "kappa_fit=" in captured
        assert "decay ingredients" in captured
        last = (out / "diagnostics.csv").read_text().splitlines()[-1]
        assert last.split(",")[8] != ""

    def test_positivity_loss_exits_3(self, tmp_path, capsys):
        text = HOMOGENEOUS_RUN.replace("source.preset = zero", """\
source.preset = constant
source.value = -0.5""")
        text = text.replace("controls.t_end = 0.0", "controls.t_end = 3.0")
        cfg = write_cfg(tmp_path, text)
        assert main(["run", "--config", cfg]) == 3
        assert "solver failure" in capsys.readouterr().err

    def test_round_trip_bitwise_diagnostics(self, tmp_path):
        text = PERTURBED_RUN.replace("controls.t_end = 1.0", "controls.t_end = 0.05")
        text = text.replace("initial.mode = 1", "initial.mode = 1\ninitial.jitter = 0.002")
        cfg = write_cfg(tmp_path, text)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["run", "--config", str(out1 / "effective_config.cfg"),
                     "--out", str(out2)]) == 0
        assert (out1 / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()

    def test_seed_changes_jitter(self, tmp_path):
        text = PERTURBED_RUN.replace("initial.mode = 1",
                                     "initial.mode = 1\ninitial.jitter = 0.002")
        cfg = write_cfg(tmp_path, text)
        prep_a = load_run(cfg, seed=1)
        prep_b = load_run(cfg, seed=2)
        prep_a2 = load_run(cfg, seed=1)
        assert not np.array_equal(prep_a.initial.c.values, prep_b.initial.c.values)
        assert np.array_equal(prep_a.initial.c.values, prep_a2.initial.c.values)


class TestEquilibriumCommand:
    def test_prints_roots_and_threshold(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, PERTURBED_RUN)
        assert main(["equilibrium", "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert "theta_bar = 1.0" in out
        assert "c_bar = " in out
        assert "phi root = " in out
        assert "alpha0 = " in out

    def test_degenerate_rates_exit_4(self, tmp_path, capsys):
        text = PERTURBED_RUN.replace("model.E_d = 2.0", "model.E_d = 2000.0")
        text = text.replace("model.E_r = 1.0", "model.E_r = 2000.0")
        cfg = write_cfg(tmp_path, text)
        assert main(["equilibrium", "--config", cfg]) == 4
        assert "equilibrium failure" in capsys.readouterr().err


class TestVerifyCommand:
    def test_clean_run_exits_0(self, tmp_path, capsys):
        text = PERTURBED_RUN.replace("controls.t_end = 1.0", "controls.t_end = 0.5")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "CHECK temperature-floor PASS" in stdout
        assert (out / "checks.csv").exists()
        assert (out / "checks.txt").exists()

    def test_equilibrium_fixed_point_exits_0(self, tmp_path, capsys):
        # amplitude 0 keeps the run at the equilibrium: every check is either
        # satisfied with margin or vacuous, including the decay check
        text = PERTURBED_RUN.replace("initial.amplitude = 0.01",
                                     "initial.amplitude = 0.0")
        text = text.replace("controls.t_end = 1.0", "controls.t_end = 0.2")
        cfg = write_cfg(tmp_path, text)
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
        assert "CHECK energy-decay PASS" in capsys.readouterr().out

    def test_undeclared_source_bound_exits_5(self, tmp_path, capsys):
        # coupling makes |S| > 0 while the declaration promises s_sup = 0
        text = PERTURBED_RUN.replace("source.s_sup = 0.05", "source.s_sup = 0.0")
        text = text.replace("controls.t_end = 1.0", "controls.t_end = 0.1")
        cfg = write_cfg(tmp_path, text)
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "out")]) == 5
        assert "CHECK source-ceiling FAIL" in capsys.readouterr().out


class TestSweepCommand:
    def test_rows_in_order_and_no_crash_above_threshold(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("THERMOPHASE_THREADS", "2")
        text = PERTURBED_RUN.replace("controls.t_end = 1.0", "controls.t_end = 0.5")
        cfg = write_cfg(tmp_path, text + "sweep.alphas = 0.2,0.02\n")
        out = tmp_path / "out"
        assert main(["sweep-alpha", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sweep_alpha.csv").read_text().splitlines()
        assert lines[0] == "alpha,kappa_fit,monotone_frac,passed"
        assert lines[1].startswith("0.02,")
        assert lines[2].startswith("0.2,")
        assert lines[1].endswith("true")

    def test_alphas_flag_overrides(self, tmp_path):
        text = PERTURBED_RUN.replace("controls.t_end = 1.0", "controls.t_end = 0.2")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        assert main(["sweep-alpha", "--config", cfg, "--out", str(out),
                     "--alphas", "0.01"]) == 0
        assert len((out / "sweep_alpha.csv").read_text().splitlines()) == 2

    def test_requires_alphas(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, PERTURBED_RUN)
        assert main(["sweep-alpha", "--config", cfg]) == 2
        assert "sweep" in capsys.readouterr().err

    def test_requires_equilibrium_preset(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, HOMOGENEOUS_RUN + "sweep.alphas = 0.01\n")
        assert main(["sweep-alpha", "--config", cfg]) == 2


class TestConvergenceCommand:
    def test_orders_reported(self, tmp_path, capsys):
        text = PERTURBED_RUN + """\
conv.grids = 8,16,32
conv.steps = 100,200,400
conv.t_end = 0.02
conv.ref_factor = 4
conv.n_temporal = 16
"""
        cfg = write_cfg(tmp_path, text)
        assert main(["convergence", "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert "CHECK convergence-orders PASS" in out
        assert "orders" in out
