import json
import subprocess
import sys

import pytest

from mflab.cli import main
from mflab.config import ConfigError, ExperimentConfig

ESCAPE_TOML = """\
experiment = "escape"

[graph]
kind = "complete"
n = 120

[model]
kind = "kuramoto"
coupling = 4.0
sigma = 1.0

[init]
phase = "uniform"

[sim]
dt = 0.01
t_final = 6.0
record_every = 25

[seeds]
start = 1
count = 3

[output]
dir = "UNSET"
"""


@pytest.fixture
def escape_cfg(tmp_path):
    path = tmp_path / "escape.toml"
    path.write_text(ESCAPE_TOML.replace("UNSET", str(tmp_path / "out")))
    return path


class TestConfigParsing:
    def test_round_trip(self, escape_cfg):
        cfg = ExperimentConfig.from_file(escape_cfg)
        assert cfg.kind == "escape"
        assert cfg.seeds() == [1, 2, 3]
        assert cfg.build_graph().n == 120
        assert cfg.build_model().sup_kernel == 4.0

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('experiment = "escape"\n[graph]\nkindd = "complete"\n')
        with pytest.raises(ConfigError, match="kindd"):
            ExperimentConfig.from_file(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('experiment = "escape"\n[grpah]\nkind = "complete"\n')
        with pytest.raises(ConfigError, match="grpah"):
            ExperimentConfig.from_file(path)

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigError, match="experiment"):
            ExperimentConfig.from_dict({"experiment": "nope"})

    def test_duplicate_seeds_rejected(self):
        with pytest.raises(ConfigError, match="duplicates"):
            ExperimentConfig.from_dict(
                {"experiment": "escape", "seeds": {"list": [1, 1]}}).seeds()

    def test_threshold_defaults_and_overrides(self):
        cfg = ExperimentConfig.from_dict({"experiment": "escape"})
        assert cfg.threshold("crossing_lo") == 4.0
        cfg2 = ExperimentConfig.from_dict(
            {"experiment": "escape", "thresholds": {"crossing_lo": 3.0}})
        assert cfg2.threshold("crossing_lo") == 3.0

    def test_model_disorder_table(self):
        cfg = ExperimentConfig.from_dict({
            "experiment": "escape",
            "model": {"kind": "kuramoto", "coupling": 1.0,
                      "disorder": {"atoms": [[-1.0], [1.0]],
                                   "weights": [0.5, 0.5]}},
        })
        assert cfg.build_model().disorder.n_atoms == 2


class TestCliRuns:
    def test_escape_end_to_end(self, escape_cfg, tmp_path, capsys):
        out = tmp_path / "run1"
        code = main(["escape", "--config", str(escape_cfg),
                     "--out", str(out)])
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4  # one verdict line per check
        summary = json.loads((out / "summary.json").read_text())
        assert summary["experiment"] == "escape"
        assert "config_sha256" in summary and "version" in summary
        assert code in (0, 1)
        assert (out / "crossings.csv").exists()

    def test_byte_identical_reruns(self, escape_cfg, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["escape", "--config", str(escape_cfg), "--out", str(out1)])
        main(["escape", "--config", str(escape_cfg), "--out", str(out2),
              "--workers", "3"])
        files1 = sorted(p.name for p in out1.iterdir())
        files2 = sorted(p.name for p in out2.iterdir())
        assert files1 == files2
        for name in files1:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text('experiment = "escape"\n[graph]\ntypo = 1\n')
        code = main(["escape", "--config", str(path)])
        assert code == 2
        assert "typo" in capsys.readouterr().err

    def test_kind_mismatch_rejected(self, escape_cfg, capsys):
        code = main(["two-clique", "--config", str(escape_cfg)])
        assert code == 2

    def test_seed_override(self, escape_cfg, tmp_path):
        out = tmp_path / "seeds"
        main(["escape", "--config", str(escape_cfg), "--out", str(out),
              "--seeds", "5..6"])
        assert (out / "order_seed5.csv").exists()
        assert (out / "order_seed6.csv").exists()
        assert not (out / "order_seed1.csv").exists()

    def test_graph_stats_subcommand(self, tmp_path):
        path = tmp_path / "g.toml"
        path.write_text('experiment = "degree_tails"\n'
                        '[graph]\nkind = "two_clique"\nhalf = 6\n')
        out = tmp_path / "gs"
        code = main(["graph-stats", "--config", str(path), "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["data"]["b_n"] == 0.0
        assert summary["data"]["a_n"] == 0.5

    def test_console_entry_point(self, escape_cfg):
        proc = subprocess.run(
            [sys.executable, "-m", "mflab.cli", "escape",
             "--config", str(escape_cfg), "--seeds", "1..2"],
            capture_output=True, text=True)
        assert proc.returncode in (0, 1)
        assert "crossing_median_in_window" in proc.stdout


class TestRunnersSmoke:
    def test_escape_centers_uniform(self):
        # with enough seeds the synchronization centers pass the circular
        # uniformity check (they are skipped below 20 seeds)
        cfg = ExperimentConfig.from_dict({
            "experiment": "escape",
            "graph": {"kind": "complete", "n": 300},
            "model": {"kind": "kuramoto", "coupling": 4.0},
            "sim": {"dt": 0.01, "t_final": 12.0, "record_every": 50},
            "seeds": {"start": 1, "count": 24},
        })
        from mflab.experiments import run_escape
        rep = run_escape(cfg)
        assert rep.verdicts["centers_uniform"] is True

    def test_remaining_subcommands_dispatch(self, tmp_path):
        # degree-tails, couple, simulate, and fokker-planck through main()
        dt_cfg = tmp_path / "dt.toml"
        dt_cfg.write_text(
            'experiment = "degree_tails"\n'
            '[degree_tails]\npairs = [[50, 0.3], [200, 0.3]]\ndraws = 5\n'
            'eps_grid = [0.1]\n')
        assert main(["degree-tails", "--config", str(dt_cfg),
                     "--out", str(tmp_path / "dt")]) == 0

        sim_cfg = tmp_path / "sim.toml"
        sim_cfg.write_text(
            'experiment = "escape"\n'
            '[graph]\nkind = "complete"\nn = 20\n'
            '[model]\nkind = "kuramoto"\ncoupling = 1.0\n'
            '[sim]\ndt = 0.01\nt_final = 0.2\nrecord_every = 10\n'
            '[seeds]\nlist = [3]\n')
        assert main(["simulate", "--config", str(sim_cfg),
                     "--out", str(tmp_path / "sim")]) == 0
        assert (tmp_path / "sim" / "trajectory_seed3.csv").exists()
        assert main(["couple", "--config", str(sim_cfg),
                     "--out", str(tmp_path / "couple")]) == 0
        assert (tmp_path / "couple" / "dbl.csv").exists()

        fp_cfg = tmp_path / "fp.toml"
        fp_cfg.write_text(
            'experiment = "fp_rates"\n'
            '[model]\nkind = "kuramoto"\ncoupling = 4.0\n'
            '[fp]\nk_max = 32\ndt = 0.002\nt_final = 3.0\n')
        assert main(["fokker-planck", "--config", str(fp_cfg),
                     "--out", str(tmp_path / "fp")]) == 0

    def test_degree_tails_runner(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "degree_tails",
            "degree_tails": {"pairs": [[50, 0.3], [200, 0.3], [30, 0.001]],
                             "draws": 5, "eps_grid": [0.1, 0.2]},
        })
        from mflab.experiments import run_degree_tails
        rep = run_degree_tails(cfg, tmp_path / "dt")
        assert rep.verdicts["exact_tail_below_chernoff"] is True
        assert rep.data["unsupported"], "sparse pair must be flagged"
        assert (tmp_path / "dt" / "tails.csv").exists()

    def test_degree_tails_scaling(self):
        # mean b_n tracks the sqrt(log n / n) concentration scale
        import math

        cfg = ExperimentConfig.from_dict({
            "experiment": "degree_tails",
            "degree_tails": {"pairs": [[100, 0.3], [1000, 0.3], [10000, 0.3]],
                             "draws": 20, "eps_grid": [0.1]},
        })
        from mflab.experiments import run_degree_tails
        rep = run_degree_tails(cfg)
        assert rep.verdicts["b_n_decreasing_in_n"] is True
        pts = rep.data["b_n_means"][repr(0.3)]
        normalized = [b / math.sqrt(math.log(n) / n) for n, b in pts]
        assert max(normalized) / min(normalized) < 1.5

    def test_couple_runner(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "proximity_sweep",
            "graph": {"kind": "complete", "n": 50},
            "model": {"kind": "kuramoto", "coupling": 1.0},
            "sim": {"dt": 0.01, "t_final": 0.5, "record_every": 10},
            "seeds": {"start": 1, "count": 3},
        })
        from mflab.experiments import run_couple
        rep = run_couple(cfg, tmp_path / "couple")
        assert rep.verdicts["u_below_bound"] is True
        assert (tmp_path / "couple" / "coupling_error.csv").exists()
        assert (tmp_path / "couple" / "gap_seed1.csv").exists()

    def test_proximity_zero_coupling_control(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "proximity_sweep",
            "model": {"kind": "kuramoto", "coupling": 0.0},
            "sim": {"dt": 0.01, "t_final": 0.5, "record_every": 10},
            "proximity": {"family": "complete", "sizes": [30, 60],
                          "checkpoints": [0.5]},
            "seeds": {"start": 1, "count": 2},
        })
        from mflab.experiments import run_proximity_sweep
        rep = run_proximity_sweep(cfg)
        assert rep.verdicts["u_below_bound"] is True
        assert rep.verdicts["u_ratio_in_window"] is None  # u identically zero

    def test_proximity_er_vanishing(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "proximity_sweep",
            "model": {"kind": "kuramoto", "coupling": 1.0},
            "sim": {"dt": 0.01, "t_final": 1.0, "record_every": 10},
            "proximity": {"family": "er_vanishing", "sizes": [200, 800],
                          "q_exponent": -0.3333333333333333,
                          "checkpoints": [0.5, 1.0]},
            "seeds": {"start": 1, "count": 10},
        })
        from mflab.experiments import run_proximity_sweep
        rep = run_proximity_sweep(cfg, tmp_path / "prox")
        assert rep.verdicts["u_below_bound"] is True
        b_n = rep.data["b_n"]
        assert b_n[0] > b_n[1]  # concentration improves with n
        assert (tmp_path / "prox" / "proximity_curves.csv").exists()
        assert (tmp_path / "prox" / "proximity_dbl.csv").exists()
        header = (tmp_path / "prox" / "proximity_dbl.csv").read_text().splitlines()[0]
        assert header == "n,t,dbl_estimate"

    def test_proximity_regular_family(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "proximity_sweep",
            "model": {"kind": "kuramoto", "coupling": 1.0},
            "sim": {"dt": 0.01, "t_final": 0.5, "record_every": 10},
            "proximity": {"family": "regular", "sizes": [64],
                          "checkpoints": [0.5]},
            "seeds": {"start": 1, "count": 3},
        })
        from mflab.experiments import run_proximity_sweep
        rep = run_proximity_sweep(cfg)
        assert rep.verdicts["u_below_bound"] is True
        assert rep.data["b_n"] == [0.0]  # alpha = n/d makes b_n vanish

    def test_two_clique_runner_small(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "two_clique",
            "graph": {"kind": "two_clique", "half": 60},
            "model": {"kind": "kuramoto", "coupling": 4.0},
            "sim": {"dt": 0.01, "t_final": 8.0, "record_every": 40},
            "seeds": {"start": 1, "count": 4},
        })
        from mflab.experiments import run_two_clique
        rep = run_two_clique(cfg, tmp_path / "tc")
        assert rep.verdicts["gaps_uniform"] is None  # too few seeds
        assert (tmp_path / "tc" / "gaps.csv").exists()
        assert (tmp_path / "tc" / "cliques_seed1.csv").exists()

    def test_simulate_runner(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "escape",
            "graph": {"kind": "complete", "n": 20},
            "model": {"kind": "kuramoto", "coupling": 1.0},
            "sim": {"dt": 0.01, "t_final": 0.2, "record_every": 5},
            "seeds": {"list": [7]},
        })
        from mflab.experiments import run_simulate
        rep = run_simulate(cfg, tmp_path / "sim")
        assert 7 in rep.data["final_r"]
        header = (tmp_path / "sim" / "trajectory_seed7.csv").read_text().splitlines()[0]
        assert header.startswith("t,theta_1,")

    def test_fp_rates_runner(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "fp_rates",
            "model": {"kind": "kuramoto", "coupling": 4.0},
            "fp": {"k_max": 32, "dt": 0.002, "t_final": 3.0},
        })
        from mflab.experiments import run_fp_rates
        rep = run_fp_rates(cfg, tmp_path / "fp")
        assert rep.passed
        assert (tmp_path / "fp" / "rates.csv").exists()
        assert (tmp_path / "fp" / "density_mode1.csv").exists()
