from pathlib import Path

import pytest

from eepc.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, load_config, main
from eepc.efficiency import CarProtocol
from eepc.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
n = 1
gains = [[2.5]]
sigma2_mw = 1.0
pmax_mw = 1000.0
b_mw = 1000.0
buffer_k = 10

[protocol.car]
q = {q}
"""


def write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestLoadConfig:
    def test_shipped_default_matches_setup(self):
        conf = load_config(str(CONFIGS / "defaults.toml"))
        game = conf["game"]
        assert game.n == 2
        assert game.channel.noise_variance == 1.0
        assert game.energy.p_max == 1000.0
        assert game.energy.b == 1000.0
        assert game.queue.k == 10
        assert game.channel.gains[0, 0] == 2.5 and game.channel.gains[0, 1] == 0.5
        assert isinstance(game.protocol, CarProtocol) and game.protocol.epsilon == 1.0

    def test_all_figure_recipes_parse(self):
        for path in sorted(CONFIGS.glob("*.toml")):
            conf = load_config(str(path))
            assert conf["game"].n >= 1

    def test_flat_gain_list_accepted(self, tmp_path):
        text = MINIMAL.format(q=0.5).replace("[[2.5]]", "[2.5]")
        conf = load_config(write(tmp_path, text))
        assert conf["game"].channel.gains[0, 0] == 2.5

    def test_invalid_q_names_the_key(self, tmp_path):
        with pytest.raises(ConfigurationError, match="protocol.car"):
            load_config(write(tmp_path, MINIMAL.format(q=0.0)))

    def test_missing_key_named(self, tmp_path):
        text = MINIMAL.format(q=0.5).replace("buffer_k = 10", "")
        with pytest.raises(ConfigurationError, match="buffer_k"):
            load_config(write(tmp_path, text))

    def test_syntax_error_reported(self, tmp_path):
        with pytest.raises(ConfigurationError, match="syntax"):
            load_config(write(tmp_path, "n = [unclosed"))

    def test_missing_file(self):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config("/nonexistent/nope.toml")


class TestMain:
    def test_validate_ok(self, tmp_path, capsys):
        rc = main(["validate", "--config", write(tmp_path, MINIMAL.format(q=0.5))])
        assert rc == EXIT_OK
        assert "config ok" in capsys.readouterr().out

    def test_validate_bad_config_exit_2(self, tmp_path, capsys):
        rc = main(["validate", "--config", write(tmp_path, MINIMAL.format(q=0.0))])
        assert rc == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "protocol.car" in err and "q" in err

    def test_usage_errors_exit_64(self, capsys):
        assert main(["no-such-command"]) == EXIT_USAGE
        assert main(["validate", "--config", "x", "--bogus-flag"]) == EXIT_USAGE

    def test_aar_rate_value(self, capsys):
        rc = main(["aar-rate", "--f", "0.5", "--k", "100000", "--kappa", "0.1"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("q = ")
        assert abs(float(out.split("=")[1].split()[0]) - 0.51926) < 1e-3

    def test_limits_values(self, capsys):
        rc = main(["limits", "--f", "0.4", "--q", "0.8", "--kappa", "0.1"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "loss_large_k = 0.5" in out
        assert "aar_rate_large_k" in out

    def test_ne_writes_trajectory(self, tmp_path, capsys):
        out_file = tmp_path / "traj.csv"
        rc = main(["ne", "--config", write(tmp_path, MINIMAL.format(q=0.5)),
                   "--out", str(out_file)])
        assert rc == EXIT_OK
        text = out_file.read_text()
        assert text.splitlines()[0].startswith("#")
        assert "round,p1_mw,u1,delta_mw" in text
        assert "profile_mw" in capsys.readouterr().out

    def test_ee_curve_runs(self, tmp_path, capsys):
        out_file = tmp_path / "curve.csv"
        rc = main(["ee-curve", "--config", write(tmp_path, MINIMAL.format(q=0.6)),
                   "--grid", "200", "--out", str(out_file)])
        assert rc == EXIT_OK
        assert out_file.exists()

    def test_poa_single_user(self, tmp_path, capsys):
        rc = main(["poa", "--config", write(tmp_path, MINIMAL.format(q=0.5))])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "poa = " in out

    def test_sweep_outputs_stable_bytes(self, tmp_path):
        text = MINIMAL.format(q=0.5) + (
            "\n[sweep]\nparam = \"q\"\nvalues = [0.4, 0.8]\ntrials = 2\nseed = 3\n")
        cfg_path = write(tmp_path, text)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", cfg_path, "--out", str(out1)]) == EXIT_OK
        assert main(["sweep", "--config", cfg_path, "--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_sweep_without_block_is_config_error(self, tmp_path, capsys):
        rc = main(["sweep", "--config", write(tmp_path, MINIMAL.format(q=0.5))])
        assert rc == EXIT_CONFIG

    def test_env_seed_fallback(self, tmp_path, monkeypatch, capsys):
        text = MINIMAL.format(q=0.5) + (
            "\nfading = true\n[sweep]\nparam = \"q\"\nvalues = [0.5]\ntrials = 2\nseed = 3\n")
        cfg_path = write(tmp_path, text)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        monkeypatch.setenv("EEPC_SEED", "99")
        assert main(["sweep", "--config", cfg_path, "--out", str(out1)]) == EXIT_OK
        monkeypatch.delenv("EEPC_SEED")
        assert main(["sweep", "--config", cfg_path, "--seed", "99",
                     "--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_json_output(self, tmp_path):
        out_file = tmp_path / "t.json"
        rc = main(["ne", "--config", write(tmp_path, MINIMAL.format(q=0.5)),
                   "--out", str(out_file), "--format", "json"])
        assert rc == EXIT_OK
        assert out_file.read_text().startswith("{")
