import hashlib

import numpy as np
import pytest

from crane_rl.config import ConfigError, child_rng, child_seed, defaults, load_config, parse_config
from crane_rl.ddpg import PAPER_CONFIG


def test_defaults_match_desk_preset():
    desk = load_config("desk")
    for k, v in defaults().items():
        assert desk[k] == v, k


def test_paper_preset_matches_published_hyperparameters():
    d = load_config("paper").ddpg()
    assert (d.episodes, d.steps, d.buffer_size, d.batch_size) == (
        PAPER_CONFIG.episodes, PAPER_CONFIG.steps, PAPER_CONFIG.buffer_size, PAPER_CONFIG.batch_size)
    assert d.actor_hidden == PAPER_CONFIG.actor_hidden


def test_parse_values_and_comments():
    cfg = parse_config("# comment\nddpg.episodes = 7  # trailing\nplant.lower = -1, 0, -2, 0\n"
                       "forward.cosine_decay = false\n")
    assert cfg["ddpg.episodes"] == 7
    assert cfg["plant.lower"] == (-1.0, 0.0, -2.0, 0.0)
    assert cfg["forward.cosine_decay"] is False


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as err:
        parse_config("ddpg.episodez = 3\n")
    assert err.value.key == "ddpg.episodez"
    assert "ddpg.episodez" in str(err.value)


@pytest.mark.parametrize("text", ["ddpg.episodes = many\n", "plant.lower = 1, 2\n", "just words\n"])
def test_malformed_values_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_env_var_fallback(tmp_path, monkeypatch):
    p = tmp_path / "c.cfg"
    p.write_text("ddpg.steps = 11\n")
    monkeypatch.setenv("CRANE_RL_CONFIG", str(p))
    assert load_config()["ddpg.steps"] == 11
    # an explicit path wins over the environment
    q = tmp_path / "d.cfg"
    q.write_text("ddpg.steps = 12\n")
    assert load_config(q)["ddpg.steps"] == 12


def test_no_config_gives_defaults(monkeypatch):
    monkeypatch.delenv("CRANE_RL_CONFIG", raising=False)
    assert load_config() == defaults()


def test_builders_round_trip_defaults():
    cfg = defaults()
    assert cfg.chain().h0 == 0.5
    assert cfg.geometry(2).sign == 1 and cfg.geometry(3).sign == -1
    assert cfg.env().max_step_delta == (0.05, 0.05, 0.05, 0.02)
    assert cfg.ddpg(feedback=False).feedback is False
    assert cfg.trajectory().n_points == 200


def test_child_seed_matches_sha256_definition():
    expected = int.from_bytes(hashlib.sha256(b"7:fk_dataset").digest()[:8], "little")
    assert child_seed(7, "fk_dataset") == expected
    assert child_seed(7, "fk_dataset") != child_seed(7, "actuator_j2")
    assert child_seed(7, "fk_dataset") != child_seed(8, "fk_dataset")


def test_child_rng_streams_reproducible():
    a = child_rng(3, "x").normal(size=5)
    b = child_rng(3, "x").normal(size=5)
    np.testing.assert_array_equal(a, b)


def test_digest_tracks_content():
    a, b = defaults(), defaults()
    assert a.digest() == b.digest()
    b["ddpg.steps"] = 1
    assert a.digest() != b.digest()
    assert a.digest(("plant",)) == b.digest(("plant",))
