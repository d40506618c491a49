import pytest

from kernel_pe.config import ConfigError, ExperimentConfig, load_config, parse_config


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert (cfg.gamma, cfg.lam, cfg.sigma2, cfg.eta, cfg.epsilon) == (0.99, 0.5, 0.1, 0.5, 0.01)
    assert (cfg.h, cfg.tol1, cfg.batch_size, cfg.seeds) == (5.0, 0.1, 20, [0, 1, 2, 3, 4])


def test_parse_values_and_comments():
    text = """
    # actor-critic run
    method = lstd
    architecture = actor-critic   # inline comment
    gamma = 0.9
    seeds = 3, 4 5
    record_wallclock = yes
    """
    cfg = parse_config("\n".join(line.strip() for line in text.splitlines()))
    assert cfg.method == "lstd" and cfg.architecture == "actor-critic"
    assert cfg.gamma == 0.9 and cfg.seeds == [3, 4, 5] and cfg.record_wallclock is True


@pytest.mark.parametrize("text, line, fragment", [
    ("method = lstd\n", 1, "actor-critic"),
    ("gamma = 0.5\nmethod = brm\n", 2, "deterministic"),
    ("\n\ngamma = 1.5\n", 3, "gamma"),
    ("lam = 2\n", 1, "lam"),
    ("tol2 = -1\n", 1, "non-negative"),
    ("sigma2 = 0\n", 1, "positive"),
    ("batch_size = many\n", 1, "batch_size"),
    ("# c\ncolour = red\n", 2, "unknown key"),
    ("method = brm\nchain_slip = 0.2\n", 1, "deterministic"),
    ("env = mujoco\n", 1, "environment"),
    ("gamma = 0.9\ngamma = 0.8\n", 2, ""),
    ("just words\n", 1, "cannot parse"),
])
def test_errors_name_the_line(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    msg = str(info.value)
    assert msg.startswith(f"line {line}:")
    assert fragment in msg


def test_brm_allowed_on_deterministic_chain():
    cfg = parse_config("method = brm\nchain_slip = 0\n")
    assert cfg.deterministic_env


def test_round_trip(tmp_path):
    cfg = ExperimentConfig(method="lstd", architecture="actor-critic", seeds=[7], tol2=0.01)
    path = tmp_path / "c.cfg"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg


def test_replace_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(epsilon=2.0)
