import pytest

from mavelocity.config import ProblemConfig, config_from_mapping, dump_config, load_config, parse_assignments
from mavelocity.exceptions import ConfigError


def test_defaults_match_simulation_setup():
    cfg = ProblemConfig()
    assert (cfg.T, cfg.L, cfg.V_max, cfg.m_a) == (1.0, 4.0, 10.0, 0.1)
    assert (cfg.alpha1, cfg.alpha2, cfg.eta, cfg.N) == (0.2, 0.1, 0.1, 11)
    assert cfg.qos_floor == pytest.approx(0.4)


@pytest.mark.parametrize(
    "field,value",
    [("T", 0.0), ("L", -1.0), ("V_max", 0.0), ("m_a", -0.1), ("alpha1", -1), ("alpha2", -1),
     ("eta", 0.0), ("eta", 1.5), ("N", 0), ("N", 2.5), ("n_quad", 2)],
)
def test_invalid_values_rejected(field, value):
    with pytest.raises(ConfigError):
        ProblemConfig(**{field: value})


def test_parse_assignments_comments_and_blanks():
    out = parse_assignments(["# header", "", "T = 2  # seconds", "L=3"])
    assert out == {"T": "2", "L": "3"}


def test_parse_assignments_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_assignments(["just words"])


def test_mapping_coerces_types_and_returns_extras():
    cfg, extras = config_from_mapping({"N": "7", "alpha2": "1e-3", "include_terminal_kinetic": "false", "feastol": "1e-8"})
    assert cfg.N == 7 and isinstance(cfg.N, int)
    assert cfg.alpha2 == 1e-3
    assert cfg.include_terminal_kinetic is False
    assert extras == {"feastol": "1e-8"}


def test_mapping_rejects_bad_numbers():
    with pytest.raises(ConfigError):
        config_from_mapping({"N": "3.5"})
    with pytest.raises(ConfigError):
        config_from_mapping({"T": "soon"})


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("T = 2\nL = 6\n")
    cfg, _ = load_config(path, ["L=8"])
    assert (cfg.T, cfg.L) == (2.0, 8.0)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_dump_round_trip(tmp_path):
    cfg = ProblemConfig(T=2.0, N=5, include_terminal_kinetic=False)
    path = tmp_path / "dump.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path)[0] == cfg
