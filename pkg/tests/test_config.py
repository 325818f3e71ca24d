import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multistop.config import DESK_SAC, ExperimentConfig, PointSpec, dumps, load_config, loads, save_config
from multistop.environment import RewardConfig
from multistop.exceptions import ConfigError, ParseError
from multistop.search import DESK_SCHEDULE, SearchSchedule

EXAMPLE = """\
[problem]
g = 0.5
deltas = 1.5, 2.5, 3.5
plant = 0.3, 0.12, 0.45

[fixed]
c1 = 0.3

[points]
count = 40
complex = true

[reward]
form = r1
w1 = 3.0

[schedule]
faff_max = 10

[run]
run_count = 4
top_k = 2
sum_groups = c2+c3
"""


def test_parse_example():
    cfg = loads(EXAMPLE)
    assert cfg.g == 0.5 and cfg.deltas == (1.5, 2.5, 3.5)
    assert cfg.fixed == {0: 0.3}
    assert cfg.points == PointSpec(count=40, complex_points=True)
    assert cfg.reward.form.value == "R1" and cfg.reward.w1 == 3.0 and cfg.reward.w2 == RewardConfig().w2
    assert cfg.schedule == SearchSchedule(faff_max=10, pc_max=DESK_SCHEDULE.pc_max,
                                          max_window_exp=DESK_SCHEDULE.max_window_exp)
    assert cfg.sac == DESK_SAC
    assert cfg.sum_groups == ((1, 2),)
    assert cfg.synthetic and cfg.reference_values == (0.3, 0.12, 0.45)


def test_defaults_are_desk_scale():
    cfg = ExperimentConfig(deltas=(1.5,))
    assert (cfg.run_count, cfg.top_k) == (16, 4)
    assert (cfg.schedule.faff_max, cfg.schedule.pc_max, cfg.schedule.max_window_exp) == (1500, 3, 8)


def test_round_trip_is_byte_identical(tmp_path):
    cfg = loads(EXAMPLE)
    text = dumps(cfg)
    assert dumps(loads(text)) == text
    path = save_config(cfg, tmp_path / "exp.ini")
    assert load_config(path) == cfg
    assert path.read_text() == text


@settings(max_examples=50, deadline=None)
@given(g=st.floats(1e-3, 10.0), deltas=st.lists(st.floats(1.01, 9.0), min_size=1, max_size=4),
       w=st.tuples(st.floats(0, 1e6), st.floats(0, 1e6)), runs=st.integers(1, 50), seed=st.integers(0, 10**6),
       rate=st.floats(0.05, 0.95), out=st.text("abc_/-", min_size=1, max_size=10))
def test_round_trip_property(g, deltas, w, runs, seed, rate, out):
    n = len(deltas)
    cfg = ExperimentConfig(g=g, deltas=tuple(deltas), reward=RewardConfig(w1=w[0], w2=w[1]),
                           schedule=SearchSchedule(window_rate=rate), run_count=runs, top_k=1,
                           base_seed=seed, output_dir=out.strip() or "o",
                           fixed={n - 1: 0.25}, sum_groups=(tuple(range(n)),))
    text = dumps(cfg)
    back = loads(text)
    assert back == cfg
    assert dumps(back) == text


def test_overrides_take_precedence():
    cfg = loads(EXAMPLE, overrides=["run.run_count=8", "reward.w2 = 7", "schedule.pc_max=2"])
    assert cfg.run_count == 8 and cfg.reward.w2 == 7.0 and cfg.schedule.pc_max == 2
    with pytest.raises(ConfigError):
        loads(EXAMPLE, overrides=["run_count=8"])


def test_relative_paths_resolve_against_config_dir(tmp_path):
    path = tmp_path / "sub" / "exp.ini"
    path.parent.mkdir()
    path.write_text("[problem]\ndelta_table = deltas.csv\n[run]\noutput_dir = out\n")
    cfg = load_config(path)
    assert cfg.resolve(cfg.delta_table) == path.parent / "deltas.csv"
    assert cfg.output_path({}) == path.parent / "out"
    assert cfg.output_path({"MULTISTOP_OUTPUT_DIR": "/elsewhere"}) == type(path)("/elsewhere")


@pytest.mark.parametrize("text", [
    "[problem]\ng = 1\n",  # no delta source
    "[problem]\ndeltas = 1.5\ntable = t.csv\n",
    "[problem]\ndeltas = 1.5, 2.5\nplant = 0.1\n",
    "[problem]\ndeltas = 1.5\n[fixed]\nc2 = 0.1\n",
    "[problem]\ndeltas = 1.5\n[run]\nrun_count = 2\ntop_k = 3\n",
    "[problem]\ndeltas = 1.5\ng = -1\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        loads(text)


@pytest.mark.parametrize("text", [
    "[problem]\ndeltas = 1.5\n[bogus]\nx = 1\n",
    "[problem]\ndeltas = 1.5\nwidth = 2\n",
    "[problem]\ndeltas = 1.5, abc\n",
    "[problem]\ndeltas = 1.5\n[points]\ncomplex = maybe\n",
    "[problem]\ndeltas = 1.5\n[fixed]\nx1 = 0.1\n",
    "deltas = 1.5\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "nope.ini")


def test_dumps_has_no_trailing_spaces():
    text = dumps(ExperimentConfig(deltas=(1.5, 2.5)))
    assert all(line == line.rstrip() for line in text.splitlines())
    assert np.isclose(loads(text).g, 1.0)


def test_shipped_configs_and_readme_example_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1]
    for path in sorted((root / "configs").glob("*.ini")):
        cfg = load_config(path)
        assert dumps(loads(dumps(cfg))) == dumps(cfg)
    readme = (root / "README.md").read_text()
    block = readme.split("```ini\n", 1)[1].split("```", 1)[0]
    assert loads(block).sum_groups == ((1, 2),)
