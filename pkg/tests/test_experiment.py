import dataclasses
import random

import numpy as np
import pytest

import multistop.experiment as experiment
from multistop.config import ExperimentConfig, PointSpec
from multistop.environment import RewardConfig
from multistop.exceptions import ConfigError, NoRowForG, ParseError, RunFailed
from multistop.experiment import Variant, ablation_compare, prepare_problem, run_experiment, run_seeds
from multistop.sac import SacHyperParams
from multistop.search import SearchSchedule
from multistop.stats import aggregate, read_results_csv

TINY = dict(
    g=1.0, deltas=(1.5, 2.5, 3.5), plant=(0.3, 0.12, 0.45),
    points=PointSpec(count=16, seed=1),
    sac=SacHyperParams(hidden_sizes=(8, 8), batch_size=8, buffer_capacity=256),
    schedule=SearchSchedule(faff_max=6, pc_max=1, max_window_exp=2),
    run_count=2, top_k=1, reward=RewardConfig(use_constraints=False),
)


def tiny(tmp_path, **changes):
    return ExperimentConfig(**{**TINY, "output_dir": str(tmp_path / "out"), **changes})


@pytest.fixture
def no_search(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("a search step ran")
    monkeypatch.setattr(experiment, "run_search", boom)


def test_tiny_run_writes_reports(tmp_path):
    res = run_experiment(tiny(tmp_path, sum_groups=((1, 2),)))
    assert set(res.files) == {"results", "summary", "coefficients", "rewards"}
    back = read_results_csv(res.files["results"])
    assert [r.seed for r in back] == [0, 1]
    assert [r.best_reward for r in back] == [r.best_reward for r in res.records]
    text = res.files["summary"].read_text()
    assert text == res.summary and "c2+c3" in text and "rel_error" in text
    assert res.files["coefficients"].read_text().startswith("<svg")


def test_seed_assignment_and_output_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("MULTISTOP_OUTPUT_DIR", str(tmp_path / "env"))
    res = run_experiment(tiny(tmp_path, base_seed=7, run_count=3))
    assert [r.seed for r in res.records] == [7, 8, 9]
    assert res.files["results"].parent == tmp_path / "env"


def test_launch_order_does_not_matter(tmp_path):
    cfg = tiny(tmp_path)
    problem = prepare_problem(cfg)
    seeds = [3, 4, 5]
    a = run_seeds(problem, cfg.sac, cfg.schedule, seeds)
    shuffled = seeds[:]
    random.Random(0).shuffle(shuffled)
    b = run_seeds(problem, cfg.sac, cfg.schedule, shuffled)
    assert a == b
    assert aggregate(a, 2) == aggregate(list(reversed(b)), 2)


def test_parallel_matches_sequential(tmp_path):
    cfg = tiny(tmp_path)
    problem = prepare_problem(cfg)
    seq = run_seeds(problem, cfg.sac, cfg.schedule, [0, 1])
    par = run_seeds(problem, cfg.sac, cfg.schedule, [0, 1], n_jobs=2)
    assert seq == par


def test_missing_curvature_fails_before_search(tmp_path, no_search):
    with pytest.raises(ParseError):
        run_experiment(tiny(tmp_path, curvature="nope.csv"))


def test_missing_g_in_delta_table_fails_before_search(tmp_path, no_search):
    (tmp_path / "d.csv").write_text("g,d1,d2\n0.5,1.5,2.5\n")
    with pytest.raises(NoRowForG):
        run_experiment(tiny(tmp_path, deltas=(), delta_table=str(tmp_path / "d.csv"), plant=()))


def test_bad_fixed_index_fails_before_search(tmp_path, no_search):
    (tmp_path / "d.csv").write_text("g,d1,d2\n1.0,1.5,2.5\n")
    with pytest.raises(ConfigError):
        run_experiment(tiny(tmp_path, deltas=(), delta_table=str(tmp_path / "d.csv"), plant=(), fixed={4: 0.1}))


def test_run_failures_name_the_seed(tmp_path, monkeypatch):
    def broken(*args, seed=0, **kwargs):
        raise FloatingPointError("overflow")
    monkeypatch.setattr(experiment, "run_search", broken)
    with pytest.raises(RunFailed) as info:
        run_experiment(tiny(tmp_path, base_seed=4), write=False)
    assert info.value.seed == 4


def test_identical_variants_give_identical_reports(tmp_path):
    cfg = tiny(tmp_path)
    report = ablation_compare(cfg, [Variant("a", 2.0, 3.0), Variant("b", 2.0, 3.0)], write=True)
    a, b = report.reports
    assert a.records == b.records and a.stats == b.stats
    assert np.array_equal(a.coefficient_errors, b.coefficient_errors)
    assert report.ratio() == 1.0
    assert (tmp_path / "out" / "ablation.txt").read_text() == report.text()


def test_zero_weight_variant_equals_unconstrained_run(tmp_path):
    cfg = tiny(tmp_path)
    base = run_experiment(cfg, write=False)
    report = ablation_compare(cfg, [Variant("none", 0.0, 0.0), Variant("two", 1.0, 1.0)])
    assert report.reports[0].records == base.records
    assert report.reports[0].median_error == float(np.median(base.stats.relative_errors(cfg.plant)))


def test_ablation_needs_reference_and_two_variants(tmp_path):
    with pytest.raises(ConfigError):
        ablation_compare(tiny(tmp_path, plant=()), [Variant("a", 0, 0), Variant("b", 1, 1)])
    with pytest.raises(Exception):
        ablation_compare(tiny(tmp_path), [Variant("a", 0, 0)])


def test_variant_reward_config():
    base = RewardConfig(w1=5.0, w2=6.0)
    assert not Variant("none", 0.0, 0.0).reward_config(base).use_constraints
    cfg = Variant("x", 1.0, 0.0).reward_config(base)
    assert cfg.use_constraints and (cfg.w1, cfg.w2) == (1.0, 0.0)
    assert dataclasses.replace(cfg, w1=5.0, w2=6.0) == base
