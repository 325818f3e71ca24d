import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from multistop.config import DESK_SAC, ExperimentConfig, PointSpec
from multistop.environment import RewardConfig, balanced_weights
from multistop.experiment import Variant, ablation_compare, prepare_problem, run_experiment
from multistop.io import generate_point_set
from multistop.model import big_f_delta, crossing_from_blocks, crossing_sum, h_func
from multistop.quadrature import int1, int2
from multistop.search import DESK_SCHEDULE, SearchSchedule, run_search
from multistop.specfun import bessel_i, hyp2f1
from multistop.validation import in_lens
from oracles import bessel_i_series, constraint_integrals_oracle, hyp2f1_series
from sac_checks import bandit, finite_difference_worst
from stubs import StubEnvironment

pytestmark = pytest.mark.acceptance


def verdict(number, title, ok, elapsed, limit, detail):
    ok = bool(ok) and elapsed < limit
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail} ({elapsed:.1f} s, limit {limit:g} s)")
    assert ok, ACCEPTANCE_LINES[-1]


def planted_config(plant, deltas=(1.5, 2.5, 3.5), **changes):
    base = ExperimentConfig(g=1.0, deltas=deltas, plant=tuple(plant), points=PointSpec(count=180, seed=0),
                            sac=DESK_SAC, schedule=DESK_SCHEDULE, run_count=16, top_k=4,
                            reward=RewardConfig(use_constraints=False))
    table = prepare_problem(base).table
    w1, w2 = balanced_weights(table)
    return ExperimentConfig(**{**base.__dict__, "reward": RewardConfig(w1=w1, w2=w2), **changes})


def test_1_special_function_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(50):
        delta = rng.uniform(1.01, 9.0)
        z = rng.uniform(0, 0.8) * complex(np.exp(1j * rng.uniform(0, 2 * math.pi)))
        a, b, c = delta + 1, delta + 2, 2 * delta + 4
        ref = complex(hyp2f1_series(a, b, c, z))
        worst = max(worst, abs(hyp2f1(a, b, c, z) - ref) / abs(ref))
    for _ in range(50):
        alpha, x = int(rng.integers(0, 3)), rng.uniform(0, 16 * math.pi)
        ref = float(bessel_i_series(alpha, x))
        got = bessel_i(alpha, x)
        worst = max(worst, 0.0 if ref == got else abs(got / ref - 1))
    verdict(1, "special functions vs series oracle", worst < 1e-12, time.perf_counter() - t0, 10,
            f"worst rel error {worst:.2e} over 100 cases")


def test_2_quadrature_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for delta in (1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0):
        ref1, ref2 = constraint_integrals_oracle(delta)
        worst = max(worst, abs(int1(delta) / ref1 - 1), abs(int2(delta) / ref2 - 1))
    verdict(2, "constraint integrals vs 1e6-panel oracle", worst < 1e-10, time.perf_counter() - t0, 60,
            f"worst rel error {worst:.2e}")


def lens_sample(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        x = complex(rng.uniform(-0.2, 1.2), rng.uniform(-0.9, 0.9))
        if in_lens(x, 0.05):
            out.append(x)
    return out


def test_3_crossing_symmetry():
    t0 = time.perf_counter()
    pts = lens_sample(50, 2)
    worst = 0.0
    for x in pts:
        for delta in (1.5, 2.0, 2.5, 3.7, 6.0):
            a, b = big_f_delta(delta, x), big_f_delta(delta, 1 - x)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
        for g in (0.3, 1.0, 2.5):
            a, b = h_func(x, g), h_func(1 - x, g)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    assembly = 0.0
    for x in pts:
        a = crossing_sum(x, 1.0, (1.5, 2.5, 3.5), (0.3, 0.12, 0.45))
        b = crossing_from_blocks(x, 1.0, (1.5, 2.5, 3.5), (0.3, 0.12, 0.45))
        assembly = max(assembly, abs(a - b) / max(1.0, abs(a)))
    verdict(3, "crossing symmetry and assembly", worst < 1e-12 and assembly < 1e-12, time.perf_counter() - t0, 10,
            f"symmetry {worst:.2e}, assembly {assembly:.2e}")


def test_4_degeneracy_is_linear():
    t0 = time.perf_counter()
    pts = generate_point_set(180, seed=0, complex_points=True).points
    c2, c3 = 0.12, 0.45
    res = []
    for d in (1e-1, 1e-2, 1e-3):
        res.append(max(abs(c2 * big_f_delta(2 + d, x) + c3 * big_f_delta(2 - d, x) - (c2 + c3) * big_f_delta(2, x))
                       for x in pts))
    ratios = [res[0] / res[1], res[1] / res[2]]
    verdict(4, "degenerate pair residual linear in splitting", all(5 <= r <= 20 for r in ratios),
            time.perf_counter() - t0, 5, "ratios " + ", ".join(f"{r:.3f}" for r in ratios))


def test_5_sac_correctness():
    from multistop.sac import SacAgent, SacHyperParams

    t0 = time.perf_counter()
    agent = SacAgent(4, 1, SacHyperParams(hidden_sizes=(6, 5), batch_size=8), seed=0)
    actor_fd, critic_fd = finite_difference_worst(agent)
    final = bandit(seed=0)
    again = bandit(seed=0)
    ok = max(actor_fd, critic_fd) < 1e-5 and abs(final - 0.7) <= 0.05 and final == again
    verdict(5, "SAC gradients, bandit, determinism", ok, time.perf_counter() - t0, 60,
            f"FD {actor_fd:.1e}/{critic_fd:.1e}, bandit action {final:.4f} vs 0.7, repeat equal {final == again}")


PLANT_6 = tuple(float(v) for v in np.round(np.random.default_rng(2024).uniform(0.05, 0.5, 3), 4))


def test_6_plant_and_recover():
    t0 = time.perf_counter()
    res = run_experiment(planted_config(PLANT_6), write=False)
    errs = res.stats.relative_errors(PLANT_6)
    verdict(6, "plant and recover", np.all(errs < 0.01), time.perf_counter() - t0, 15 * 60,
            f"plant {PLANT_6}, top-4 rel errors " + " ".join(f"{e:.2e}" for e in errs))


def test_7_constraint_benefit():
    t0 = time.perf_counter()
    cfg = planted_config(PLANT_6)
    report = ablation_compare(cfg, [Variant("none", 0.0, 0.0), Variant("two", cfg.reward.w1, cfg.reward.w2)])
    none, two = report.reports
    ratio = report.ratio()
    verdict(7, "constraints do not hurt", two.median_error <= none.median_error, time.perf_counter() - t0, 30 * 60,
            f"median rel error none {none.median_error:.2e}, two {two.median_error:.2e}, improvement ratio {ratio:.3g}")


def test_8_degenerate_sum():
    t0 = time.perf_counter()
    plant = (0.3, 0.12, 0.45)
    cfg = planted_config(plant, deltas=(1.5, 2.001, 1.999), sum_groups=((1, 2),))
    res = run_experiment(cfg, write=False)
    g = res.stats.sum_groups["c2+c3"]
    target = plant[1] + plant[2]
    err = abs(g.direct_mean / target - 1)
    ok = err < 0.005 and g.direct_std < g.propagated_std
    verdict(8, "degenerate pair sum", ok, time.perf_counter() - t0, 15 * 60,
            f"sum rel error {err:.2e}, direct std {g.direct_std:.2e} vs propagated {g.propagated_std:.2e}, "
            f"individual rel errors " + " ".join(f"{e:.1e}" for e in res.stats.relative_errors(plant)))


def test_9_search_mechanics():
    t0 = time.perf_counter()
    from multistop.sac import SacHyperParams

    sched = SearchSchedule(faff_max=25, pc_max=4, max_window_exp=6, window_rate=0.7)
    env = StubEnvironment(3)
    rec = run_search(env, hp=SacHyperParams(hidden_sizes=(8, 8), batch_size=8, buffer_capacity=512),
                     sched=sched, seed=0)
    steps = [s for st in rec.stages for s in st.reinit_steps]
    patience = steps == [26] + [25] * (4 * 6 - 1) and all(m == 25 for st in rec.stages for m in st.max_streaks)
    reinits = [st.reinits for st in rec.stages] == [4] * 6
    stages = rec.window_reductions == 6 and len(rec.stages) == 6
    widths = all(np.all(st.half_width == 0.5 * 0.7**st.stage) for st in rec.stages)
    widths = widths and np.all(rec.final_window.half_width == 0.5 * 0.7**6)
    verdict(9, "search loop counters", patience and reinits and stages and widths, time.perf_counter() - t0, 60,
            f"patience {patience}, reinits/stage {reinits}, reductions {rec.window_reductions}, widths exact {widths}")
