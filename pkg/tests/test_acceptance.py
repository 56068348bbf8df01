"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as the
criteria complete.  Tolerances are fixed here, not tuned at runtime.
"""

import numpy as np
import pytest

from mflab.config import ExperimentConfig
from mflab.experiments import run_escape, run_two_clique
from mflab.fokker_planck import (
    FourierDensity,
    evolve_density,
    predicted_r_squared,
    simulate_linearized,
    solve_r_fixed_point,
    synchrony_map,
)
from mflab.graphs import binomial_tail, degree_report_from_degrees, degree_stats, \
    gen_complete, gen_two_clique
from mflab.metrics import bound_curve, coupling_error
from mflab.models import make_kuramoto, model_constants
from mflab.rng import STREAM_GRAPH
from mflab.sde import PhaseLaw, SimConfig, sample_initial, simulate, \
    simulate_coupled


def report(number: int, name: str, passed: bool, detail: str) -> None:
    print(f"\n[criterion {number}] {'PASS' if passed else 'FAIL'} "
          f"{name}: {detail}")


def fit_rate(times, values):
    return float(np.polyfit(times, np.log(np.abs(values)), 1)[0])


def test_criterion_1_linear_rates():
    model = make_kuramoto(2.0)  # K=4 in the single-oscillator convention
    fitted = []
    for mode in (1, 2):
        c = np.zeros((1, 64))
        c[0, mode - 1] = 1e-4
        q0 = FourierDensity(c, np.zeros_like(c), np.array([1.0]))
        traj = evolve_density(model, q0, 1.0, 1e-3, 4.0, record_every=100)
        fitted.append(fit_rate(traj.times, traj.c[:, 0, mode - 1]))
    err1 = abs(fitted[0] - 0.5) / 0.5
    err2 = abs(fitted[1] - (-2.0)) / 2.0
    ok = err1 < 0.05 and err2 < 0.05
    report(1, "linear rates", ok,
           f"lambda_1={fitted[0]:.6f} (rel {err1:.2e}), "
           f"lambda_2={fitted[1]:.6f} (rel {err2:.2e})")
    assert ok


def test_criterion_2_critical_coupling():
    ok = True
    details = []
    for k in (1.5, 1.9):
        roots = solve_r_fixed_point(k)
        ok &= roots == [0.0]
        details.append(f"K={k}: {len(roots)} root(s)")
    for k in (2.1, 3.0, 4.0):
        roots = solve_r_fixed_point(k)
        ok &= len(roots) == 2 and roots[1] > 0.0
        ok &= all(abs(synchrony_map(k, r) - r) < 1e-10 for r in roots)
        details.append(f"K={k}: extra root {roots[-1]:.4f}")
    report(2, "critical coupling", ok, "; ".join(details))
    assert ok


def test_criterion_3_escape_time():
    cfg = ExperimentConfig.from_dict({
        "experiment": "escape",
        "graph": {"kind": "complete", "n": 1000},
        "model": {"kind": "kuramoto", "coupling": 4.0, "sigma": 1.0},
        "init": {"phase": "uniform"},
        "sim": {"dt": 0.01, "t_final": 20.0, "record_every": 25},
        "seeds": {"start": 1, "count": 10},
    })
    rep = run_escape(cfg)
    median = rep.data["median_crossing"]
    ok = (rep.verdicts["crossing_median_in_window"]
          and rep.verdicts["final_density_unimodal"]
          and rep.verdicts["final_density_near_stationary"])
    report(3, "escape time", ok,
           f"median crossing {median:.2f} in [4, 9], "
           f"max dbl {max(rep.data['dbl']):.4f} <= 0.1, "
           f"mode counts {rep.data['mode_counts']}")
    assert ok


def test_criterion_4_linearized_prediction():
    path = simulate_linearized(1000, 4.0, 6.0, 0.05, seed=123, n_paths=10_000)
    mean_r2 = (path.r ** 2).mean(axis=1)
    pred = predicted_r_squared(1000, 4.0, path.times)
    rel = np.abs(mean_r2 - pred) / pred
    ok = bool(rel.max() < 0.05)
    report(4, "linearized prediction", ok,
           f"max rel err {rel.max():.4f} over t in [0, 6] (1e4 paths)")
    assert ok


def test_criterion_5_proximity_bound():
    model = make_kuramoto(1.0)
    C = model_constants(model).C
    limit = evolve_density(model, FourierDensity.uniform(16, model.disorder),
                           1.0, 1e-3, 2.0, record_every=10)
    u_at_1 = {}
    bound_ok = True
    for n in (100, 400):
        g = gen_complete(n)
        runs = []
        for seed in range(50):
            init = sample_initial(PhaseLaw("uniform"), model.disorder, n,
                                  seed=seed)
            runs.append(simulate_coupled(g, model, init,
                                         SimConfig(0.01, 2.0, seed, 10),
                                         limit))
        times, u = coupling_error(runs)
        bc = bound_curve(degree_stats(g, 1.0), C)
        bound_ok &= bool(np.all(u <= bc(times)))
        u_at_1[n] = float(np.interp(1.0, times, u))
    ratio = u_at_1[100] / u_at_1[400]
    ok = bound_ok and 2.5 <= ratio <= 6.0
    report(5, "proximity bound", ok,
           f"C={C}, u(t=1): n=100 -> {u_at_1[100]:.3e}, "
           f"n=400 -> {u_at_1[400]:.3e}, ratio {ratio:.2f} in [2.5, 6]")
    assert ok


def test_criterion_6_two_clique_breakdown():
    cfg = ExperimentConfig.from_dict({
        "experiment": "two_clique",
        "graph": {"kind": "two_clique", "half": 500},
        "model": {"kind": "kuramoto", "coupling": 4.0, "sigma": 1.0},
        "init": {"phase": "uniform"},
        "sim": {"dt": 0.01, "t_final": 20.0, "record_every": 50},
        "seeds": {"start": 1, "count": 50},
    })
    rep = run_two_clique(cfg)
    ok = (rep.verdicts["cliques_synchronized"]
          and rep.verdicts["gaps_uniform"]
          and rep.verdicts["global_r_below_cliques"])
    report(6, "two-clique breakdown", ok,
           f"synced fraction {rep.data['synced_fraction']:.2f} >= 0.95 "
           f"(target r >= 0.9 * {rep.data['r_star']:.4f}), "
           f"gap uniformity passed={rep.verdicts['gaps_uniform']}")
    assert ok


def test_criterion_7_degree_concentration():
    chernoff_ok = True
    for n in range(2, 31):
        for q in (0.2, 0.3, 0.5, 0.7):
            for eps in (0.05, 0.1, 0.2):
                if not 0 < q + eps < 1:
                    continue
                bound, exact = binomial_tail(n, q, eps)
                chernoff_ok &= exact <= bound + 1e-15

    def bn_mean(n, q, draws=20):
        vals = []
        for draw in range(draws):
            bg = np.random.Philox(key=np.array([1, STREAM_GRAPH],
                                               dtype=np.uint64),
                                  counter=draw * (1 << 128))
            degrees = np.random.Generator(bg).binomial(n - 1, q, size=n)
            vals.append(degree_report_from_degrees(degrees, n, 1.0, q).b_n)
        return float(np.mean(vals))

    means = [bn_mean(n, 0.3) for n in (100, 1000, 10_000)]
    decreasing = means[0] > means[1] > means[2]
    ok = chernoff_ok and decreasing
    report(7, "degree concentration", ok,
           f"exact <= Chernoff on n <= 30 grid: {chernoff_ok}; "
           f"mean b_n at q=0.3: {means[0]:.4f} > {means[1]:.4f} "
           f"> {means[2]:.4f}")
    assert ok


def test_criterion_8_property_suite():
    checks = {}

    # RNG / worker-count determinism
    model = make_kuramoto(1.5)
    g = gen_complete(80)
    init = sample_initial(PhaseLaw("uniform"), model.disorder, 80, seed=3)
    a = simulate(g, model, init, SimConfig(0.01, 0.5, 3, 10, workers=1))
    b = simulate(g, model, init, SimConfig(0.01, 0.5, 3, 10, workers=8))
    checks["determinism"] = bool(np.array_equal(a.theta, b.theta))

    # fast path vs generic path
    fast = simulate(g, model, init, SimConfig(0.01, 0.5, 3, 10), path="blocks")
    slow = simulate(g, model, init, SimConfig(0.01, 0.5, 3, 10), path="generic")
    checks["fast_vs_generic_1e-10"] = bool(
        np.abs(fast.theta - slow.theta).max() < 1e-10)

    # zero-mode conservation of the density solver
    traj = evolve_density(make_kuramoto(2.0),
                          FourierDensity.wrapped_gaussian(0.4, 0.7, 32),
                          1.0, 1e-3, 0.5, record_every=100)
    theta = np.linspace(0, 2 * np.pi, 1024, endpoint=False)
    masses = [traj.at(m).phase_density(theta).sum() * 2 * np.pi / 1024
              for m in range(len(traj.times))]
    checks["zero_mode_conserved"] = bool(
        max(abs(m - 1.0) for m in masses) < 1e-12)

    # rotational equivariance
    q0 = FourierDensity.wrapped_gaussian(0.3, 0.6, 32)
    ta = evolve_density(make_kuramoto(2.0), q0, 1.0, 1e-3, 0.5,
                        record_every=500)
    tb = evolve_density(make_kuramoto(2.0), q0.rotated(0.9), 1.0, 1e-3, 0.5,
                        record_every=500)
    rot = ta.at(-1).rotated(0.9)
    checks["rotational_equivariance_1e-8"] = bool(
        np.abs(rot.c - tb.at(-1).c).max() < 1e-8
        and np.abs(rot.s - tb.at(-1).s).max() < 1e-8)

    # zero-coupling identities: coupled paths coincide, u curve is zero
    model0 = make_kuramoto(0.0)
    limit0 = evolve_density(model0, FourierDensity.uniform(16), 1.0, 1e-3,
                            0.5, record_every=10)
    init0 = sample_initial(PhaseLaw("uniform"), model0.disorder, 60, seed=5)
    run0 = simulate_coupled(gen_two_clique(30), model0, init0,
                            SimConfig(0.01, 0.5, 5, 10), limit0, p=0.5)
    checks["zero_coupling_identity"] = bool(
        np.all(run0.running_sup_sq == 0.0))

    ok = all(checks.values())
    report(8, "property suite", ok,
           ", ".join(f"{k}={v}" for k, v in checks.items()))
    assert ok
