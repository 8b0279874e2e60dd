import math

import numpy as np
import pytest

from adapsca import _kernel_py
from adapsca.errors import ConfigError
from adapsca.rng import stream
from adapsca.swarm import (ADAPTIVE, HALF_AND_HALF, PSO_ONLY, Bounds, FixedSelector, Module,
                           Particle, RangingFitness, SwarmParams, Trace, inertia_weight, optimize,
                           optimize_arrays, pso_step, sca_amplitude, sca_step, select_module)

P = SwarmParams()


def test_table_defaults():
    assert (P.omega_max, P.omega_min, P.n_particles, P.c1, P.c2) == (0.9, 0.4, 30, 2.2, 1.8)
    assert (P.max_iters, P.a, P.delta, P.beta) == (60, 2.5, 0.5, 3.0)


@pytest.mark.parametrize("kw", [dict(omega_min=0.95), dict(omega_min=0.0), dict(max_iters=0),
                                dict(n_particles=0), dict(a=0.0), dict(beta=-1.0)])
def test_params_validation(kw):
    with pytest.raises(ConfigError):
        SwarmParams(**kw)


def test_inertia_schedule():
    assert inertia_weight(0, P) == 0.9
    assert inertia_weight(60, P) == pytest.approx(0.4, abs=1e-15)
    assert inertia_weight(30, P) == pytest.approx(0.65, abs=1e-15)


def test_amplitude_schedule():
    assert sca_amplitude(0, P) == 2.5
    assert sca_amplitude(60, P) == 0.0
    assert sca_amplitude(30, P) == 1.25


def test_schedule_bounds():
    for t in np.linspace(0, P.max_iters, 241):
        assert P.omega_min - 1e-15 <= inertia_weight(t, P) <= P.omega_max
        assert 0 <= sca_amplitude(t, P) <= P.a


def test_pso_fixed_point():
    pt = Particle.at([3.0, 4.0])
    out = pso_step(pt, [3.0, 4.0], 0.7, P, stream(1))
    assert np.array_equal(out.pos, [3.0, 4.0]) and np.array_equal(out.vel, [0.0, 0.0])


def test_pso_pure_inertia():
    p = SwarmParams(c1=0.0, c2=0.0)
    pt = Particle(np.array([2.0, 2.0]), np.array([1.0, 0.0]), np.array([9.0, 9.0]))
    out = pso_step(pt, [5.0, 5.0], 1.0, p, stream(1))
    assert np.array_equal(out.pos, [3.0, 2.0])


def test_pso_hand_evaluation():
    pt = Particle(np.zeros(2), np.zeros(2), np.array([1.0, 0.0]))
    ra, rb = stream(4).random(2)
    out = pso_step(pt, [0.0, 1.0], 0.3, P, stream(4))
    assert out.vel == pytest.approx([2.2 * ra, 1.8 * rb], rel=1e-15)


def test_pso_velocity_clamped():
    p = SwarmParams(comm_range=1.0)
    pt = Particle(np.zeros(2), np.array([50.0, -50.0]), np.zeros(2))
    out = pso_step(pt, [0.0, 0.0], 1.0, p, stream(0))
    assert np.array_equal(out.vel, [1.0, -1.0])


def test_sca_zero_amplitude():
    pt = Particle.at([10.0, 20.0])
    out = sca_step(pt, [50.0, 50.0], P.max_iters, P, stream(2))
    assert np.array_equal(out.pos, pt.pos)


def test_sca_zero_displacement():
    # r3 * g == x when g == x == 0
    pt = Particle.at([0.0, 0.0])
    for seed in range(20):
        assert np.array_equal(sca_step(pt, [0.0, 0.0], 0, P, stream(seed)).pos, [0.0, 0.0])


def test_sca_hand_evaluation():
    # r1 = 1, r2 = pi/2 (u1 = 1/4), r3 = 1 (u2 = 1), r4 = 0
    x = _kernel_py.sca_update([0.0, 0.0], [1.0, 1.0], 1.0, 0.25, 1.0, 0.0,
                              [-9.0, -9.0], [9.0, 9.0])
    assert x == [1.0, 1.0]


def test_sca_keeps_velocity():
    pt = Particle(np.array([5.0, 5.0]), np.array([0.3, -0.2]), np.array([5.0, 5.0]))
    out = sca_step(pt, [1.0, 1.0], 0, P, stream(8))
    assert np.array_equal(out.vel, pt.vel)


def test_select_module():
    rng = stream(3)
    assert all(select_module(0, P, rng) is Module.SCA for _ in range(1000))
    assert all(select_module(45, SwarmParams(beta=0.0), rng) is Module.SCA for _ in range(1000))
    assert all(select_module(10, P, rng, PSO_ONLY) is Module.PSO for _ in range(1000))
    assert ADAPTIVE.sca_probability(60, P) == pytest.approx(math.exp(-3), rel=1e-15)
    assert math.exp(-3) == pytest.approx(0.0498, abs=1e-4)


def sphere(c):
    return lambda x: float((x[0] - c[0]) ** 2 + (x[1] - c[1]) ** 2)


def random_init(rng, lo, hi, n=30):
    return [Particle.at(x) for x in rng.uniform(lo, hi, (n, 2))]


def test_optimize_constant_fitness():
    rng = stream(0)
    res = optimize(lambda x: 0.0, random_init(rng, 0, 10), Bounds.box([0, 0], [10, 10]), P,
                   rng=rng)
    assert res.best_fitness == 0.0
    assert np.all(res.trace.best_fitness_per_iter == 0.0)
    assert len(res.trace) == P.max_iters


def test_optimize_sphere_accuracy():
    c = np.array([3.0, -2.0])
    bounds = Bounds.box([-50, -50], [50, 50])
    hits = 0
    for seed in range(100):
        rng = stream(seed)
        best, _, _ = optimize(sphere(c), random_init(rng, -50, 50), bounds, P, ADAPTIVE, rng)
        hits += np.linalg.norm(best - c) < 0.1
    assert hits >= 95


def test_optimize_retains_optimum():
    c = [4.0, 4.0]
    rng = stream(1)
    init = [Particle.at(c)] + random_init(rng, 20, 40, 9)
    res = optimize(sphere(c), init, Bounds.box([0, 0], [50, 50]), P, ADAPTIVE, rng)
    assert np.array_equal(res.best, c)
    assert np.all(res.trace.best_fitness_per_iter == 0.0)


def test_optimize_clamps_every_step():
    bounds = Bounds.box([0, 0], [5, 5])
    seen = []

    def f(x):
        seen.append(tuple(x))
        return (x[0] - 20) ** 2 + x[1] ** 2
    for seed in range(5):
        rng = stream(seed)
        optimize(f, random_init(rng, 0, 5), bounds, P, HALF_AND_HALF, rng)
    pts = np.array(seen)
    assert len(pts) == 5 * 30 * 61
    assert pts.min() >= 0 and pts.max() <= 5


def test_optimize_rejects_empty():
    with pytest.raises(ValueError):
        optimize(lambda x: 0.0, [], Bounds.box([0, 0], [1, 1]), P)


def test_optimize_seeded_determinism():
    c = [1.0, 2.0]
    runs = []
    for _ in range(2):
        rng = stream(42)
        runs.append(optimize(sphere(c), random_init(rng, -9, 9), Bounds.box([-9, -9], [9, 9]),
                             P, ADAPTIVE, rng))
    assert np.array_equal(runs[0].trace.best_fitness_per_iter, runs[1].trace.best_fitness_per_iter)
    assert np.array_equal(runs[0].best, runs[1].best)


def test_pbest_invariants():
    rng = stream(5)
    fit = RangingFitness.of([[10, 10], [30, 10], [20, 30]], [10.0, 12.0, 14.0], [0.8, 0.8, 0.2])
    res = optimize(fit, random_init(rng, 0, 40), Bounds.box([0, 0], [40, 40]), P, ADAPTIVE, rng)
    pf = [pt.pbest_fitness for pt in res.particles]
    assert res.best_fitness == min(pf)
    for pt in res.particles:
        assert fit(pt.pbest) == pytest.approx(pt.pbest_fitness, rel=1e-12)


def test_sca_fraction_over_runs():
    n_runs, n = 20, P.n_particles
    steps = sca = 0
    for seed in range(n_runs):
        rng = stream(seed)
        res = optimize(sphere([0, 0]), random_init(rng, -5, 5, n), Bounds.box([-5, -5], [5, 5]),
                       P, ADAPTIVE, rng)
        sca += res.n_sca_steps
        steps += n * P.max_iters
    expected = sum(math.exp(-P.beta * t / P.max_iters) for t in range(P.max_iters)) / P.max_iters
    # continuous approximation (1 - e^-3) / 3 ~ 0.317; exact discrete mean over t = 0..T-1
    assert abs(expected - (1 - math.exp(-3)) / 3) < 0.01
    # per-iteration selections are Bernoulli, so the variance is the mean of p(1-p)
    var = sum(p * (1 - p) for p in (math.exp(-3 * t / 60) for t in range(60))) / 60
    se = math.sqrt(var / steps)
    assert abs(sca / steps - expected) < 3 * se


def test_fixed_selector_prob():
    assert FixedSelector(0.5).sca_probability(7, P) == 0.5


def test_trace_csv():
    text = Trace(np.array([3.0, 2.5])).to_csv()
    assert text == "iteration,best_fitness\n0,3.0\n1,2.5\n"


def test_generic_dimension():
    c = [1.0, -1.0, 2.0]
    rng = stream(3)
    init = [Particle.at(x) for x in rng.uniform(-5, 5, (20, 3))]
    res = optimize(lambda x: sum((a - b) ** 2 for a, b in zip(x, c)), init,
                   Bounds.box([-5] * 3, [5] * 3), P, ADAPTIVE, rng)
    assert res.best.shape == (3,)
    assert res.best_fitness < 1e-2


def test_kernels_bit_identical(kernel):
    for seed in range(25):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 12))
        ref = rng.uniform(0, 100, (m, 2))
        dists = rng.uniform(0, 40, m)
        w = rng.choice([0.8, 0.2], m)
        pos0 = rng.uniform(0, 100, (30, 2))
        vel0 = rng.uniform(-3, 3, (30, 2))
        fit = RangingFitness.of(ref, dists, w)
        b = Bounds.box([0, 0], [100, 100])
        a = optimize_arrays(fit, pos0, vel0, b, P, ADAPTIVE, stream(seed), backend=_kernel_py)
        c = optimize_arrays(fit, pos0, vel0, b, P, ADAPTIVE, stream(seed), backend=kernel)
        assert np.array_equal(a.trace.best_fitness_per_iter, c.trace.best_fitness_per_iter)
        assert np.array_equal(a.best, c.best) and a.best_fitness == c.best_fitness
        assert a.n_sca_steps == c.n_sca_steps
        for pa, pc in zip(a.particles, c.particles):
            assert np.array_equal(pa.pos, pc.pos) and np.array_equal(pa.vel, pc.vel)
            assert np.array_equal(pa.pbest, pc.pbest)


def test_ranging_cost_backends_agree(kernel):
    rng = np.random.default_rng(0)
    for _ in range(100):
        m = int(rng.integers(1, 8))
        ref, d, w, x = rng.normal(size=(m, 2)) * 30, rng.uniform(0, 30, m), rng.uniform(0, 1, m), rng.normal(size=2) * 30
        expect = _kernel_py.ranging_cost(list(x), ref.tolist(), d.tolist(), w.tolist())
        assert kernel.ranging_cost(x, ref, d, w) == expect
