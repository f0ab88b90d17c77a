import itertools

import numpy as np
import pytest

from proxlmc import (
    AbsoluteValue,
    BoxIndicator,
    EmpiricalMeasure,
    Quadratic,
    QuantileOracle,
    RngStream,
    Space,
    bootstrap_w2_se,
    ergodic_mean,
    estimate_C,
    feasibility_fraction,
    lemma2_residual,
    pdpg_gap_check,
    run_chain,
    SamplerConfig,
    sliced_wasserstein2,
    wasserstein2_1d,
)
from proxlmc.space import SYMMETRIC


# ---------------------------------------------------------------------------
# one-dimensional Wasserstein
# ---------------------------------------------------------------------------

def test_w2_hand_values():
    assert wasserstein2_1d(np.array([0.0, 1.0]), np.array([1.0, 0.0])) == 0.0
    assert wasserstein2_1d(np.array([0.0, 1.0]), np.array([1.0, 2.0])) == pytest.approx(1.0)
    assert wasserstein2_1d(np.array([[0.0], [1.0]]), np.array([0.0, 1.0])) == 0.0


def test_w2_requires_equal_sizes_and_scalars():
    with pytest.raises(ValueError):
        wasserstein2_1d(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        wasserstein2_1d(np.zeros((3, 2)), np.zeros((3, 2)))


def test_w2_equals_brute_force_assignment():
    """Sorted matching solves the 1-d optimal transport exactly."""
    rng = RngStream(1, 0)
    for _ in range(30):
        n = 2 + int(rng.integers(5))
        a = rng.standard_normal(n)
        b = rng.standard_normal(n)
        best = min(
            float(np.mean((a - b[list(p)]) ** 2))
            for p in itertools.permutations(range(n))
        )
        assert wasserstein2_1d(a, b) == pytest.approx(best, abs=1e-12)


def test_w2_against_quantile_oracle():
    oracle = QuantileOracle(quantile=lambda u: np.asarray(u), name="uniform")
    n = 50
    grid = (np.arange(1, n + 1) - 0.5) / n
    assert wasserstein2_1d(grid, oracle) == 0.0
    shifted = grid + 0.25
    assert wasserstein2_1d(shifted, oracle) == pytest.approx(0.0625)


def test_w2_triangle_inequality():
    rng = RngStream(2, 0)
    for _ in range(50):
        a, b, c = rng.standard_normal((3, 20))
        dab = np.sqrt(wasserstein2_1d(a, b))
        dbc = np.sqrt(wasserstein2_1d(b, c))
        dac = np.sqrt(wasserstein2_1d(a, c))
        assert dac <= dab + dbc + 1e-12


def test_empirical_measure():
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((0, 2)))
    assert len(EmpiricalMeasure(np.zeros((5, 2)))) == 5


# ---------------------------------------------------------------------------
# sliced Wasserstein
# ---------------------------------------------------------------------------

def test_sliced_w2_zero_on_identical_sets():
    pts = RngStream(3, 0).standard_normal((40, 3))
    assert sliced_wasserstein2(pts, pts.copy()) == 0.0


def test_sliced_w2_translation_scale():
    # point mass shifted by c: averaged squared projection is ||c||^2 / d
    pts = RngStream(4, 0).standard_normal((60, 3))
    c = np.array([0.6, -0.2, 0.3])
    val = sliced_wasserstein2(pts, pts + c, num_projections=4096)
    assert val == pytest.approx(np.dot(c, c) / 3.0, rel=0.1)


def test_sliced_w2_is_seeded_and_reproducible():
    a = RngStream(5, 0).standard_normal((30, 2))
    b = RngStream(5, 1).standard_normal((30, 2))
    v1 = sliced_wasserstein2(a, b)
    v2 = sliced_wasserstein2(a, b)
    assert v1 == v2
    v3 = sliced_wasserstein2(a, b, rng=RngStream(99, 0))
    assert v3 != v1
    assert sliced_wasserstein2(a, b, rng=RngStream(99, 0)) == v3


def test_sliced_w2_matrix_samples():
    s = Space(SYMMETRIC, 2)
    base = s.gaussian(RngStream(6, 0), size=25)
    assert sliced_wasserstein2(base, base.copy()) == 0.0
    shifted = base + np.eye(2)
    assert sliced_wasserstein2(base, shifted) > 0.0


def test_sliced_w2_validation():
    a = np.zeros((10, 2))
    with pytest.raises(ValueError):
        sliced_wasserstein2(a, np.zeros((9, 2)))
    with pytest.raises(ValueError):
        sliced_wasserstein2(a, np.zeros((10, 3)))
    with pytest.raises(ValueError):
        sliced_wasserstein2(a, a, num_projections=0)


# ---------------------------------------------------------------------------
# ergodic means and feasibility
# ---------------------------------------------------------------------------

def test_ergodic_mean_drops_burn_in():
    pts = [np.array([float(k)]) for k in range(1, 11)]
    assert ergodic_mean(pts) == pytest.approx(5.5)
    assert ergodic_mean(pts, burn_in=3) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        ergodic_mean(pts, burn_in=10)


def test_ergodic_mean_accepts_traces(box_quadratic):
    smooth, box = box_quadratic
    trace = run_chain("psgla", smooth, box, SamplerConfig(0.1, 25, seed=7), np.zeros(2))
    assert np.allclose(ergodic_mean(trace), np.mean(trace.primal, axis=0))


def test_feasibility_fraction_counts_in_domain_points():
    box = BoxIndicator(np.array([0.0]), np.array([1.0]))
    pts = [np.array([0.5]), np.array([2.0]), np.array([0.2]), np.array([-1.0])]
    assert feasibility_fraction(pts, box) == 0.5
    with pytest.raises(ValueError):
        feasibility_fraction([], box)


# ---------------------------------------------------------------------------
# bias constant estimate
# ---------------------------------------------------------------------------

def test_estimate_c_on_box_samples():
    box = BoxIndicator(np.array([0.0]), np.array([1.0]))
    pts = np.array([[0.2], [0.5], [1.0], [0.7]])  # one boundary point skipped
    est = estimate_C(pts, box, L=1.0, ambient_dim=1, sigma_f_sq=0.5)
    assert est.num_skipped == 1
    assert est.grad_sq_mean == 0.0
    assert est.value == pytest.approx(2.0 * (1.0 + 0.5))


def test_estimate_c_uses_subgradient_norms():
    g = AbsoluteValue(0.5)
    pts = np.array([[1.0], [-2.0], [3.0]])
    est = estimate_C(EmpiricalMeasure(pts), g, L=0.0, ambient_dim=1, sigma_f_sq=0.0)
    assert est.grad_sq_mean == pytest.approx(0.25)
    assert est.value == pytest.approx(0.25)


def test_estimate_c_errors_when_everything_is_skipped():
    box = BoxIndicator(np.array([0.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        estimate_C(np.array([[0.0], [1.0]]), box, L=1.0, ambient_dim=1, sigma_f_sq=0.0)


# ---------------------------------------------------------------------------
# one-step contraction inequality
# ---------------------------------------------------------------------------

def test_lemma2_hand_example_is_tight():
    """G = indicator of [0,1], gamma=1, x=2, anchors (0.5, 0): both sides equal."""
    g = BoxIndicator(np.array([0.0]), np.array([1.0]))
    r = lemma2_residual(1.0, np.array([2.0]), np.array([0.5]), np.array([0.0]), g)
    assert r == 0.0


def test_lemma2_residual_nonnegative_on_random_boxes():
    rng = RngStream(8, 0)
    worst = np.inf
    for _ in range(500):
        d = 1 + int(rng.integers(4))
        lo = 2.0 * rng.standard_normal(d)
        hi = lo + 0.1 + np.abs(rng.standard_normal(d))
        g = BoxIndicator(lo, hi)
        x = 4.0 * rng.standard_normal(d)
        x_star = np.clip(2.0 * rng.standard_normal(d), lo, hi)
        y_star = np.zeros(d)
        y_star[x_star == hi] = np.abs(rng.standard_normal(int((x_star == hi).sum())))
        y_star[x_star == lo] = -np.abs(rng.standard_normal(int((x_star == lo).sum())))
        gamma = float(10.0 ** (-2 + 3 * rng.uniform()))
        worst = min(worst, lemma2_residual(gamma, x, x_star, y_star, g))
    assert worst >= -1e-10


def test_lemma2_rejects_infinite_conjugates():
    g = AbsoluteValue(1.0)
    with pytest.raises(ValueError):
        lemma2_residual(1.0, np.array([3.0]), np.array([0.0]), np.array([2.0]), g)


# ---------------------------------------------------------------------------
# primal-dual gap checker
# ---------------------------------------------------------------------------

def test_pdpg_gap_check_on_a_small_problem():
    h = np.array([[2.0, 0.4], [0.4, 1.0]])
    smooth = Quadratic(h, np.array([1.5, -0.5]))
    box = BoxIndicator(np.array([-0.2, -0.2]), np.array([0.2, 0.2]))
    report = pdpg_gap_check(smooth, box, gamma=0.3, x0=np.zeros(2), num_iters=60)
    assert len(report.residuals) == 60
    assert len(report.gaps) == 60
    assert report.min_residual >= -1e-8
    assert report.min_gap >= -1e-8
    # the anchor is the proximal-gradient fixed point with its dual pair
    x_star, y_star = report.x_star, report.y_star
    step = 1.0 / smooth.L
    fixed = box.prox(step, x_star - step * smooth.full_gradient(x_star))
    assert np.allclose(fixed, x_star, atol=1e-9)
    assert np.allclose(y_star, -smooth.full_gradient(x_star), atol=1e-12)


def test_pdpg_gap_check_rejects_large_steps():
    smooth = Quadratic(np.array([[4.0]]), np.zeros(1))
    box = BoxIndicator(np.array([-1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        pdpg_gap_check(smooth, box, gamma=0.3, x0=np.zeros(1), num_iters=10)


# ---------------------------------------------------------------------------
# bootstrap standard error
# ---------------------------------------------------------------------------

def test_bootstrap_w2_se_is_deterministic_and_positive():
    oracle = QuantileOracle(quantile=lambda u: np.asarray(u), name="uniform")
    samples = RngStream(9, 0).uniform(200)
    se1 = bootstrap_w2_se(samples, oracle, num_bootstrap=100, seed=5)
    se2 = bootstrap_w2_se(samples, oracle, num_bootstrap=100, seed=5)
    assert se1 == se2
    assert se1 > 0.0
    assert bootstrap_w2_se(samples, oracle, num_bootstrap=100, seed=6) != se1
    # resampling noise of W2 should be well below the statistic's scale here
    assert se1 < wasserstein2_1d(samples, oracle) + 0.05
