import math

import numpy as np
import pytest
from scipy import stats as sps

from levyhull.errors import (
    DivergentIntegralError,
    ParameterError,
    UnsupportedExactnessError,
)
from levyhull.models import (
    EXACT_JUMPS,
    BrownianDrift,
    CompoundPoissonDrift,
    Gaussian,
    LogCorrectedPareto,
    Pareto,
    PointMass,
    StableProcess,
    TwoPoint,
    levy_tail_second_moment,
    norming,
    sample_increment,
    sample_path,
    stable_standard,
    theta,
    theta_fubini,
    truncated_variance,
)


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# parameter validation
# ---------------------------------------------------------------------------

def test_invalid_parameters_rejected():
    with pytest.raises(ParameterError):
        BrownianDrift(0.0)
    with pytest.raises(ParameterError):
        CompoundPoissonDrift(-1.0, PointMass(1.0))
    with pytest.raises(ParameterError):
        StableProcess(1.0)  # the excluded index
    with pytest.raises(ParameterError):
        StableProcess(2.5)
    with pytest.raises(ParameterError):
        StableProcess(1.5, beta=1.5)
    with pytest.raises(ParameterError):
        StableProcess(1.5, scale=0.0)
    with pytest.raises(ParameterError):
        TwoPoint(0.5, up=-1.0, down=-2.0)
    with pytest.raises(ParameterError):
        TwoPoint(0.5, up=1.0, down=2.0)
    with pytest.raises(ParameterError):
        Pareto(0.0, 1.0)
    with pytest.raises(ParameterError):
        PointMass(0.0)
    with pytest.raises(ParameterError):
        Gaussian(0.0, 0.0)


def test_nonpositive_duration_rejected():
    with pytest.raises(ParameterError):
        sample_increment(BrownianDrift(1.0), 0.0, rng())
    with pytest.raises(ParameterError):
        sample_increment(BrownianDrift(1.0), -1.0, rng())


# ---------------------------------------------------------------------------
# increment laws
# ---------------------------------------------------------------------------

def test_brownian_unit_increment_mean():
    g = rng(11)
    draws = g.standard_normal(0)  # placeholder for clarity
    draws = np.array([sample_increment(BrownianDrift(1.0), 1.0, g) for _ in range(10**6)])
    assert abs(draws.mean()) <= 0.004
    assert abs(draws.std() - 1.0) <= 0.01


def test_point_mass_compound_poisson_mean():
    g = rng(12)
    m = CompoundPoissonDrift(2.0, PointMass(1.0), 0.0)
    draws = np.array([sample_increment(m, 3.0, g) for _ in range(50_000)])
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 6.0) <= 3.0 * se
    assert np.allclose(draws, np.round(draws))  # jump sizes are integers


def test_stable_alpha2_matches_gaussian_oracle():
    # the alpha = 2 transform must reduce to N(0, 2 scale^2)
    g = rng(13)
    s = 1.3
    m = StableProcess(2.0, 0.0, scale=s)
    draws = np.array([sample_increment(m, 1.0, g) for _ in range(60_000)])
    ref = math.sqrt(2.0) * s * rng(14).standard_normal(60_000)
    assert abs(draws.var() / (2 * s * s) - 1.0) < 0.03
    res = sps.ks_2samp(draws, ref)
    assert res.pvalue > 0.01


@pytest.mark.parametrize(
    "model",
    [
        BrownianDrift(0.8, mu=0.1),
        CompoundPoissonDrift(1.5, Gaussian(0.1, 1.0), mu=-0.25),
        # dyadic drift and jump sizes keep the lattice atoms bit-identical
        # under the two float accumulation routes
        CompoundPoissonDrift(2.0, TwoPoint(0.4, 1.0, -0.5), mu=0.25),
        StableProcess(1.5, beta=0.3, scale=0.9, mu=0.1),
        StableProcess(0.7, beta=-0.5, scale=1.1),
    ],
)
def test_increment_additivity_in_law(model):
    # X_{t/2} + X'_{t/2} must match X_t in law (two-sample KS, level 0.01)
    g = rng(hash(repr(model)) % 2**32)
    n = 100_000
    halves = np.array(
        [sample_increment(model, 0.5, g) + sample_increment(model, 0.5, g) for _ in range(n // 10)]
    )
    whole = np.array([sample_increment(model, 1.0, g) for _ in range(n // 10)])
    res = sps.ks_2samp(halves, whole)
    assert res.pvalue > 0.01


def test_pareto_magnitudes_respect_scale_floor():
    g = rng(15)
    j = Pareto(1.8, scale=0.5, p_up=0.7)
    draws = j.sample(10_000, g)
    assert np.abs(draws).min() >= 0.5
    assert 0.6 < (draws > 0).mean() < 0.8


def test_log_corrected_pareto_is_moment_only():
    j = LogCorrectedPareto()
    with pytest.raises(UnsupportedExactnessError):
        j.sample(10, rng())
    assert j.mean() == 0.0
    assert j.second_moment() == pytest.approx(2.0 / j._norm)


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

def test_exact_jump_record_point_mass():
    g = rng(21)
    m = CompoundPoissonDrift(1.0, PointMass(1.0), 0.0)
    path = sample_path(m, 10.0, EXACT_JUMPS, g)
    n_jumps = len(path.times) - 2
    assert path.values[-1] == pytest.approx(n_jumps)
    assert path.exactness == EXACT_JUMPS
    # post-jump value exceeds the pre-jump value by exactly one jump
    assert np.allclose(path.values[1:-1] - path.pre_values[1:-1], 1.0)


def test_exact_jump_record_reconstructs_drift():
    g = rng(22)
    m = CompoundPoissonDrift(0.8, Gaussian(0.0, 1.0), mu=0.5)
    path = sample_path(m, 20.0, EXACT_JUMPS, g)
    dt = np.diff(path.times)
    drift_gain = path.pre_values[1:] - path.values[:-1]
    assert np.allclose(drift_gain, 0.5 * dt, atol=1e-12)


def test_grid_path_shapes():
    g = rng(23)
    path = sample_path(BrownianDrift(1.0), 1.0, 0.25, g)
    assert len(path.times) == 5
    assert path.times[-1] == 1.0
    single = sample_path(StableProcess(1.5), 1.0, 1.0, g)
    assert len(single.times) == 2


def test_grid_final_value_is_leftfold_of_increments():
    g = rng(24)
    path = sample_path(BrownianDrift(1.0, 0.3), 2.0, 0.01, g)
    incs = np.diff(path.values)
    acc = 0.0
    for v in incs:
        acc += v
    assert path.values[-1] == acc  # bit-for-bit left-to-right accumulation


def test_exact_jumps_unsupported_for_infinite_activity():
    with pytest.raises(UnsupportedExactnessError):
        sample_path(BrownianDrift(1.0), 1.0, EXACT_JUMPS, rng())
    with pytest.raises(UnsupportedExactnessError):
        sample_path(StableProcess(1.5), 1.0, EXACT_JUMPS, rng())


# ---------------------------------------------------------------------------
# norming
# ---------------------------------------------------------------------------

def test_norming_values():
    assert norming(BrownianDrift(2.0), 100.0) == pytest.approx(10.0)
    assert norming(StableProcess(0.5, scale=1.0), 16.0) == pytest.approx(256.0)
    # alpha = 2 stable: match the Gaussian variance of the unit draw
    s = 0.7
    g = rng(31)
    draws = np.array([sample_increment(StableProcess(2.0, scale=s), 4.0, g) for _ in range(40_000)])
    assert norming(StableProcess(2.0, scale=s), 4.0) == pytest.approx(2 * s * math.sqrt(2))
    assert draws.std() == pytest.approx(norming(StableProcess(2.0, scale=s), 4.0), rel=0.03)


def test_norming_pareto_attracted():
    m = CompoundPoissonDrift(2.0, Pareto(1.5, scale=0.5), 0.0)
    assert m.attraction_alpha() == 1.5
    assert norming(m, 8.0) == pytest.approx(0.5 * 16.0 ** (1 / 1.5))


# ---------------------------------------------------------------------------
# the centering integral
# ---------------------------------------------------------------------------

def test_theta_trivial_cases():
    assert theta(BrownianDrift(1.0), 50.0) == 0.0
    m = CompoundPoissonDrift(1.0, PointMass(1.0), 0.0)
    assert theta(m, 10.0) == 0.0  # log+(min(10, 1)) = 0
    m2 = CompoundPoissonDrift(1.0, PointMass(math.e), 0.0)
    assert theta(m2, math.e**2) == pytest.approx(math.e**2, rel=1e-12)


@pytest.mark.parametrize(
    "jump",
    [
        PointMass(2.5),
        TwoPoint(0.3, 2.0, -0.5),
        Gaussian(0.2, 1.1),
        Pareto(3.5, 0.8, 0.6),
        LogCorrectedPareto(),
    ],
)
def test_theta_forms_agree(jump):
    m = CompoundPoissonDrift(1.3, jump, 0.0)
    for T in (1.0, 2.0, 37.0, 1e4):
        a = theta(m, T)
        b = theta_fubini(m, T)
        assert a == pytest.approx(b, rel=1e-8, abs=1e-12)


def test_theta_monotone_and_log_bounded():
    m = CompoundPoissonDrift(0.9, Gaussian(0.0, 1.4), 0.0)
    grid = [1.0, 2.0, 5.0, 30.0, 200.0, 5e3]
    vals = [theta(m, T) for T in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    bound = 0.5 * m.rate * m.jump.second_moment()
    for T, v in zip(grid, vals):
        assert v <= bound * math.log(T) + 1e-12


def test_theta_divergent_measure():
    m = CompoundPoissonDrift(1.0, Pareto(1.5, 1.0), 0.0)
    with pytest.raises(DivergentIntegralError):
        theta(m, 10.0)


def test_theta_needs_t_at_least_one():
    with pytest.raises(ParameterError):
        theta(BrownianDrift(1.0), 0.5)


def test_truncated_variance_point_mass_boundary():
    # kappa * sqrt(t) >= |x| leaves the full variance for t >= 1 (strict tail)
    m = CompoundPoissonDrift(1.0, PointMass(1.0), 0.0)
    vals = truncated_variance(m, np.array([1.0, 4.0]), kappa=1.0)
    assert np.allclose(vals, 1.0)
    assert truncated_variance(m, 0.25, kappa=1.0) == pytest.approx(0.0)
    assert float(levy_tail_second_moment(m, 0.999)) == pytest.approx(1.0)


def test_stable_standard_symmetry():
    g = rng(41)
    x = stable_standard(1.5, 0.0, g, 50_000)
    assert abs(np.mean(np.sign(x))) < 0.02
