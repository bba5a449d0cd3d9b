import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dmcvqkd import (
    ChannelParams,
    DetectorModelError,
    DetectorParams,
    DomainError,
    PhysicalityError,
    ProtocolParams,
    SourceNoise,
    key_rate,
)
from dmcvqkd import gaussian
from dmcvqkd.security import (
    TwoModeCov,
    channel_symplectic_eigenvalues,
    conditional_symplectic_eigenvalues,
    covariance_ab,
    detector_thermal_variance,
    equivalent_gaussian_channel,
    mutual_information,
    noise_budget,
)

# Independent 40-digit evaluation (explicit 8x8 state, heterodyne conditioning)
# at V_A = 0.29, T0 = 0.1, eta = 0.8, beta = 0.8.
ORACLE_K = {0.0: 0.0052065524316131236, 0.12: 0.0046819533143238901, 1.2: 0.0024338606118295727}
ORACLE_AT_012 = {
    "lambdas": (1.2616475554435846, 1.0006475554435846, 1.2590255170845061, 1.0001833317942985),
    "t": 0.097794696301765844,
    "eps": 0.0065395987376910435,
    "chi_t": 27.637949132031995,
}

ACC = dict(ch=ChannelParams(0.1), src=SourceNoise())


def random_cov(a, b, u):
    """Symmetric standard form with correlation u in [0, 1) of the physical maximum."""
    c = u * math.sqrt((a - 1) * (b + 1)) if a > 1 else 0.0
    c = min(c, u * math.sqrt((a + 1) * (b - 1)))
    return TwoModeCov(a, b, c)


cov_strategy = st.builds(random_cov, st.floats(1.0, 60), st.floats(1.0, 60), st.floats(0, 0.999))


@pytest.mark.parametrize("upsilon", sorted(ORACLE_K))
def test_key_rate_matches_independent_oracle(upsilon):
    rep = key_rate(ProtocolParams(0.29), ACC["ch"], ACC["src"], DetectorParams(0.8, upsilon))
    assert rep.key_rate_per_symbol == pytest.approx(ORACLE_K[upsilon], rel=1e-9)


def test_intermediates_match_oracle():
    rep = key_rate(ProtocolParams(0.29), ACC["ch"], ACC["src"], DetectorParams(0.8, 0.12))
    np.testing.assert_allclose(rep.lambdas, ORACLE_AT_012["lambdas"], rtol=1e-10)
    assert rep.channel.t == pytest.approx(ORACLE_AT_012["t"], rel=1e-12)
    assert rep.channel.eps == pytest.approx(ORACLE_AT_012["eps"], rel=1e-9)
    assert rep.budget.chi_t == pytest.approx(ORACLE_AT_012["chi_t"], rel=1e-12)
    assert rep.key_rate_per_second == pytest.approx(46.8e3, rel=5e-3)


@given(cov_strategy)
def test_channel_spectrum_matches_generic_routine(cov):
    try:
        nu = gaussian.check_physical(cov.matrix())
    except PhysicalityError:
        assume(False)
    l1, l2 = channel_symplectic_eigenvalues(cov)
    np.testing.assert_allclose([l1, l2], nu, rtol=1e-9, atol=1e-9)


@given(cov_strategy, st.floats(0.05, 0.99), st.floats(0, 3))
def test_conditional_closed_form_matches_oracle(cov, eta, upsilon):
    try:
        gaussian.check_physical(cov.matrix())
    except PhysicalityError:
        assume(False)
    det = DetectorParams(eta, upsilon)
    closed = conditional_symplectic_eigenvalues(cov, det, "closed_form")
    oracle = conditional_symplectic_eigenvalues(cov, det, "oracle")
    np.testing.assert_allclose(closed, oracle, rtol=1e-9, atol=1e-9)


@given(st.floats(1.0, 100))
def test_pure_two_mode_state_has_unit_spectrum(v):
    cov = TwoModeCov(v, v, math.sqrt(v * v - 1))
    l1, l2 = channel_symplectic_eigenvalues(cov)
    assert l1 == pytest.approx(1, abs=1e-9) and l2 == pytest.approx(1, abs=1e-9)
    l3, l4 = conditional_symplectic_eigenvalues(cov, DetectorParams(1.0, 0.0), "closed_form")
    assert l3 == pytest.approx(1, abs=1e-9) and l4 == pytest.approx(1, abs=1e-9)


def test_literal_variant_fails_on_lossless_pure_state():
    v = 5.0
    cov = TwoModeCov(v, v, math.sqrt(v * v - 1))
    with pytest.raises(PhysicalityError, match="literal"):
        conditional_symplectic_eigenvalues(cov, DetectorParams(1.0, 0.0), "literal")


def test_oracle_at_unit_efficiency_without_noise():
    cov = covariance_ab(0.29, equivalent_gaussian_channel(0.29, ChannelParams(0.1)))
    det = DetectorParams(1.0, 0.0)
    np.testing.assert_allclose(conditional_symplectic_eigenvalues(cov, det, "oracle"),
                               conditional_symplectic_eigenvalues(cov, det, "closed_form"), rtol=1e-10)


@given(st.floats(0.01, 5), st.floats(0.01, 1), st.floats(0, 0.1), st.floats(0.05, 1), st.floats(0, 2))
def test_noise_budget_identity(v_a, t0, eps0, eta, upsilon):
    eq = equivalent_gaussian_channel(v_a, ChannelParams(t0, eps0))
    b = noise_budget(eq, DetectorParams(eta, upsilon))
    assert b.chi_t == pytest.approx(b.chi_c + b.chi_d / eq.t, rel=1e-12)
    assert b.chi_c == pytest.approx(1 / eq.t - 1 + eq.eps, rel=1e-12)


@given(st.floats(0, 50), st.floats(0.05, 0.99), st.floats(0, 3))
def test_thermal_detector_model_reproduces_additive_noise(v_b, eta, upsilon):
    n = detector_thermal_variance(DetectorParams(eta, upsilon))
    thermal = eta / 2 * v_b + (1 - eta) / 2 * n + 0.5
    additive = eta * (v_b / 2 + 0.5) + (1 - eta) + upsilon
    assert thermal == pytest.approx(additive, rel=1e-12)


def test_thermal_model_undefined_at_unit_efficiency():
    with pytest.raises(DetectorModelError):
        detector_thermal_variance(DetectorParams(1.0, 0.1))


def test_equivalent_channel_is_identity_for_weak_modulation():
    eq = equivalent_gaussian_channel(1e-6, ChannelParams(0.5, 0.01))
    assert eq.t == pytest.approx(0.5, rel=1e-5)
    assert eq.eps == pytest.approx(0.01, abs=1e-5)


def test_holevo_vanishes_for_weak_modulation_on_ideal_link():
    rep = key_rate(ProtocolParams(1e-3, 1.0), ChannelParams(1.0), SourceNoise(), DetectorParams())
    assert abs(rep.holevo) < 1e-5
    assert rep.key_rate_per_symbol == pytest.approx(rep.i_ab, rel=2e-3)


def test_mutual_information_conventions():
    single = mutual_information(0.29, 27.6)
    assert mutual_information(0.29, 27.6, "doubled") == pytest.approx(2 * single)
    assert single == pytest.approx(math.log2((0.29 + 1 + 27.6) / 28.6))
    with pytest.raises(DomainError):
        mutual_information(0.29, 27.6, "triple")


point = dict(v_a=st.floats(0.05, 1.0), t0=st.floats(0.05, 1.0), eta=st.floats(0.3, 0.95),
             upsilon=st.floats(0, 1.5), beta=st.floats(0.6, 1.0))


def _k(v_a, t0, eta, upsilon, beta):
    return key_rate(ProtocolParams(v_a, beta), ChannelParams(t0), SourceNoise(),
                    DetectorParams(eta, upsilon)).key_rate_per_symbol


@given(**point)
def test_key_rate_monotone_in_loss_and_reconciliation(v_a, t0, eta, upsilon, beta):
    # loss monotonicity only where the bound is positive; trusted electronic
    # noise is left out because it can raise the bound
    k = _k(v_a, t0, eta, upsilon, beta)
    assert _k(v_a, t0, eta, upsilon, min(1.0, beta + 0.05)) >= k - 1e-12
    assume(k > 0)
    assert _k(v_a, min(1.0, t0 * 1.1), eta, upsilon, beta) >= k - 1e-12


def test_trusted_noise_can_raise_the_bound():
    assert _k(0.8469, 0.7546, 0.9313, 0.111, 0.7742) > _k(0.8469, 0.7546, 0.9313, 0.011, 0.7742) > 0


def test_electronic_noise_ordering_at_operating_point():
    ks = [_k(0.29, 0.1, 0.8, u, 0.8) for u in (0.0, 0.12, 1.2)]
    assert ks[0] > ks[1] > ks[2] > 0


def test_excess_noise_lowers_key_rate():
    det = DetectorParams(0.8, 0.12)
    k0 = key_rate(ProtocolParams(0.29), ChannelParams(0.1), SourceNoise(), det).key_rate_per_symbol
    k1 = key_rate(ProtocolParams(0.29), ChannelParams(0.1, 0.01), SourceNoise(), det).key_rate_per_symbol
    k2 = key_rate(ProtocolParams(0.29), ChannelParams(0.1), SourceNoise(0.01), det).key_rate_per_symbol
    assert k1 < k0 and k2 < k0


def test_negative_rate_reported_not_raised():
    rep = key_rate(ProtocolParams(5.0, 0.8), ChannelParams(0.01, 0.05), SourceNoise(), DetectorParams(0.5, 1.0))
    assert rep.key_rate_per_symbol < 0 and not rep.secure


def test_report_serialises():
    d = key_rate(ProtocolParams(0.29), ChannelParams(0.1), SourceNoise(), DetectorParams(0.8, 0.12)).to_dict()
    assert d["secure"] is True and len(d["lambdas"]) == 4


@pytest.mark.parametrize("kwargs", [dict(v_a=-1), dict(v_a=1, beta=0), dict(v_a=1, beta=1.5)])
def test_protocol_domain(kwargs):
    with pytest.raises(DomainError):
        ProtocolParams(**kwargs)


@pytest.mark.parametrize("t0", [0.0, 1.5, float("nan")])
def test_channel_domain(t0):
    with pytest.raises(DomainError):
        ChannelParams(t0)


def test_loss_db_conversion():
    assert ChannelParams.from_loss_db(10).t0 == pytest.approx(0.1)
    assert ChannelParams(0.1).loss_db == pytest.approx(10)


def test_entropy_g_edges():
    assert gaussian.entropy_g(1.0) == 0.0
    assert gaussian.entropy_g(3.0) == pytest.approx(2 * math.log2(2) - 1 * math.log2(1))
    with pytest.raises(DomainError):
        gaussian.entropy_g(0.9)


@given(st.floats(0, 1), st.floats(1, 20))
def test_beam_splitter_is_symplectic(t, v):
    s = gaussian.beam_splitter(t, 2, 0, 1)
    om = gaussian.symplectic_form(2)
    np.testing.assert_allclose(s @ om @ s.T, om, atol=1e-12)
    out = s @ gaussian.two_mode_squeezed(v) @ s.T
    assert np.linalg.det(out) == pytest.approx(1.0, rel=1e-8)
