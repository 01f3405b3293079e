import math

import numpy as np
import pytest

from asynctrig.certificates import (
    build_U_c,
    build_U_sigma,
    certificate_from_dict,
    certificate_to_dict,
    choose_sigma_star,
    decay_factor,
    max_eps_feasible,
    reverify_certificate,
    synthesize_perturbed_offline,
    synthesize_perturbed_online,
    synthesize_unperturbed,
    ultimate_bound,
    verify_lmi_pair,
)
from asynctrig.errors import InfeasibleError
from asynctrig.horizons import enumerate_horizons
from asynctrig.matrix_core import spectral_radius, sym_eig_bounds, symmetrize
from asynctrig.plant import DiscretePlant, disturbance_step_bound, growth_constants, horizon_transition
from helpers import benchmark_plant


def _phi_star_unperturbed():
    dp = DiscretePlant.from_plant(benchmark_plant(), 0.3)
    return horizon_transition(dp, (1, 2))


def test_choose_sigma_star_picks_smallest_radius():
    dp = DiscretePlant.from_plant(benchmark_plant(), 0.3)
    horizons = enumerate_horizons(2, 1, 2)
    star = choose_sigma_star(dp, horizons)
    best = min(spectral_radius(horizon_transition(dp, s)) for s in horizons)
    assert spectral_radius(horizon_transition(dp, star)) == pytest.approx(best)


def test_unperturbed_certificate_decay_margin():
    Phi = _phi_star_unperturbed()
    cert = synthesize_unperturbed(Phi, 0.0, 0.6, sigma_star=(1, 2), T=0.3)
    lo, _ = sym_eig_bounds(cert.P)
    assert lo > 0
    G = symmetrize(Phi.T @ cert.P @ Phi) - cert.P
    _, hi = sym_eig_bounds(G)
    assert hi <= -1e-9
    # unit right-hand side makes the margin exactly 1
    assert hi == pytest.approx(-1.0, rel=1e-9)


def test_unperturbed_rejects_noncontractive_fallback():
    with pytest.raises(InfeasibleError, match="spectral radius"):
        synthesize_unperturbed(np.diag([1.0, 0.5]), 0.0, 1.0)
    # decay demand beyond the horizon's contraction
    Phi = _phi_star_unperturbed()  # sr ~ 0.991
    with pytest.raises(InfeasibleError):
        synthesize_unperturbed(Phi, 1.0, 0.6)


def test_verify_lmi_pair_known_values():
    I = np.eye(2)
    assert verify_lmi_pair(I, I, 2.0, 1.0, np.zeros((2, 2)), 1.0)
    assert not verify_lmi_pair(I, I, 0.5, 1.0, np.zeros((2, 2)), 1.0)


def test_perturbed_online_scalar_toy():
    # Phi = 0 forces LMI1 to (bbar - gamma)P <= 0, so gamma must beat bbar
    Phi = np.zeros((1, 1))
    cert = synthesize_perturbed_online(Phi, 0.0, 1.0, 1.0, 1.5, sigma_star=(1,), T=1.0)
    assert verify_lmi_pair(cert.P, cert.M, 1.5, 1.0, Phi, 1.0)
    with pytest.raises(InfeasibleError):
        synthesize_perturbed_online(Phi, 0.0, 1.0, 1.0, 0.5)


def test_perturbed_online_self_verification_random():
    rng = np.random.default_rng(77)
    beta = math.log(2.0)  # bbar = 0.5 over a unit horizon
    for _ in range(50):
        Phi = rng.normal(size=(4, 4))
        Phi *= rng.uniform(0.1, 0.6) / spectral_radius(Phi)
        chi = float(rng.uniform(0.05, 5.0))
        cert = synthesize_perturbed_online(Phi, beta, 1.0, chi, 1.0, sigma_star=(1,), T=1.0)
        assert verify_lmi_pair(cert.P, cert.M, 1.0, chi, Phi, 0.5)


def test_build_U_sigma_known_values():
    I = np.eye(2)
    U = build_U_sigma(I, I, 1.0, np.zeros((2, 2)), 1.0, 0.0)
    assert U.shape == (3, 3)
    assert np.allclose(U[:2, :2], np.zeros((2, 2)))
    assert U[2, 2] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        build_U_sigma(I, np.zeros((2, 2)), 1.0, I, 1.0, 1.0)


def test_build_U_sigma_matches_summand_recomputation():
    # quadratic form value must equal the two summands computed independently
    plant = benchmark_plant(perturbed=True)
    dp = DiscretePlant.from_plant(plant, 0.18)
    varpi = disturbance_step_bound(plant, 0.18)
    horizons = enumerate_horizons(2, 1, 4)
    C, chi_sq, _ = growth_constants(dp, horizons, varpi)
    Phi_star = horizon_transition(dp, (2, 1, 2, 1))
    beta = math.log(10.0) / (4 * 0.18)
    cert = synthesize_perturbed_online(
        Phi_star, beta, 4 * 0.18, chi_sq[4], 0.35, sigma_star=(2, 1, 2, 1), T=0.18, chi_squared=chi_sq
    )
    rng = np.random.default_rng(4)
    Minv = np.linalg.inv(cert.M)
    lam_bar = max(np.linalg.eigvalsh(symmetrize(cert.P @ Minv @ cert.P) + cert.P))
    for _ in range(100):
        sigma = horizons[rng.integers(len(horizons))]
        Phi = horizon_transition(dp, sigma)
        bbar = decay_factor(beta, len(sigma), 0.18)
        U = build_U_sigma(cert.P, cert.M, 0.35, Phi, bbar, chi_sq[len(sigma)])
        eta = rng.normal(scale=rng.uniform(0.1, 10.0), size=4)
        v = np.concatenate([eta, [1.0]])
        got = v @ U @ v
        term1 = -eta @ Phi.T @ (cert.P + cert.M) @ Phi @ eta + (bbar - 0.35) * (eta @ cert.P @ eta)
        term2 = 0.35 - chi_sq[len(sigma)] * lam_bar
        assert got == pytest.approx(term1 + term2, rel=1e-9, abs=1e-9)


def test_build_U_c_block_layout():
    # Phi = 0, P = I, gamma1=0.1, gamma2=0.2, bbar=1, chi=1: blocks are
    # 0.9 I and 0.2 I - I; the corner scalar follows -gamma2+gamma1
    n4 = 4
    U = build_U_c(np.eye(n4), 0.1, 0.2, np.zeros((n4, n4)), 1.0, 1.0, np.zeros((n4, n4)), 1e-9)
    assert U.shape == (9, 9)
    assert np.allclose(U[:4, :4], 0.9 * np.eye(4))
    assert np.allclose(U[4:8, 4:8], 0.2 * np.eye(4) - np.eye(4))
    assert np.allclose(U[4:8, :4], np.zeros((4, 4)))
    assert U[8, 8] == pytest.approx(-0.2 + 0.1)
    assert np.allclose(U[8, :8], 0.0)
    assert np.array_equal(U, U.T)


def test_build_U_c_zero_multiplier_is_unregioned():
    rng = np.random.default_rng(9)
    P = np.eye(4)
    Phi = rng.normal(size=(4, 4))
    Q = rng.normal(size=(4, 4))
    U0 = build_U_c(P, 0.3, 0.1, Phi, 1.0, 2.0, Q, 0.0)
    U1 = build_U_c(P, 0.3, 0.1, Phi, 1.0, 2.0, np.zeros((4, 4)), 5.0)
    assert np.allclose(U0, U1)


def test_perturbed_offline_synthesis_eigencheck():
    plant = benchmark_plant(perturbed=True)
    dp = DiscretePlant.from_plant(plant, 0.205)
    varpi = disturbance_step_bound(plant, 0.205)
    horizons = enumerate_horizons(2, 3, 6)
    _, _, chi_lin = growth_constants(dp, horizons, varpi)
    Phi_star = horizon_transition(dp, (1, 2, 2))
    cert = synthesize_perturbed_offline(
        Phi_star, 0.0, 3 * 0.205, chi_lin[3], 0.3, 0.1, sigma_star=(1, 2, 2), T=0.205
    )
    U = build_U_c(cert.P, 0.3, 0.1, Phi_star, 1.0, chi_lin[3], np.zeros((4, 4)), 1.0)
    lo, _ = sym_eig_bounds(U)
    assert lo >= -1e-9
    with pytest.raises(ValueError):
        synthesize_perturbed_offline(Phi_star, 0.0, 0.615, chi_lin[3], -0.3, 0.1)
    with pytest.raises(InfeasibleError):
        # gamma1 >= bbar leaves no decay budget at all
        synthesize_perturbed_offline(Phi_star, 0.0, 0.615, chi_lin[3], 1.0, 0.1)


def test_max_eps_feasible_directional_relaxation():
    # the multiplier relaxes along the cone axis: a wide cone whose axis is
    # the expanding direction of Phi admits eps > 0, while a narrow cone on
    # the contracting axis leaves the e1 deficiency unpaid and admits none
    P = np.eye(2)
    Phi = np.diag([1.01, 0.1])
    Q_axis = np.outer(np.array([1.0, 0.0]), np.array([1.0, 0.0])) - np.cos(np.deg2rad(80.0)) ** 2 * np.eye(2)
    eps = max_eps_feasible(P, 0.3, 0.1, Phi, 1.0, 0.001, Q_axis)
    assert eps is not None and eps > 0
    U = build_U_c(P, 0.3, 0.1, Phi, 1.0, 0.001, Q_axis, eps)
    lo, _ = sym_eig_bounds(U)
    assert lo >= -1e-9
    Q_off = np.outer(np.array([0.0, 1.0]), np.array([0.0, 1.0])) - np.cos(np.pi / 6) ** 2 * np.eye(2)
    assert max_eps_feasible(P, 0.3, 0.1, Phi, 1.0, 0.001, Q_off) is None


def test_ultimate_bound_known_values_and_monotonicity():
    mu, psi = ultimate_bound(np.eye(2), 0.0, 1.0)
    assert mu == pytest.approx(1.0) and psi == pytest.approx(1.0)
    mu, psi = ultimate_bound(np.diag([1.0, 4.0]), 0.0, 1.0)
    assert mu == pytest.approx(4.0) and psi == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ultimate_bound(np.diag([1.0, 0.0]), 1.0, 1.0)
    P = np.diag([0.5, 3.0])
    base, _ = ultimate_bound(P, 1.0, 0.5)
    more_noise, _ = ultimate_bound(P, 1.0, 0.7)
    more_drift, _ = ultimate_bound(P, 1.5, 0.5)
    assert more_noise > base and more_drift > base


def test_serialization_round_trip_reverifies():
    Phi = _phi_star_unperturbed()
    cert = synthesize_unperturbed(Phi, 0.0, 0.6, sigma_star=(1, 2), T=0.3)
    back = certificate_from_dict(certificate_to_dict(cert))
    assert np.allclose(back.P, cert.P)
    assert back.sigma_star == (1, 2)
    assert reverify_certificate(back, Phi)
    tampered = certificate_from_dict({**certificate_to_dict(cert), "P": (2 * np.eye(4)).tolist()})
    assert not reverify_certificate(tampered, Phi)


def test_serialization_round_trip_perturbed_kinds():
    plant = benchmark_plant(perturbed=True)
    dp = DiscretePlant.from_plant(plant, 0.18)
    varpi = disturbance_step_bound(plant, 0.18)
    horizons = enumerate_horizons(2, 1, 4)
    C, chi_sq, chi_lin = growth_constants(dp, horizons, varpi)
    Phi_star = horizon_transition(dp, (2, 1, 2, 1))
    beta = math.log(10.0) / (4 * 0.18)
    on = synthesize_perturbed_online(
        Phi_star, beta, 4 * 0.18, chi_sq[4], 0.35,
        C=C, varpi=varpi, C_prime=2.0, sigma_star=(2, 1, 2, 1), T=0.18, chi_squared=chi_sq,
    )
    back = certificate_from_dict(certificate_to_dict(on))
    assert np.allclose(back.M, on.M)
    assert back.chi_squared == on.chi_squared
    assert reverify_certificate(back, Phi_star)

    dp2 = DiscretePlant.from_plant(plant, 0.205)
    varpi2 = disturbance_step_bound(plant, 0.205)
    hs2 = enumerate_horizons(2, 3, 6)
    _, _, chi_lin2 = growth_constants(dp2, hs2, varpi2)
    Phi2 = horizon_transition(dp2, (1, 2, 2))
    off = synthesize_perturbed_offline(
        Phi2, 0.0, 0.615, chi_lin2[3], 0.3, 0.1,
        sigma_star=(1, 2, 2), T=0.205, chi_linear_map=chi_lin2, C_prime=2.0, varpi=varpi2,
    )
    back2 = certificate_from_dict(certificate_to_dict(off))
    assert np.allclose(back2.P, off.P)
    assert back2.chi_linear_map == off.chi_linear_map
    assert reverify_certificate(back2, Phi2)


def test_decay_factor():
    assert decay_factor(0.0, 5, 0.3) == 1.0
    assert decay_factor(2.0, 3, 0.5) == pytest.approx(math.exp(-3.0))
