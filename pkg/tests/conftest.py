"""Shared fixtures: the hard-sphere desk case used across the suite."""

import pytest

import ksfluid as kf

# two particles on one node is legal on purpose for finite potentials
CONTACT_WARNING = "ignore:potential is finite at contact"


@pytest.fixture(scope="session")
def desk_potential():
    return kf.hard_sphere(1.0)


@pytest.fixture(scope="session")
def desk_envelope():
    return kf.envelope_from_forms(
        1.0,
        ("inverse-power", {"amplitude": 1.0, "exponent": 4.0}),
        ("exponential", {"amplitude": 1.0, "rate": 1.0}),
    )


@pytest.fixture(scope="session")
def desk_report(desk_potential, desk_envelope):
    return kf.regularity_report(desk_potential, desk_envelope, beta=1.0, B=0.0)


@pytest.fixture(scope="session")
def desk_grid():
    return kf.build_grid(kf.Box(2.0), 3)


@pytest.fixture(scope="session")
def desk_z(desk_report):
    return 0.5 * desk_report.z_max


@pytest.fixture(scope="session")
def desk_ks():
    return kf.KSConfig(m_max=3, n_max=4, neumann_tol=1e-13, max_iters=300)


@pytest.fixture(scope="session")
def desk_perturbation():
    # supported on the envelope tail with norm exactly 0.125 = 0.25 * t0
    return kf.exp_tail_perturbation(0.125, 1.0, r_min=1.0)


@pytest.fixture(scope="session")
def desk_v_norm(desk_perturbation, desk_potential, desk_envelope):
    return kf.vu_norm(desk_perturbation, desk_potential, desk_envelope)


@pytest.fixture(scope="session")
def desk_solution(desk_ks, desk_potential, desk_grid, desk_z, desk_report):
    return kf.solve_ks(desk_ks, desk_potential, 1.0, desk_z, desk_grid, desk_report)


@pytest.fixture(scope="session")
def desk_oracle(desk_grid, desk_potential, desk_z):
    cfg = kf.OracleConfig(N_max=6, grid=desk_grid)
    return cfg, kf.compute_grand_sums(cfg, desk_potential, 1.0, desk_z, m_max=4)


@pytest.fixture(scope="session")
def desk_derivative(desk_ks, desk_potential, desk_perturbation, desk_grid,
                    desk_z, desk_report, desk_v_norm):
    req = kf.DerivativeRequest(
        u=desk_potential, v=desk_perturbation, beta=1.0, z=desk_z,
        grid=desk_grid, ks=desk_ks, report=desk_report, v_norm=desk_v_norm)
    return req, kf.derivative_rho(req)
