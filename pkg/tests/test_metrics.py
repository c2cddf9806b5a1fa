"""Entanglement measures and the six-test table."""

import numpy as np
import pytest

from biphoton.polarization import DensityMatrix, bell_phi
from biphoton.metrics import (
    METRIC_FUNCTIONS,
    PSD_REQUIRED,
    TEST_LIMITS,
    average_linear_correlation,
    bootstrap_metric_sigmas,
    concurrence,
    fidelity_phi_plus,
    hwp_scan,
    hybrid_metrics,
    largest_eigen,
    largest_eigenvalue,
    peres_min_eig,
    run_all_tests,
    table_from_tomography,
    table_from_values,
    tangle,
)
from biphoton.tomography import (
    input_from_state,
    project_physical,
    reconstruct,
    reconstruct_linear,
)


def werner(p):
    m = p * bell_phi(0.0).matrix + (1 - p) * np.eye(4) / 4
    return DensityMatrix(m)


def random_state(rng, rank=4):
    a = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_physical_t(rng):
    t = rng.uniform(-1.0, 1.0, size=(3, 3))
    lam_min = reconstruct_linear(t).min_eigenvalue()
    if lam_min < 0:
        t = t * (0.999 / (1.0 - 4.0 * lam_min))
    return t


WERNER_GRID = [0.0, 0.25, 1.0 / 3.0, 0.5, 0.6, 1.0]


def test_werner_closed_forms():
    for p in WERNER_GRID:
        rho = werner(p)
        assert abs(concurrence(rho) - max(0.0, (3 * p - 1) / 2)) < 1e-10
        assert abs(peres_min_eig(rho) - (1 - 3 * p) / 4) < 1e-10
        assert abs(largest_eigenvalue(rho) - (1 + 3 * p) / 4) < 1e-10
        assert abs(fidelity_phi_plus(rho) - (1 + 3 * p) / 4) < 1e-10
        assert abs(average_linear_correlation(rho) - p) < 1e-10


def test_werner_values_monotone_in_p():
    grid = np.linspace(0, 1, 21)
    values = {name: [fn(werner(p)) for p in grid] for name, fn in METRIC_FUNCTIONS.items()}
    for name in ("fidelity", "largest_eigenvalue", "avg_linear_correlation"):
        assert np.all(np.diff(values[name]) > 0)
    for name in ("concurrence", "tangle"):
        assert np.all(np.diff(values[name]) > -1e-12)
    assert np.all(np.diff(values["peres_min_eigenvalue"]) < 0)


def test_bell_diagonal_example():
    # T = diag(0.61, -0.58, 0.70) in (diag, circ, rect) axis order
    rho = reconstruct_linear(np.diag([0.61, -0.58, 0.70]))
    assert rho.min_eigenvalue() > 0
    assert abs(fidelity_phi_plus(rho) - 0.7225) < 1e-12
    assert abs(largest_eigenvalue(rho) - 0.7225) < 1e-12
    assert abs(average_linear_correlation(rho) - 0.655) < 1e-12
    assert abs(concurrence(rho) - 0.445) < 1e-10
    assert abs(peres_min_eig(rho) - (-0.2225)) < 1e-12
    eigs = np.linalg.eigvalsh(rho.matrix)
    np.testing.assert_allclose(np.sort(eigs), [0.0675, 0.0825, 0.1275, 0.7225], atol=1e-12)


def test_tangle_is_concurrence_squared():
    rng = np.random.default_rng(21)
    for _ in range(50):
        rho = random_state(rng, rank=int(rng.integers(1, 5)))
        assert tangle(rho) == concurrence(rho) ** 2


def test_concurrence_rejects_unphysical_matrix():
    rho = DensityMatrix(np.diag([0.6, 0.6, 0.0, -0.2]).astype(complex), require_psd=False)
    with pytest.raises(ValueError):
        concurrence(rho)


def test_local_unitary_invariance():
    rng = np.random.default_rng(23)
    invariant = (concurrence, tangle, peres_min_eig, largest_eigenvalue)
    for _ in range(20):
        rho = random_state(rng, rank=int(rng.integers(1, 5)))
        ua, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        ub, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        u = np.kron(ua, ub)
        rotated = DensityMatrix(u @ rho.matrix @ u.conj().T)
        for fn in invariant:
            assert abs(fn(rotated) - fn(rho)) < 1e-7


def test_peres_concurrence_equivalence():
    rng = np.random.default_rng(25)
    ranks = [1, 2, 4, 8, 16]  # high-rank draws sit near I/4 and stay separable
    seen_entangled = seen_separable = 0
    for i in range(300):
        rho = random_state(rng, rank=ranks[i % len(ranks)])
        entangled = concurrence(rho) > 1e-10
        npt = peres_min_eig(rho) < -1e-10
        assert entangled == npt
        seen_entangled += entangled
        seen_separable += not entangled
    assert seen_entangled > 50 and seen_separable > 50


# ------------------------------------------------------------- eigen summary


def test_largest_eigen_reports_bell_phase():
    summary = largest_eigen(bell_phi(0.7))
    assert abs(summary.value - 1.0) < 1e-12
    assert not summary.degenerate
    assert abs(summary.phase - 0.7) < 1e-12
    assert abs(np.vdot(summary.state, summary.state) - 1) < 1e-12


def test_largest_eigen_degenerate_and_missing_amplitude():
    mixed = largest_eigen(DensityMatrix(np.eye(4, dtype=complex) / 4))
    assert mixed.degenerate and mixed.phase is None
    hv = DensityMatrix(np.diag([0.9, 0.1, 0.0, 0.0]).astype(complex))
    assert largest_eigen(hv).phase is None  # no VV amplitude in the top state


# ----------------------------------------------------------------- hwp scan


def test_hwp_scan_classical_is_cos_squared():
    rho = reconstruct_linear(np.diag([0.0, 0.0, 1.0]))
    thetas = np.linspace(0, np.pi / 2, 97)
    for theta, c in hwp_scan(rho, thetas):
        assert abs(c - np.cos(4 * theta) ** 2) < 1e-12


def test_hwp_scan_bell_is_flat():
    for theta, c in hwp_scan(bell_phi(0.0), np.linspace(0, np.pi / 4, 33)):
        assert abs(c - 1.0) < 1e-12


def test_hwp_scan_periodic_for_bell_diagonal():
    rng = np.random.default_rng(27)
    diag = rng.uniform(-0.4, 0.4, size=3)
    rho = reconstruct_linear(np.diag(diag))
    thetas = np.linspace(0, np.pi / 4, 50, endpoint=False)
    base = [c for _, c in hwp_scan(rho, thetas)]
    shifted = [c for _, c in hwp_scan(rho, thetas + np.pi / 4)]
    np.testing.assert_allclose(shifted, base, atol=1e-12)


def test_hwp_scan_mean_equals_average_linear_correlation():
    rng = np.random.default_rng(29)
    thetas = np.arange(360) * (np.pi / 4) / 360
    for _ in range(10):
        rho = reconstruct_linear(random_physical_t(rng))
        mean = np.mean([c for _, c in hwp_scan(rho, thetas)])
        assert abs(mean - average_linear_correlation(rho)) < 1e-9


# --------------------------------------------------------------- test table


def test_table_limits_and_pass_logic():
    table = run_all_tests(werner(0.8))
    assert [r.name for r in table.rows] == list(METRIC_FUNCTIONS)
    assert table.all_pass()
    assert table.mean_sigmas_clear() is None
    separable = run_all_tests(werner(0.2))
    assert not separable.all_pass()
    assert separable.row("peres_min_eigenvalue").passes is False
    assert separable.row("avg_linear_correlation").passes is False
    # boundary values do not pass a strict limit
    boundary = table_from_values({name: TEST_LIMITS[name][1] for name in METRIC_FUNCTIONS})
    assert not any(r.passes for r in boundary.rows)


def test_table_sigmas_clear():
    values = {name: fn(werner(0.8)) for name, fn in METRIC_FUNCTIONS.items()}
    sigmas = {name: 0.01 for name in METRIC_FUNCTIONS}
    sigmas["tangle"] = 0.0
    table = table_from_values(values, sigmas)
    fid = table.row("fidelity")
    assert abs(fid.sigmas_clear - abs(fid.value - 0.5) / 0.01) < 1e-12
    assert table.row("tangle").sigmas_clear == float("inf")
    assert table.mean_sigmas_clear() == float("inf")


def test_table_renderings():
    values = {name: fn(werner(0.8)) for name, fn in METRIC_FUNCTIONS.items()}
    table = table_from_values(values, {name: 0.02 for name in METRIC_FUNCTIONS})
    data = table.to_json_dict()
    assert data["all_pass"] is True
    assert len(data["tests"]) == 6
    assert data["tests"][0]["limit"] == "> 0.5"
    csv = table.csv_lines()
    assert csv[0] == "name,value,sigma,limit,passes,sigmas_clear"
    assert len(csv) == 7
    text = table.text_lines()
    assert any("mean certainty" in line for line in text)
    assert any("yes" in line for line in text)


def test_hybrid_metrics_split():
    rho_linear = reconstruct_linear(np.diag([0.7, -0.9, 0.9]) * 1.3)
    assert rho_linear.min_eigenvalue() < -1e-3
    rho_physical = project_physical(rho_linear)
    mixed = hybrid_metrics(rho_linear, rho_physical)
    for name in METRIC_FUNCTIONS:
        source = rho_physical if name in PSD_REQUIRED else rho_linear
        assert mixed[name] == float(METRIC_FUNCTIONS[name](source))


def test_table_from_tomography_uses_hybrid_and_stored_sigmas():
    tomo_input = input_from_state(werner(0.85), counts_per_setting=600)
    result = reconstruct(tomo_input, n_resamples=60, seed=5)
    result.metric_sigmas = bootstrap_metric_sigmas(tomo_input, n_resamples=60, seed=5)
    table = table_from_tomography(result)
    expected = hybrid_metrics(result.rho_linear, result.rho_physical)
    for row in table.rows:
        assert row.value == expected[row.name]
        assert row.sigma == result.metric_sigmas[row.name]
        assert row.sigma > 0


def test_bootstrap_metric_sigmas_deterministic():
    tomo_input = input_from_state(werner(0.85), counts_per_setting=500)
    a = bootstrap_metric_sigmas(tomo_input, n_resamples=80, seed=9)
    b = bootstrap_metric_sigmas(tomo_input, n_resamples=80, seed=9)
    assert a == b
    assert set(a) == set(METRIC_FUNCTIONS)
    assert all(v > 0 for v in a.values())
