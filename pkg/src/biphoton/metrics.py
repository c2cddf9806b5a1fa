"""Entanglement measures and the six-test summary table.

All metrics act on a 4x4 two-photon density matrix (DensityMatrix or bare
array) in the (HH, HV, VH, VV) basis. The six tests and their classical
limits:

    fidelity               > 0.5   overlap with (|HH> + |VV>)/sqrt(2)
    largest_eigenvalue     > 0.5   top eigenvalue of rho
    concurrence            > 0     Wootters concurrence
    tangle                 > 0     concurrence squared
    avg_linear_correlation > 0.5   mean correlation over linear analysis angles
    peres_min_eigenvalue   < 0     most negative partial-transpose eigenvalue
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polarization import (
    PAULI_Y,
    as_matrix,
    bell_phi,
    born_correlation,
    correlation_matrix,
    eigh4,
    hwp_rotate,
    make_pol,
    partial_transpose,
    projector,
    tensor,
)

DEGENERACY_GAP = 1e-9
_PSD_TOL = -1e-8

_PHI_PLUS = bell_phi(0.0).matrix
_SIGMA_YY = tensor(PAULI_Y, PAULI_Y)


def fidelity_phi_plus(rho) -> float:
    """Overlap <phi+| rho |phi+> with the phase-zero Bell state."""
    m = as_matrix(rho)
    return float(np.trace(m @ _PHI_PLUS).real)


@dataclass
class EigenSummary:
    """Largest eigenvalue of rho with its eigenvector and coherence phase.

    phase = arg of the VV amplitude relative to the HH amplitude of the top
    eigenvector; None when the top eigenvalue is degenerate (gap < 1e-9) or
    either amplitude vanishes.
    """

    value: float
    state: np.ndarray
    phase: float | None
    degenerate: bool


def largest_eigen(rho) -> EigenSummary:
    values, vectors = eigh4(as_matrix(rho))
    gap = float(values[0] - values[1])
    degenerate = gap < DEGENERACY_GAP
    vec = vectors[:, 0]
    phase = None
    if not degenerate and abs(vec[0]) > 1e-9 and abs(vec[3]) > 1e-9:
        phase = float(np.angle(vec[3] * np.conj(vec[0])))
    return EigenSummary(value=float(values[0]), state=vec, phase=phase, degenerate=degenerate)


def largest_eigenvalue(rho) -> float:
    return largest_eigen(rho).value


def concurrence(rho) -> float:
    """Wootters concurrence: max(0, l1 - l2 - l3 - l4) with l_k the square roots,
    descending, of the eigenvalues of rho (sy x sy) rho* (sy x sy)."""
    m = as_matrix(rho)
    min_eig = float(np.linalg.eigvalsh(m).min())
    if min_eig < _PSD_TOL:
        raise ValueError(f"concurrence requires a PSD matrix; min eigenvalue {min_eig:.3e}")
    tilde = _SIGMA_YY @ m.conj() @ _SIGMA_YY
    evals = np.linalg.eigvals(m @ tilde)
    lam = np.sqrt(np.clip(evals.real, 0.0, None))
    lam[::-1].sort()
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def tangle(rho) -> float:
    """Concurrence squared (exactly, by squaring)."""
    return concurrence(rho) ** 2


def average_linear_correlation(rho) -> float:
    """Mean degree of correlation over all linear analysis angles.

    Both analyzers at angle phi have Bloch axis (sin 2phi, 0, cos 2phi), so
    C(phi) = T_xx sin^2 2phi + T_zz cos^2 2phi + (T_xz + T_zx) sin 2phi cos 2phi;
    averaging over a period leaves (T_xx + T_zz)/2.
    """
    t = correlation_matrix(rho)
    return float(0.5 * (t[0, 0] + t[2, 2]))


def peres_min_eig(rho) -> float:
    """Most negative eigenvalue of the partial transpose (negative iff entangled)."""
    return float(np.linalg.eigvalsh(partial_transpose(rho, "x")).min())


def hwp_scan(rho, thetas) -> list[tuple[float, float]]:
    """Degree of correlation vs analysis-plate angle, both photons through one plate.

    At plate angle theta the rectilinear ports rotate by 2*theta; C is
    computed from rho by the Born rule in that rotated basis.
    """
    m = as_matrix(rho)
    out = []
    h, v = make_pol("H"), make_pol("V")
    for theta in thetas:
        co = projector(hwp_rotate(h, theta))
        cross = projector(hwp_rotate(v, theta))
        p_co = np.trace(m @ tensor(co, co)).real
        p_cross = np.trace(m @ tensor(co, cross)).real
        out.append((float(theta), float((p_co - p_cross) / (p_co + p_cross))))
    return out


METRIC_FUNCTIONS = {
    "fidelity": fidelity_phi_plus,
    "largest_eigenvalue": largest_eigenvalue,
    "concurrence": concurrence,
    "tangle": tangle,
    "avg_linear_correlation": average_linear_correlation,
    "peres_min_eigenvalue": peres_min_eig,
}

# Metrics whose formula assumes a PSD matrix. On reconstructed data these are
# evaluated on the projected matrix; everything else uses the raw linear one.
PSD_REQUIRED = frozenset({"concurrence", "tangle"})


def hybrid_metrics(rho_linear, rho_physical) -> dict[str, float]:
    """All six metrics, each from the matrix it is defined on (see PSD_REQUIRED)."""
    return {
        name: float(fn(rho_physical if name in PSD_REQUIRED else rho_linear))
        for name, fn in METRIC_FUNCTIONS.items()
    }

TEST_LIMITS = {
    "fidelity": (">", 0.5),
    "largest_eigenvalue": (">", 0.5),
    "concurrence": (">", 0.0),
    "tangle": (">", 0.0),
    "avg_linear_correlation": (">", 0.5),
    "peres_min_eigenvalue": ("<", 0.0),
}


@dataclass
class TestRow:
    name: str
    value: float
    sigma: float | None
    relation: str
    limit: float
    passes: bool
    sigmas_clear: float | None

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "sigma": self.sigma,
            "limit": f"{self.relation} {self.limit:g}",
            "passes": self.passes,
            "sigmas_clear": self.sigmas_clear,
        }


@dataclass
class TestTable:
    """Six-row entanglement test report with classical limits."""

    rows: list[TestRow]

    def row(self, name: str) -> TestRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def all_pass(self) -> bool:
        return all(r.passes for r in self.rows)

    def mean_sigmas_clear(self) -> float | None:
        vals = [r.sigmas_clear for r in self.rows if r.sigmas_clear is not None]
        if not vals:
            return None
        return float(np.mean(vals))

    def to_json_dict(self) -> dict:
        return {
            "tests": [r.to_json_dict() for r in self.rows],
            "all_pass": self.all_pass(),
            "mean_sigmas_clear": self.mean_sigmas_clear(),
        }

    def csv_lines(self) -> list[str]:
        lines = ["name,value,sigma,limit,passes,sigmas_clear"]
        for r in self.rows:
            sigma = "" if r.sigma is None else repr(r.sigma)
            clear = "" if r.sigmas_clear is None else repr(r.sigmas_clear)
            lines.append(f"{r.name},{r.value!r},{sigma},{r.relation} {r.limit:g},{r.passes},{clear}")
        return lines

    def text_lines(self) -> list[str]:
        header = f"{'test':<24} {'value':>10} {'sigma':>10} {'limit':>8} {'pass':>5} {'clear':>8}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            sigma = "   -" if r.sigma is None else f"{r.sigma:10.4f}"
            clear = "   -" if r.sigmas_clear is None else f"{r.sigmas_clear:8.1f}"
            lines.append(
                f"{r.name:<24} {r.value:>10.4f} {sigma:>10} {r.relation + format(r.limit, 'g'):>8} "
                f"{'yes' if r.passes else 'NO':>5} {clear:>8}"
            )
        mean = self.mean_sigmas_clear()
        if mean is not None:
            lines.append(f"mean certainty: {mean:.1f} sigma")
        return lines


def table_from_values(values: dict[str, float], sigmas: dict[str, float] | None = None) -> TestTable:
    rows = []
    for name in METRIC_FUNCTIONS:
        value = float(values[name])
        relation, limit = TEST_LIMITS[name]
        passes = value > limit if relation == ">" else value < limit
        sigma = None if sigmas is None else sigmas.get(name)
        clear = None
        if sigma is not None:
            clear = float("inf") if sigma == 0 else abs(value - limit) / sigma
        rows.append(
            TestRow(
                name=name, value=value, sigma=sigma, relation=relation,
                limit=limit, passes=passes, sigmas_clear=clear,
            )
        )
    return TestTable(rows)


def run_all_tests(rho, sigmas: dict[str, float] | None = None) -> TestTable:
    """Evaluate all six tests on one matrix; sigmas (per metric) fill the error column."""
    return table_from_values({name: float(fn(rho)) for name, fn in METRIC_FUNCTIONS.items()}, sigmas)


def table_from_tomography(result, sigmas: dict[str, float] | None = None) -> TestTable:
    """Six tests from a reconstruction, mixing matrices per PSD_REQUIRED.

    sigmas defaults to the result's bootstrap metric sigmas when present.
    """
    if sigmas is None:
        sigmas = result.metric_sigmas
    return table_from_values(hybrid_metrics(result.rho_linear, result.rho_physical), sigmas)


def bootstrap_metric_sigmas(tomo_input, n_resamples: int = 500, seed: int = 0) -> dict[str, float]:
    """Standard deviation of each metric over Poisson resamples of the counts.

    Each resample is reconstructed and projected; metrics follow the same
    PSD_REQUIRED split as table_from_tomography.
    """
    from .tomography import resample_states

    samples: dict[str, list[float]] = {name: [] for name in METRIC_FUNCTIONS}
    for rho_linear, rho_physical in resample_states(tomo_input, n_resamples, seed):
        for name, value in hybrid_metrics(rho_linear, rho_physical).items():
            samples[name].append(value)
    return {name: float(np.std(vals)) for name, vals in samples.items()}
