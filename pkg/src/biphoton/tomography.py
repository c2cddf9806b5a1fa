"""Density-matrix reconstruction from twelve degree-of-correlation measurements.

The canonical measurement set crosses four trigger projectors (H, V, D, L)
with three analysis bases (rect, diag, circ). For a state with unpolarized
marginals, C(a, basis) = bloch(a) . T . axis(basis), so the correlation
matrix T assembles directly:

* x row from the D projector, y row from the L projector (L maps to +y),
* z row from the half-differences (C_H - C_V)/2 per basis,
* consistency residual = max over bases of |C_H + C_V| (zero for exact data).

The linear reconstruction rho = (I + sum_ij T_ij sigma_i x sigma_j)/4 has
unit trace and unpolarized marginals by construction but may have negative
eigenvalues on noisy data; project_physical moves it to the closest (in
Frobenius norm) positive-semidefinite unit-trace matrix by projecting the
eigenvalue vector onto the probability simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .polarization import (
    BASIS_LABELS,
    DensityMatrix,
    I4,
    MeasurementSetting,
    PAULIS,
    as_matrix,
    born_correlation,
    eigh4,
    tensor,
)

_XX_ORDER = ("H", "V", "D", "L")
_BASIS_ORDER = ("rect", "diag", "circ")
_AXIS_COLUMN = {"diag": 0, "circ": 1, "rect": 2}  # Bloch components (x, y, z)


def measurement_set() -> list[MeasurementSetting]:
    """The canonical twelve settings, ordered (H,V,D,L) x (rect,diag,circ)."""
    return [MeasurementSetting(xx, basis) for xx in _XX_ORDER for basis in _BASIS_ORDER]


@dataclass(frozen=True)
class TomographyEntry:
    """One measured correlation; counts are optional but enable bootstrapping."""

    xx: str
    basis: str
    c: float
    n_co: int | None = None
    n_cross: int | None = None

    def __post_init__(self):
        MeasurementSetting(self.xx, self.basis)  # validates labels
        if not -1.0 <= self.c <= 1.0:
            raise ValueError(f"C must be in [-1, 1], got {self.c}")
        for name, n in (("n_co", self.n_co), ("n_cross", self.n_cross)):
            if n is not None and n < 0:
                raise ValueError(f"{name} must be >= 0, got {n}")

    def to_json_dict(self) -> dict:
        out = {"xx": self.xx, "basis": self.basis, "C": self.c}
        if self.n_co is not None:
            out["n_co"] = int(self.n_co)
        if self.n_cross is not None:
            out["n_cross"] = int(self.n_cross)
        return out


@dataclass
class TomographyInput:
    """The twelve-entry measurement record."""

    entries: list[TomographyEntry]

    def __post_init__(self):
        seen = {}
        for e in self.entries:
            key = (e.xx, e.basis)
            if key in seen:
                raise ValueError(f"duplicate entry for setting {e.xx}_{e.basis}")
            seen[key] = e
        missing = [f"{xx}_{b}" for xx in _XX_ORDER for b in _BASIS_ORDER if (xx, b) not in seen]
        if missing:
            raise ValueError(f"missing settings: {', '.join(missing)}")
        self._by_key = seen

    def entry(self, xx: str, basis: str) -> TomographyEntry:
        return self._by_key[(xx, basis)]

    def c(self, xx: str, basis: str) -> float:
        return self._by_key[(xx, basis)].c

    def to_json_dict(self) -> dict:
        return {"entries": [e.to_json_dict() for e in self.entries]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "TomographyInput":
        try:
            raw = data["entries"]
        except (KeyError, TypeError) as exc:
            raise DataError(f"tomography input must have an 'entries' list: {exc}") from exc
        entries = []
        for i, item in enumerate(raw):
            try:
                entries.append(
                    TomographyEntry(
                        xx=str(item["xx"]),
                        basis=str(item["basis"]),
                        c=float(item["C"]),
                        n_co=None if item.get("n_co") is None else int(item["n_co"]),
                        n_cross=None if item.get("n_cross") is None else int(item["n_cross"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"bad tomography entry #{i}: {exc}") from exc
        try:
            return cls(entries)
        except ValueError as exc:
            raise DataError(str(exc)) from exc


def input_from_state(rho, counts_per_setting: int | None = None) -> TomographyInput:
    """Exact Born-rule input for a state; optional synthetic counts at fixed depth."""
    entries = []
    for setting in measurement_set():
        c = born_correlation(rho, setting)
        if counts_per_setting is None:
            entries.append(TomographyEntry(setting.xx, setting.basis, c))
        else:
            n_co = int(round(counts_per_setting * (1.0 + c) / 2.0))
            n_cross = counts_per_setting - n_co
            entries.append(TomographyEntry(setting.xx, setting.basis, c, n_co, n_cross))
    return TomographyInput(entries)


def assemble_t(tomo_input: TomographyInput) -> tuple[np.ndarray, float]:
    """Build the 3x3 correlation matrix T and the consistency residual."""
    t = np.zeros((3, 3))
    for basis, col in _AXIS_COLUMN.items():
        t[0, col] = tomo_input.c("D", basis)
        t[1, col] = tomo_input.c("L", basis)
        t[2, col] = 0.5 * (tomo_input.c("H", basis) - tomo_input.c("V", basis))
    residual = max(
        abs(tomo_input.c("H", basis) + tomo_input.c("V", basis)) for basis in _BASIS_ORDER
    )
    return t, float(residual)


def reconstruct_linear(t: np.ndarray) -> DensityMatrix:
    """rho = (I + sum_ij T_ij sigma_i x sigma_j)/4; Hermitian, unit trace, maybe non-PSD."""
    t = np.asarray(t, dtype=float)
    if t.shape != (3, 3):
        raise ValueError(f"T must be 3x3, got shape {t.shape}")
    rho = I4.copy()
    for i, si in enumerate(PAULIS):
        for j, sj in enumerate(PAULIS):
            rho += t[i, j] * tensor(si, sj)
    return DensityMatrix(rho / 4.0, require_psd=False)


def project_physical(rho) -> DensityMatrix:
    """Closest PSD unit-trace matrix in Frobenius norm (eigenvalue simplex projection).

    Eigenvectors are kept; eigenvalues are shifted by a common water level and
    clipped at zero so they remain a probability vector. Idempotent, and the
    identity on matrices that are already PSD.
    """
    values, vectors = eigh4(as_matrix(rho))
    cumsum = np.cumsum(values)
    k_star = 1
    for k in range(1, 5):
        t_k = (cumsum[k - 1] - 1.0) / k
        if values[k - 1] - t_k > 0:
            k_star = k
    tau = (cumsum[k_star - 1] - 1.0) / k_star
    clipped = np.maximum(values - tau, 0.0)
    clipped /= clipped.sum()
    out = (vectors * clipped) @ vectors.conj().T
    out = 0.5 * (out + out.conj().T)  # scrub float asymmetry from the similarity products
    return DensityMatrix(out)


@dataclass
class BootstrapResult:
    element_sigmas: np.ndarray
    n_resamples: int
    seed: int


def resample_states(tomo_input: TomographyInput, n_resamples: int, seed: int):
    """Yield (rho_linear, rho_physical) pairs from Poisson-resampled counts.

    Each resample redraws every setting's zero-delay counts from Poisson
    distributions centered on the recorded counts, recomputes the twelve C
    values, and reruns the assembly, reconstruction and projection chain.
    """
    if n_resamples < 1:
        raise ValueError(f"n_resamples must be >= 1, got {n_resamples}")
    for e in measurement_set():
        entry = tomo_input.entry(e.xx, e.basis)
        if entry.n_co is None or entry.n_cross is None:
            raise DataError(
                f"bootstrap requires n_co and n_cross counts; setting {entry.xx}_{entry.basis} has none"
            )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    bases = [(tomo_input.entry(s.xx, s.basis), s) for s in measurement_set()]
    for _ in range(n_resamples):
        entries = []
        for entry, setting in bases:
            n_co = rng.poisson(entry.n_co)
            n_cross = rng.poisson(entry.n_cross)
            total = n_co + n_cross
            c = 0.0 if total == 0 else (n_co - n_cross) / total
            entries.append(TomographyEntry(setting.xx, setting.basis, float(c), int(n_co), int(n_cross)))
        resampled = TomographyInput(entries)
        t, _ = assemble_t(resampled)
        rho_linear = reconstruct_linear(t)
        yield rho_linear, project_physical(rho_linear)


def bootstrap_errors(tomo_input: TomographyInput, n_resamples: int = 500, seed: int = 0) -> BootstrapResult:
    """Per-element standard deviations of the projected matrix over resamples.

    element_sigmas[i][j] = sqrt(Var(Re rho_ij) + Var(Im rho_ij)).
    """
    stack = np.stack([phys.matrix for _, phys in resample_states(tomo_input, n_resamples, seed)])
    sigmas = np.sqrt(stack.real.var(axis=0) + stack.imag.var(axis=0))
    return BootstrapResult(element_sigmas=sigmas, n_resamples=n_resamples, seed=seed)


@dataclass
class TomographyResult:
    """Reconstruction bundle: both matrices, errors, and the consistency residual."""

    t_matrix: np.ndarray
    consistency_residual: float
    rho_linear: DensityMatrix
    rho_physical: DensityMatrix
    element_sigmas: np.ndarray | None = None
    metric_sigmas: dict[str, float] | None = None

    def to_json_dict(self) -> dict:
        out = {
            "t_matrix": self.t_matrix.tolist(),
            "consistency_residual": self.consistency_residual,
            "rho_linear": self.rho_linear.to_json_dict(),
            "rho_physical": self.rho_physical.to_json_dict(),
        }
        if self.element_sigmas is not None:
            out["element_sigmas"] = np.asarray(self.element_sigmas).tolist()
        if self.metric_sigmas is not None:
            out["metric_sigmas"] = {k: float(v) for k, v in self.metric_sigmas.items()}
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "TomographyResult":
        try:
            t = np.asarray(data["t_matrix"], dtype=float)
            residual = float(data["consistency_residual"])
            rho_linear = DensityMatrix.from_json_dict(data["rho_linear"], require_psd=False)
            rho_physical = DensityMatrix.from_json_dict(data["rho_physical"])
            sigmas = data.get("element_sigmas")
            metric_sigmas = data.get("metric_sigmas")
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed tomography result: {exc}") from exc
        return cls(
            t_matrix=t,
            consistency_residual=residual,
            rho_linear=rho_linear,
            rho_physical=rho_physical,
            element_sigmas=None if sigmas is None else np.asarray(sigmas, dtype=float),
            metric_sigmas=None if metric_sigmas is None else {k: float(v) for k, v in metric_sigmas.items()},
        )


def reconstruct(tomo_input: TomographyInput, n_resamples: int | None = None, seed: int = 0) -> TomographyResult:
    """Full chain: assemble T, linear reconstruction, projection, optional bootstrap."""
    t, residual = assemble_t(tomo_input)
    rho_linear = reconstruct_linear(t)
    rho_physical = project_physical(rho_linear)
    sigmas = None
    if n_resamples:
        sigmas = bootstrap_errors(tomo_input, n_resamples=n_resamples, seed=seed).element_sigmas
    return TomographyResult(
        t_matrix=t,
        consistency_residual=residual,
        rho_linear=rho_linear,
        rho_physical=rho_physical,
        element_sigmas=sigmas,
    )
