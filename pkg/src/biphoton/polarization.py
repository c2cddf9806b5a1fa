"""Polarization vectors, operators, and two-photon density matrices.

Conventions used throughout the package:

* Jones vectors in the H/V basis: H = (1, 0), V = (0, 1),
  D = (H + V)/sqrt(2), A = (H - V)/sqrt(2),
  R = (H - i V)/sqrt(2), L = (H + i V)/sqrt(2).
* Two-photon basis order (HH, HV, VH, VV); the first slot is the trigger
  (XX) photon, the second the analyzed (X) photon.
* Bloch axes: x = diagonal (D maps to +x), y = circular (L maps to +y),
  z = rectilinear (H maps to +z).
* Analysis bases are ordered (co, cross) port pairs:
  rect = (H, V), diag = (D, A), circ = (L, R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASIS_LABELS = ("HH", "HV", "VH", "VV")

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-12
PSD_TOL = -1e-8

_JONES = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "A": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    "R": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0),
    "L": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
}

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)


def make_pol(label: str) -> np.ndarray:
    """Return the unit Jones vector for one of the labels H, V, D, A, R, L."""
    key = label.strip().upper()
    if key not in _JONES:
        raise ValueError(f"unknown polarization label {label!r}; expected one of H,V,D,A,R,L")
    return _JONES[key].copy()


def normalize_pol(vec) -> np.ndarray:
    """Normalize a length-2 complex vector to unit norm."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise ValueError(f"polarization vector must have length 2, got shape {v.shape}")
    n = np.linalg.norm(v)
    if n < 1e-300:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def orthogonal_pol(vec) -> np.ndarray:
    """Unit vector orthogonal to `vec` (same global-phase convention as (-v1*, v0*))."""
    v = normalize_pol(vec)
    return np.array([-np.conj(v[1]), np.conj(v[0])], dtype=complex)


def projector(vec) -> np.ndarray:
    """Rank-1 projector |v><v| onto a (normalized) polarization vector."""
    v = normalize_pol(vec)
    return np.outer(v, np.conj(v))


def tensor(a, b) -> np.ndarray:
    """Kronecker product with the first factor acting on the trigger photon."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def hwp_rotate(vec, theta: float) -> np.ndarray:
    """Rotate the polarization plane by 2*theta (half-wave-plate analysis action).

    A plate at angle theta ahead of a fixed linear analyzer turns the
    analysis axes by 2*theta, so H at theta=pi/8 maps to D and D maps to V.
    Unitary; composing it twice at the same theta is the identity only when
    2*theta is a multiple of pi.
    """
    v = np.asarray(vec, dtype=complex).reshape(2)
    c, s = np.cos(2.0 * theta), np.sin(2.0 * theta)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    return rot @ v


def bloch(vec) -> np.ndarray:
    """Bloch vector (x, y, z) of a pure polarization state."""
    p = projector(vec)
    return np.array([np.trace(p @ sigma).real for sigma in PAULIS])


class DensityMatrix:
    """Validated 4x4 two-photon density matrix in the (HH, HV, VH, VV) basis.

    Hermiticity (max deviation 1e-10) and unit trace (1e-12) are always
    enforced. Positivity (min eigenvalue >= -1e-8) is enforced unless
    `require_psd=False`; linear reconstructions from noisy data may dip
    below zero and are carried in the relaxed mode.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, require_psd: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got shape {m.shape}")
        herm_dev = np.max(np.abs(m - m.conj().T))
        if herm_dev > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian: max |m - m^dagger| = {herm_dev:.3e}")
        trace_dev = abs(m.trace() - 1.0)
        if trace_dev > TRACE_TOL:
            raise ValueError(f"matrix trace deviates from 1 by {trace_dev:.3e}")
        if require_psd:
            min_eig = float(np.linalg.eigvalsh(m).min())
            if min_eig < PSD_TOL:
                raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self):
        return f"DensityMatrix(trace={self.matrix.trace().real:.6f}, purity={self.purity():.6f})"

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def to_json_dict(self) -> dict:
        """Serialize as {"basis": [...], "re": 4x4, "im": 4x4}."""
        return {
            "basis": list(BASIS_LABELS),
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict, require_psd: bool = True) -> "DensityMatrix":
        """Parse the JSON schema, rejecting wrong basis order or non-Hermitian input."""
        try:
            basis = list(data["basis"])
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed density-matrix payload: {exc}") from exc
        if basis != list(BASIS_LABELS):
            raise ValueError(f"unsupported basis order {basis}; expected {list(BASIS_LABELS)}")
        if re.shape != (4, 4) or im.shape != (4, 4):
            raise ValueError("re and im must both be 4x4 arrays")
        return cls(re + 1j * im, require_psd=require_psd)


def bell_phi(phase: float = 0.0) -> DensityMatrix:
    """Pure state (|HH> + e^{i*phase} |VV>)/sqrt(2) as a density matrix.

    The HH-VV coherence element rho[0,3] carries arg = -phase.
    """
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0 / np.sqrt(2.0)
    psi[3] = np.exp(1j * phase) / np.sqrt(2.0)
    return DensityMatrix(np.outer(psi, np.conj(psi)))


def as_matrix(rho) -> np.ndarray:
    """Accept a DensityMatrix or a bare 4x4 array; return the ndarray."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    return m


def partial_transpose(rho, subsystem: str = "x") -> np.ndarray:
    """Transpose one photon's indices; subsystem is 'xx' (trigger) or 'x' (analyzed)."""
    m = as_matrix(rho).reshape(2, 2, 2, 2)
    if subsystem == "x":
        swapped = m.transpose(0, 3, 2, 1)
    elif subsystem == "xx":
        swapped = m.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'xx' or 'x', got {subsystem!r}")
    return swapped.reshape(4, 4)


def partial_trace(rho, keep: str) -> np.ndarray:
    """Reduced 2x2 state of one photon; keep is 'xx' or 'x'."""
    m = as_matrix(rho).reshape(2, 2, 2, 2)
    if keep == "xx":
        return np.trace(m, axis1=1, axis2=3)
    if keep == "x":
        return np.trace(m, axis1=0, axis2=2)
    raise ValueError(f"keep must be 'xx' or 'x', got {keep!r}")


def eigh4(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a 4x4 Hermitian matrix.

    Returns (values, vectors) with values sorted descending and vectors as
    orthonormal columns aligned with the values. Non-Hermitian input is
    rejected with the measured deviation.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    herm_dev = np.max(np.abs(m - m.conj().T))
    if herm_dev > HERMITICITY_TOL:
        raise ValueError(f"eigh4 requires a Hermitian matrix: max |m - m^dagger| = {herm_dev:.3e}")
    values, vectors = np.linalg.eigh(m)
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def correlation_matrix(rho) -> np.ndarray:
    """3x3 correlation matrix T_ij = Tr[rho sigma_i x sigma_j], rows = trigger photon."""
    m = as_matrix(rho)
    t = np.empty((3, 3))
    for i, si in enumerate(PAULIS):
        for j, sj in enumerate(PAULIS):
            t[i, j] = np.trace(m @ tensor(si, sj)).real
    return t


@dataclass(frozen=True)
class AnalysisBasis:
    """Ordered (co, cross) pair of orthogonal analysis ports for the X photon."""

    name: str
    co: str
    cross: str

    def __post_init__(self):
        co_v, cross_v = make_pol(self.co), make_pol(self.cross)
        if abs(np.vdot(co_v, cross_v)) > 1e-12:
            raise ValueError(f"basis {self.name}: ports {self.co},{self.cross} are not orthogonal")

    @property
    def co_vector(self) -> np.ndarray:
        return make_pol(self.co)

    @property
    def cross_vector(self) -> np.ndarray:
        return make_pol(self.cross)

    @property
    def axis(self) -> np.ndarray:
        """Bloch axis of the co port (the cross port is its negative)."""
        return bloch(self.co_vector)


ANALYSIS_BASES = {
    "rect": AnalysisBasis("rect", "H", "V"),
    "diag": AnalysisBasis("diag", "D", "A"),
    "circ": AnalysisBasis("circ", "L", "R"),
}


@dataclass(frozen=True)
class MeasurementSetting:
    """One correlation measurement: trigger projector label + X analysis basis."""

    xx: str
    basis: str

    def __post_init__(self):
        make_pol(self.xx)
        if self.basis not in ANALYSIS_BASES:
            raise ValueError(f"unknown analysis basis {self.basis!r}; expected rect, diag or circ")

    @property
    def xx_projector(self) -> np.ndarray:
        return make_pol(self.xx)

    @property
    def x_basis(self) -> AnalysisBasis:
        return ANALYSIS_BASES[self.basis]

    @property
    def label(self) -> str:
        return f"{self.xx}_{self.basis}"


def joint_probabilities(rho, setting: MeasurementSetting) -> np.ndarray:
    """Born-rule outcome probabilities [(pass, co), (pass, cross), (block, co), (block, cross)].

    "pass" means the trigger photon passes its projector; the X photon always
    exits one of the two basis ports. Probabilities are clipped to [0, 1] and
    sum to 1.
    """
    m = as_matrix(rho)
    pa = projector(setting.xx_projector)
    pa_perp = I2 - pa
    basis = setting.x_basis
    pco = projector(basis.co_vector)
    pcross = projector(basis.cross_vector)
    probs = np.array(
        [
            np.trace(m @ tensor(pa, pco)).real,
            np.trace(m @ tensor(pa, pcross)).real,
            np.trace(m @ tensor(pa_perp, pco)).real,
            np.trace(m @ tensor(pa_perp, pcross)).real,
        ]
    )
    return np.clip(probs, 0.0, 1.0)


def born_correlation(rho, setting: MeasurementSetting) -> float:
    """Exact degree of correlation for a setting: (p_co - p_cross)/(p_co + p_cross)."""
    p = joint_probabilities(rho, setting)
    denom = p[0] + p[1]
    if denom <= 0.0:
        raise ValueError(f"setting {setting.label}: trigger projector passes no light")
    return float((p[0] - p[1]) / denom)
