"""Dense linear algebra over truncated single- and multi-mode Fock spaces.

States are stored either as complex amplitude vectors (pure) or dense
Hermitian matrices.  Mode 0 is the leftmost factor in all tensor (Kronecker)
products, so the flat index of the basis ket ``|n_0, n_1, ...>`` is
``n_0 * d_1 * d_2 * ... + n_1 * d_2 * ... + ...``.

Everything here is immutable after construction and all operations are pure
functions, so objects can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    DegenerateNormalizationError,
    DimensionOverflowError,
    GainOverflowError,
    LeakageError,
    SpaceMismatchError,
)

#: Default bound on the total truncated dimension (dense matrices only).
MAX_TOTAL_DIM = 8192

#: Default tolerance on probability mass in the top two Fock levels of any
#: mode after a state construction or amplification.
LEAKAGE_TOL = 1e-10

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class FockSpace:
    """A truncated multi-mode Fock space.

    ``cutoffs[i]`` is the highest photon number N_max kept in mode ``i``;
    the per-mode dimension is ``cutoffs[i] + 1``.
    """

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.cutoffs) < 1 or any(c < 1 for c in self.cutoffs):
            raise ValueError("every mode needs a cutoff >= 1")

    @property
    def num_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


def make_space(num_modes: int, cutoffs, max_dim: int = MAX_TOTAL_DIM) -> FockSpace:
    """Build a FockSpace, refusing dimensions beyond ``max_dim``."""
    cutoffs = tuple(int(c) for c in cutoffs)
    if num_modes < 1 or len(cutoffs) != num_modes:
        raise ValueError("need one cutoff per mode")
    total = int(np.prod([c + 1 for c in cutoffs]))
    if total > max_dim:
        raise DimensionOverflowError(
            f"total dimension {total} exceeds bound {max_dim}"
        )
    return FockSpace(cutoffs)


@dataclass(frozen=True)
class FockState:
    """Pure state or density matrix on a truncated Fock space.

    ``data`` is a 1-d complex vector for pure states or a 2-d Hermitian
    matrix otherwise.  Pseudo-states (Hermitian but possibly non-positive
    weighted sums) are allowed; physicality is the caller's concern.
    """

    space: FockSpace
    data: np.ndarray

    def __post_init__(self):
        d = self.space.dim
        if self.data.ndim == 1:
            if self.data.shape != (d,):
                raise SpaceMismatchError("vector length does not match space")
        elif self.data.shape != (d, d):
            raise SpaceMismatchError("matrix shape does not match space")
        if self.data.ndim == 2:
            defect = np.abs(self.data - self.data.conj().T).max()
            if defect > HERMITICITY_TOL:
                raise ValueError(f"density matrix not Hermitian (defect {defect:.2e})")

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def trace_or_norm(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def density(self) -> np.ndarray:
        """Dense density-matrix form (outer product for pure states)."""
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def populations(self) -> np.ndarray:
        """Photon-number populations as an array shaped like ``space.dims``."""
        if self.is_pure:
            p = np.abs(self.data) ** 2
        else:
            p = np.diag(self.data).real.copy()
        return p.reshape(self.space.dims)


@dataclass(frozen=True)
class BosonicOperator:
    """Dense complex operator on a truncated Fock space."""

    space: FockSpace
    matrix: np.ndarray
    hermitian_hint: bool = False
    _eig_cache: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        d = self.space.dim
        if self.matrix.shape != (d, d):
            raise SpaceMismatchError("operator shape does not match space")
        if self.hermitian_hint:
            defect = np.abs(self.matrix - self.matrix.conj().T).max()
            if defect > HERMITICITY_TOL:
                raise ValueError(f"hermitian_hint set but defect {defect:.2e}")

    def eig(self):
        """Eigendecomposition (w, V), cached; requires hermitian_hint."""
        if not self.hermitian_hint:
            raise ValueError("eigendecomposition only for Hermitian operators")
        if not self._eig_cache:
            w, v = np.linalg.eigh(self.matrix)
            self._eig_cache.append((w, v))
        return self._eig_cache[0]


@dataclass(frozen=True)
class TwoModeBeamSplitter:
    """Beam splitter coupling two modes; ``transmissivity`` in (0, 1]."""

    transmissivity: float
    mode_a: int
    mode_b: int

    def __post_init__(self):
        if not 0.0 < self.transmissivity <= 1.0:
            raise ValueError("transmissivity must lie in (0, 1]")
        if self.mode_a == self.mode_b:
            raise ValueError("beam splitter needs two distinct modes")


# ---------------------------------------------------------------------------
# operator factories

def _single_mode_annihilation(dim: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def embed(space: FockSpace, mode: int, m: np.ndarray) -> np.ndarray:
    """Embed a single-mode matrix into the full space via Kronecker products."""
    out = np.array([[1.0 + 0j]])
    for i, d in enumerate(space.dims):
        out = np.kron(out, m if i == mode else np.eye(d))
    return out


def annihilation(space: FockSpace, mode: int = 0) -> BosonicOperator:
    m = _single_mode_annihilation(space.dims[mode])
    return BosonicOperator(space, embed(space, mode, m))


def creation(space: FockSpace, mode: int = 0) -> BosonicOperator:
    m = _single_mode_annihilation(space.dims[mode]).conj().T
    return BosonicOperator(space, embed(space, mode, m))


def number_op(space: FockSpace, mode: int = 0) -> BosonicOperator:
    m = np.diag(np.arange(space.dims[mode]).astype(complex))
    return BosonicOperator(space, embed(space, mode, m), hermitian_hint=True)


def gain_op(space: FockSpace, mode: int = 0, g: float = 1.0) -> BosonicOperator:
    """Diagonal noiseless gain/attenuation ``g**n`` on one mode."""
    if g <= 0:
        raise ValueError("gain must be positive")
    n_max = space.cutoffs[mode]
    try:
        top = g ** float(n_max)
    except OverflowError:
        top = math.inf
    if not np.isfinite(top):
        raise GainOverflowError(f"g**{n_max} overflows for g={g}")
    m = np.diag(g ** np.arange(n_max + 1).astype(float)).astype(complex)
    return BosonicOperator(space, embed(space, mode, m), hermitian_hint=True)


def quadrature_x(space: FockSpace, mode: int = 0) -> BosonicOperator:
    a = _single_mode_annihilation(space.dims[mode])
    m = (a + a.conj().T) / np.sqrt(2.0)
    return BosonicOperator(space, embed(space, mode, m), hermitian_hint=True)


def quadrature_p(space: FockSpace, mode: int = 0) -> BosonicOperator:
    a = _single_mode_annihilation(space.dims[mode])
    m = (a - a.conj().T) / (1j * np.sqrt(2.0))
    return BosonicOperator(space, embed(space, mode, m), hermitian_hint=True)


def beam_splitter_unitary(space: FockSpace, bs: TwoModeBeamSplitter) -> BosonicOperator:
    """exp(theta (b† a - a† b)) with theta = arccos(sqrt(transmissivity)).

    Mode ``mode_a`` plays the system role and ``mode_b`` the ancilla, so a
    single photon in mode_a acquires amplitude -sqrt(1-T) on mode_b.
    """
    theta = math.acos(math.sqrt(bs.transmissivity))
    a = annihilation(space, bs.mode_a).matrix
    b = annihilation(space, bs.mode_b).matrix
    gen = theta * (a.conj().T @ b - b.conj().T @ a)
    return BosonicOperator(space, expm(gen))


# ---------------------------------------------------------------------------
# leakage accounting

def top_level_mass(state: FockState, levels: int = 2) -> float:
    """Largest per-mode probability mass in the top ``levels`` Fock levels."""
    p = state.populations()
    norm = p.sum()
    if norm <= 0:
        return 0.0
    worst = 0.0
    for mode, d in enumerate(state.space.dims):
        idx = [slice(None)] * state.space.num_modes
        idx[mode] = slice(max(d - levels, 0), d)
        worst = max(worst, float(p[tuple(idx)].sum()) / norm)
    return worst


def check_leakage(state: FockState, tol: float = LEAKAGE_TOL, what: str = "state") -> FockState:
    mass = top_level_mass(state)
    if mass > tol:
        raise LeakageError(
            f"{what}: {mass:.3e} of the probability mass sits in the top two "
            f"Fock levels (tolerance {tol:.1e}); increase the cutoff"
        )
    return state


# ---------------------------------------------------------------------------
# state factories

def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    if alpha == 0:
        c = np.zeros(dim, dtype=complex)
        c[0] = 1.0
        return c
    log_mag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - log_fact / 2
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(log_mag) * phase


def _normalized(space: FockSpace, vec: np.ndarray, tol: float, what: str) -> FockState:
    nrm = np.linalg.norm(vec)
    if nrm < 1e-12:
        raise DegenerateNormalizationError(f"{what}: normalisation is numerically zero")
    state = FockState(space, vec / nrm)
    return check_leakage(state, tol, what)


def coherent_state(space: FockSpace, mode_amplitudes, leakage_tol: float = LEAKAGE_TOL) -> FockState:
    """Product of truncated coherent states, one amplitude per mode."""
    amps = list(mode_amplitudes)
    if len(amps) != space.num_modes:
        raise ValueError("need one amplitude per mode")
    vec = np.array([1.0 + 0j])
    for alpha, d in zip(amps, space.dims):
        vec = np.kron(vec, _coherent_amplitudes(complex(alpha), d))
    return _normalized(space, vec, leakage_tol, "coherent state")


def squeezed_vacuum(space: FockSpace, r: float, mode: int = 0,
                    leakage_tol: float = LEAKAGE_TOL) -> FockState:
    """Single-mode squeezed vacuum with squeezing parameter r >= 0."""
    t = math.tanh(r)
    d = space.dims[mode]
    c = np.zeros(d, dtype=complex)
    for n in range(0, (d - 1) // 2 + 1):
        log_c = n * math.log(t / 2) + 0.5 * math.lgamma(2 * n + 1) - math.lgamma(n + 1) if t > 0 else (0.0 if n == 0 else -np.inf)
        c[2 * n] = math.exp(log_c) if np.isfinite(log_c) else 0.0
    vec = np.array([1.0 + 0j])
    for i, dd in enumerate(space.dims):
        if i == mode:
            vec = np.kron(vec, c)
        else:
            e = np.zeros(dd, dtype=complex)
            e[0] = 1.0
            vec = np.kron(vec, e)
    return _normalized(space, vec, leakage_tol, "squeezed vacuum")


def cat_state(space: FockSpace, alpha: complex, phi: float = 0.0,
              mode: int = 0, leakage_tol: float = LEAKAGE_TOL) -> FockState:
    """Two-component cat state (|alpha> + e^{i phi} |-alpha>), normalised."""
    norm_const = 2.0 * (1.0 + math.cos(phi) * math.exp(-2.0 * abs(alpha) ** 2))
    if norm_const < 1e-24:
        raise DegenerateNormalizationError("cat state normalisation is singular")
    d = space.dims[mode]
    c = _coherent_amplitudes(complex(alpha), d) + np.exp(1j * phi) * _coherent_amplitudes(-complex(alpha), d)
    vec = np.array([1.0 + 0j])
    for i, dd in enumerate(space.dims):
        if i == mode:
            vec = np.kron(vec, c)
        else:
            e = np.zeros(dd, dtype=complex)
            e[0] = 1.0
            vec = np.kron(vec, e)
    return _normalized(space, vec, leakage_tol, "cat state")


def two_mode_squeezed_vacuum(space: FockSpace, r: float,
                             leakage_tol: float = LEAKAGE_TOL) -> FockState:
    """Two-mode squeezed vacuum: amplitudes tanh(r)^n / cosh(r) on |n,n>."""
    if space.num_modes != 2:
        raise SpaceMismatchError("TMSV needs a two-mode space")
    d1, d2 = space.dims
    t = math.tanh(r)
    coeff = np.zeros((d1, d2), dtype=complex)
    for n in range(min(d1, d2)):
        coeff[n, n] = t ** n
    return _normalized(space, coeff.reshape(-1), leakage_tol, "two-mode squeezed vacuum")


def entangled_coherent_state(space: FockSpace, alpha: complex, beta: complex,
                             sign: int = 1, leakage_tol: float = LEAKAGE_TOL) -> FockState:
    """(|alpha,beta> + sign |-alpha,-beta>), normalised."""
    if space.num_modes != 2:
        raise SpaceMismatchError("entangled coherent state needs two modes")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    norm_const = 2.0 * (1.0 + sign * math.exp(-2.0 * (abs(alpha) ** 2 + abs(beta) ** 2)))
    if norm_const < 1e-24:
        raise DegenerateNormalizationError("entangled coherent normalisation is singular")
    d1, d2 = space.dims
    v = np.kron(_coherent_amplitudes(complex(alpha), d1), _coherent_amplitudes(complex(beta), d2))
    v = v + sign * np.kron(_coherent_amplitudes(-complex(alpha), d1), _coherent_amplitudes(-complex(beta), d2))
    return _normalized(space, v, leakage_tol, "entangled coherent state")


def fock_basis_state(space: FockSpace, occupations) -> FockState:
    """Basis ket |n_0, n_1, ...>."""
    occ = tuple(int(n) for n in occupations)
    if len(occ) != space.num_modes:
        raise ValueError("need one occupation per mode")
    for n, c in zip(occ, space.cutoffs):
        if not 0 <= n <= c:
            raise ValueError("occupation exceeds cutoff")
    vec = np.zeros(space.dim, dtype=complex)
    vec[np.ravel_multi_index(occ, space.dims)] = 1.0
    return FockState(space, vec)


# ---------------------------------------------------------------------------
# functionals

def _require_same_space(a: FockSpace, b: FockSpace):
    if a != b:
        raise SpaceMismatchError("operands live on different spaces")


def expectation(state: FockState, op: BosonicOperator) -> complex:
    _require_same_space(state.space, op.space)
    if state.is_pure:
        return complex(np.vdot(state.data, op.matrix @ state.data))
    return complex(np.trace(op.matrix @ state.data))


def fidelity_with_pure(state: FockState, target: FockState) -> float:
    """<psi| rho |psi> for a pure, normalised target."""
    _require_same_space(state.space, target.space)
    if not target.is_pure:
        raise ValueError("target must be pure")
    psi = target.data
    if state.is_pure:
        return float(abs(np.vdot(psi, state.data)) ** 2)
    return float(np.real(np.vdot(psi, state.data @ psi)))


def tensor(state_a: FockState, state_b: FockState) -> FockState:
    space = FockSpace(state_a.space.cutoffs + state_b.space.cutoffs)
    if state_a.is_pure and state_b.is_pure:
        return FockState(space, np.kron(state_a.data, state_b.data))
    return FockState(space, np.kron(state_a.density(), state_b.density()))


def partial_trace(state: FockState, keep_modes) -> FockState:
    """Trace out every mode not listed in ``keep_modes`` (order preserved)."""
    keep = sorted(set(int(m) for m in keep_modes))
    space = state.space
    dims = space.dims
    m = space.num_modes
    rho = state.density().reshape(dims + dims)
    # trace axes from the back so earlier positions stay valid
    traced = [i for i in range(m) if i not in keep]
    current = list(range(m))
    for mode in reversed(traced):
        pos = current.index(mode)
        rho = np.trace(rho, axis1=pos, axis2=pos + len(current))
        current.pop(pos)
    new_space = FockSpace(tuple(space.cutoffs[i] for i in keep))
    d = new_space.dim
    return FockState(new_space, rho.reshape(d, d))


def covariance_matrix(state: FockState) -> np.ndarray:
    """4x4 covariance matrix sigma_kl = <{r_k, r_l}> - 2 <r_k><r_l>.

    Quadratures are x = (a + a†)/sqrt(2), p = (a - a†)/(i sqrt(2)); with this
    convention the vacuum gives the identity and a two-mode squeezed vacuum
    gives cosh(2r) / sinh(2r) entries.
    """
    if state.space.num_modes != 2:
        raise SpaceMismatchError("covariance matrix implemented for two modes")
    quads = [quadrature_x(state.space, 0), quadrature_p(state.space, 0),
             quadrature_x(state.space, 1), quadrature_p(state.space, 1)]
    means = [expectation(state, q).real for q in quads]
    sigma = np.zeros((4, 4))
    for k in range(4):
        for l in range(k, 4):
            anti = quads[k].matrix @ quads[l].matrix + quads[l].matrix @ quads[k].matrix
            val = expectation(state, BosonicOperator(state.space, anti)).real
            sigma[k, l] = sigma[l, k] = val - 2.0 * means[k] * means[l]
    return sigma


def trace_distance(a: FockState, b: FockState) -> float:
    """Half the trace norm of the difference of the density matrices."""
    _require_same_space(a.space, b.space)
    diff = a.density() - b.density()
    vals = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return 0.5 * float(np.abs(vals).sum())
