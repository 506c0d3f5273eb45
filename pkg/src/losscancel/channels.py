"""Photon-loss and dephasing channels, their exact inverses, and the
quasi-probability decomposition of the inverse over physical channels.

The loss channel acts mode-by-mode; all heavy lifting happens on the
per-mode tensor factors, so multi-mode states never require a full
superoperator.  The exact inverse is the truncated operator sum

    sum_j (-gamma)^j / j!  a^j g0^n  rho  g0^n a†^j,   g0 = 1/sqrt(1-gamma)

with terms dropped once their largest element falls below 1e-14.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDecompositionError, GainOverflowError, LeakageError
from .fock import (
    LEAKAGE_TOL,
    BosonicOperator,
    FockSpace,
    FockState,
    check_leakage,
    embed,
    _single_mode_annihilation,
)

TERM_CUT = 1e-14

#: largest per-mode subtraction order kept in a decomposition by default
DEFAULT_J_LIMIT = 8

#: guard for the inverse-dephasing exponential e^{gamma_D n^2 / 2}
DEPHASING_EXPONENT_BOUND = 500.0


@dataclass(frozen=True)
class LossParams:
    """Per-mode loss parameters gamma_i in [0, 1)."""

    gamma: tuple[float, ...]

    def __post_init__(self):
        if any(not 0.0 <= g < 1.0 for g in self.gamma):
            raise ValueError("loss parameters must lie in [0, 1)")

    @property
    def g0(self) -> tuple[float, ...]:
        return tuple(1.0 / math.sqrt(1.0 - g) for g in self.gamma)

    @classmethod
    def uniform(cls, gamma: float, num_modes: int) -> "LossParams":
        return cls((float(gamma),) * num_modes)


@dataclass(frozen=True)
class KrausSet:
    operators: list
    completeness_defect: float


@dataclass(frozen=True)
class DephasingParams:
    gamma_d: float

    def __post_init__(self):
        if self.gamma_d < 0:
            raise ValueError("dephasing strength must be >= 0")


# ---------------------------------------------------------------------------
# single-mode building blocks

def _loss_kraus_matrix(dim: int, gamma: float, j: int) -> np.ndarray:
    """K_j(gamma) = sqrt(gamma^j / j!) (1-gamma)^{n/2} a^j on one mode."""
    if j < 0:
        raise ValueError("subtraction order must be >= 0")
    a = _single_mode_annihilation(dim)
    aj = np.linalg.matrix_power(a, j) if j else np.eye(dim, dtype=complex)
    atten = np.diag((1.0 - gamma) ** (np.arange(dim) / 2.0)).astype(complex)
    if j == 0:
        pref = 1.0
    elif gamma == 0.0:
        pref = 0.0
    else:
        # log form: gamma**j / j! overflows the factorial for large j
        pref = math.exp(0.5 * (j * math.log(gamma) - math.lgamma(j + 1)))
    return pref * atten @ aj


def loss_kraus(space: FockSpace, mode: int, gamma: float, j: int) -> BosonicOperator:
    m = _loss_kraus_matrix(space.dims[mode], gamma, j)
    return BosonicOperator(space, embed(space, mode, m))


def kraus_set(space: FockSpace, mode: int, gamma: float, j_max: int | None = None) -> KrausSet:
    """All Kraus operators of the single-mode loss channel up to ``j_max``."""
    if j_max is None:
        j_max = space.cutoffs[mode]
    ops = [loss_kraus(space, mode, gamma, j) for j in range(j_max + 1)]
    acc = sum(op.matrix.conj().T @ op.matrix for op in ops)
    defect = float(np.abs(acc - np.eye(space.dim)).max())
    return KrausSet(ops, defect)


def _apply_single_mode_kraus(rho: np.ndarray, dims, mode: int, kraus_list) -> np.ndarray:
    """sum_k K_k rho K_k† where each K_k acts on one tensor factor."""
    m = len(dims)
    t = rho.reshape(dims + dims)
    out = np.zeros_like(t)
    for k in kraus_list:
        left = np.tensordot(k, t, axes=([1], [mode]))
        left = np.moveaxis(left, 0, mode)
        right = np.tensordot(left, k.conj(), axes=([m + mode], [1]))
        out += np.moveaxis(right, -1, m + mode)
    d = int(np.prod(dims))
    return out.reshape(d, d)


def _apply_mode_operator_pure(vec: np.ndarray, dims, mode: int, m: np.ndarray) -> np.ndarray:
    t = vec.reshape(dims)
    out = np.tensordot(m, t, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode).reshape(-1)


def apply_loss(state: FockState, params: LossParams,
               hermitize: bool = True) -> FockState:
    """CPTP loss channel, applied mode by mode."""
    space = state.space
    if len(params.gamma) != space.num_modes:
        raise ValueError("need one loss parameter per mode")
    rho = state.density()
    for mode, gamma in enumerate(params.gamma):
        if gamma == 0.0:
            continue
        dim = space.dims[mode]
        kraus = [_loss_kraus_matrix(dim, gamma, j) for j in range(dim)]
        rho = _apply_single_mode_kraus(rho, space.dims, mode, kraus)
    if hermitize:
        rho = (rho + rho.conj().T) / 2
    return FockState(space, rho)


def _gain_diag(dim: int, g: float) -> np.ndarray:
    try:
        top = g ** float(dim - 1)
    except OverflowError:
        top = math.inf
    if not np.isfinite(top):
        raise GainOverflowError(f"g**{dim - 1} overflows for g={g}")
    return g ** np.arange(dim).astype(float)


def inverse_loss_exact(state: FockState, params: LossParams,
                       leakage_tol: float = LEAKAGE_TOL) -> FockState:
    """Exact (non-CP) inverse of the loss channel; returns a pseudo-state.

    Hermitian and trace-1 up to the truncation tail.  Fails with a
    LeakageError when the amplified intermediate no longer fits the cutoff.
    """
    space = state.space
    if len(params.gamma) != space.num_modes:
        raise ValueError("need one loss parameter per mode")
    rho = state.density()
    for mode, gamma in enumerate(params.gamma):
        if gamma == 0.0:
            continue
        dim = space.dims[mode]
        g0 = 1.0 / math.sqrt(1.0 - gamma)
        gdiag = np.diag(_gain_diag(dim, g0)).astype(complex)
        amp = _apply_single_mode_kraus(rho, space.dims, mode, [gdiag])
        # leakage check on the amplified (pre-subtraction) intermediate
        check_leakage(FockState(space, (amp + amp.conj().T) / 2), leakage_tol,
                      "amplified intermediate of the inverse loss map")
        a = _single_mode_annihilation(dim)
        acc = np.zeros_like(rho)
        term_op = np.eye(dim, dtype=complex)
        for j in range(dim):
            coeff = (-gamma) ** j / math.factorial(j)
            term = coeff * _apply_single_mode_kraus(amp, space.dims, mode, [term_op])
            acc += term
            if np.abs(term).max() < TERM_CUT and j > 0:
                break
            term_op = a @ term_op
        rho = acc
    rho = (rho + rho.conj().T) / 2
    return FockState(space, rho)


# ---------------------------------------------------------------------------
# quasi-probability decomposition of the inverse

@dataclass(frozen=True)
class InverseDecomposition:
    """Weights, channel outputs and bookkeeping for one input state."""

    space: FockSpace
    params: LossParams
    weights: dict          # pattern -> omega_j (real, possibly negative)
    norms: dict            # pattern -> N_j >= 0
    channels: dict         # pattern -> FockState, only where N_j > 0
    g0: tuple[float, ...]
    herald_probs: dict = field(default_factory=dict)

    def one_norm(self) -> float:
        return float(sum(abs(w) for w in self.weights.values()))

    def total_weight(self) -> float:
        return float(sum(self.weights.values()))

    def patterns(self):
        return sorted(self.weights)


def _patterns(num_modes: int, j_limit) -> list:
    if isinstance(j_limit, int):
        j_limit = (j_limit,) * num_modes
    ranges = [range(l + 1) for l in j_limit]
    return [tuple(p) for p in itertools.product(*ranges)]


def _subtract_pattern_pure(vec: np.ndarray, dims, pattern) -> np.ndarray:
    for mode, j in enumerate(pattern):
        if j == 0:
            continue
        a = _single_mode_annihilation(dims[mode])
        aj = np.linalg.matrix_power(a, j)
        vec = _apply_mode_operator_pure(vec, dims, mode, aj)
    return vec


def decompose_inverse(state: FockState, params: LossParams,
                      j_limit=DEFAULT_J_LIMIT,
                      gain: tuple[float, ...] | None = None,
                      leakage_tol: float = LEAKAGE_TOL) -> InverseDecomposition:
    """Quasi-probability decomposition of the inverse loss map for ``state``.

    ``gain`` defaults to g0 per mode; patterns run over per-mode subtraction
    orders up to ``j_limit`` (int or per-mode tuple).  Patterns whose
    normalisation vanishes get weight exactly zero and no channel output.
    """
    space = state.space
    if len(params.gamma) != space.num_modes:
        raise ValueError("need one loss parameter per mode")
    g = params.g0 if gain is None else tuple(gain)
    dims = space.dims

    if state.is_pure:
        amp_vec = state.data
        for mode, gi in enumerate(g):
            amp_vec = _apply_mode_operator_pure(
                amp_vec, dims, mode, np.diag(_gain_diag(dims[mode], gi)).astype(complex))
        amp_norm = float(np.vdot(amp_vec, amp_vec).real)
        check_leakage(FockState(space, amp_vec / math.sqrt(amp_norm)), leakage_tol,
                      "amplified state")
        amp = None
    else:
        amp = state.density()
        for mode, gi in enumerate(g):
            gd = np.diag(_gain_diag(dims[mode], gi)).astype(complex)
            amp = _apply_single_mode_kraus(amp, dims, mode, [gd])
        amp_norm = float(np.trace(amp).real)
        check_leakage(FockState(space, (amp + amp.conj().T) / 2 / amp_norm),
                      leakage_tol, "amplified state")

    weights, norms, channels = {}, {}, {}
    for pattern in _patterns(space.num_modes, j_limit):
        if state.is_pure:
            v = _subtract_pattern_pure(amp_vec, dims, pattern)
            nj = float(np.vdot(v, v).real)
        else:
            sub = amp
            for mode, j in enumerate(pattern):
                if j:
                    a = _single_mode_annihilation(dims[mode])
                    aj = np.linalg.matrix_power(a, j)
                    sub = _apply_single_mode_kraus(sub, dims, mode, [aj])
            nj = float(np.trace(sub).real)
        norms[pattern] = max(nj, 0.0)
        if nj <= 0.0 or nj < 1e-300:
            weights[pattern] = 0.0
            continue
        coeff = 1.0
        for gamma, j in zip(params.gamma, pattern):
            coeff *= (-gamma) ** j / math.factorial(j)
        weights[pattern] = coeff * nj
        if state.is_pure:
            channels[pattern] = FockState(space, v / math.sqrt(nj))
        else:
            sub = (sub + sub.conj().T) / 2
            channels[pattern] = FockState(space, sub / nj)

    if not channels:
        raise EmptyDecompositionError("every channel normalisation vanished")
    return InverseDecomposition(space, params, weights, norms, channels, tuple(g))


# ---------------------------------------------------------------------------
# closed-form weights for the two-mode squeezed vacuum

def tmsv_convergence_ratio(r0: float, gamma1: float, gamma2: float) -> float:
    return math.tanh(r0) / math.sqrt((1.0 - gamma1) * (1.0 - gamma2))


class TmsvWeightWarning(UserWarning):
    """The TMSV weight series is close to its divergence boundary."""


def tmsv_omega(r0: float, gamma1: float, gamma2: float, j1: int, j2: int,
               tol: float = 1e-14) -> float:
    """Closed-form quasi-probability weight for a two-mode squeezed vacuum.

    Series over n of C(n,j1) C(n,j2) q^n with q = tanh^2(r0) /
    ((1-gamma1)(1-gamma2)); diverges for q >= 1.  A warning is issued once
    the ratio sqrt(q) exceeds 0.9, the empirically safe operating boundary.
    """
    from .errors import DivergenceError

    ratio = tmsv_convergence_ratio(r0, gamma1, gamma2)
    if ratio >= 1.0:
        raise DivergenceError(
            f"tanh(r0)/sqrt((1-g1)(1-g2)) = {ratio:.4f} >= 1: series diverges")
    if ratio > 0.9:
        warnings.warn(
            f"convergence ratio {ratio:.3f} > 0.9; weights may behave badly",
            TmsvWeightWarning, stacklevel=2)
    q = ratio * ratio
    pref = (-gamma1) ** j1 * (-gamma2) ** j2 / math.cosh(r0) ** 2
    total = 0.0
    n = max(j1, j2)
    while True:
        term = math.comb(n, j1) * math.comb(n, j2) * q ** n
        total += term
        n += 1
        if term < tol * max(abs(total), 1.0) and n > max(j1, j2) + 8:
            break
        if n > 100000:
            raise DivergenceError("TMSV weight series failed to converge")
    return pref * total


# ---------------------------------------------------------------------------
# dephasing channel (analytics only)

def dephasing_kraus(space: FockSpace, gamma_d: float, j: int,
                    mode: int = 0) -> BosonicOperator:
    """D_j = sqrt(gamma_d^j / j!) n^j exp(-gamma_d n^2 / 2) on one mode."""
    dim = space.dims[mode]
    n = np.arange(dim).astype(float)
    pref = math.sqrt(gamma_d ** j / math.factorial(j)) if j else 1.0
    diag = pref * n ** j * np.exp(-gamma_d * n * n / 2.0)
    return BosonicOperator(space, embed(space, mode, np.diag(diag).astype(complex)),
                           hermitian_hint=True)


def _dephase_factor(dim: int, gamma_d: float) -> np.ndarray:
    n = np.arange(dim)
    diff = n[:, None] - n[None, :]
    return np.exp(-gamma_d * diff.astype(float) ** 2 / 2.0)


def apply_dephasing(state: FockState, gamma_d: float, mode: int = 0) -> FockState:
    """Damp off-diagonal elements by exp(-gamma_d (m-n)^2 / 2) on one mode."""
    space = state.space
    rho = state.density().copy()
    f = _dephase_factor(space.dims[mode], gamma_d)
    full = embed_elementwise(space, mode, f)
    return FockState(space, rho * full)


def inverse_dephasing_exact(state: FockState, gamma_d: float, mode: int = 0) -> FockState:
    """Exact inverse of the dephasing channel (sign flip of gamma_d)."""
    n_max = state.space.cutoffs[mode]
    if gamma_d * n_max * n_max > DEPHASING_EXPONENT_BOUND:
        raise OverflowError(
            f"gamma_d * N_max^2 = {gamma_d * n_max * n_max:.1f} exceeds the "
            f"guard {DEPHASING_EXPONENT_BOUND}")
    return apply_dephasing(state, -gamma_d, mode)


def embed_elementwise(space: FockSpace, mode: int, f: np.ndarray) -> np.ndarray:
    """Expand a per-mode (m, n) elementwise factor to the full index grid."""
    dims = space.dims
    full = np.ones((space.dim, space.dim))
    grid = np.indices(dims).reshape(space.num_modes, -1)
    row = grid[mode]
    return f[row[:, None], row[None, :]] * full
