"""Independent reference implementations used only by the tests.

Everything here is written from the definitions, deliberately not sharing
code paths with the package: the forward loss channel as a dense
superoperator, its Moore-Penrose pseudo-inverse, and a handful of closed
forms. Agreement between these and the package is the main correctness
argument.
"""

import itertools
import math

import numpy as np


def annihilation_matrix(dim):
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = math.sqrt(n)
    return a


def loss_kraus_list(dim, gamma):
    """All single-mode loss Kraus operators, from the definition."""
    a = annihilation_matrix(dim)
    att = np.diag((1.0 - gamma) ** (np.arange(dim) / 2.0)).astype(complex)
    ops = []
    aj = np.eye(dim, dtype=complex)
    for j in range(dim):
        if j > 0:
            aj = aj @ a
        pref = math.sqrt(gamma ** j / math.factorial(j)) if j else 1.0
        if gamma == 0.0 and j > 0:
            pref = 0.0
        ops.append(pref * att @ aj)
    return ops


def superoperator(kraus_list):
    """Column-stacking convention: S vec(rho) = vec(sum K rho K†)."""
    dim = kraus_list[0].shape[0]
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    for k in kraus_list:
        s += np.kron(k.conj(), k)  # vec is column-major (Fortran order)
    return s


def multimode_loss_superoperator(dims, gammas):
    s = np.eye(int(np.prod(dims)) ** 2, dtype=complex)
    for mode, gamma in enumerate(gammas):
        ops = loss_kraus_list(dims[mode], gamma)
        full = [embed(dims, mode, k) for k in ops]
        s = superoperator(full) @ s
    return s


def embed(dims, mode, m):
    out = np.array([[1.0 + 0j]])
    for i, d in enumerate(dims):
        out = np.kron(out, m if i == mode else np.eye(d))
    return out


def apply_pinv_refined(s_fwd, s_inv, rho):
    """Apply the pseudo-inverse with one step of iterative refinement.

    The raw pinv solve loses a few digits when the forward map is poorly
    conditioned (large cutoff, large gamma); one refinement step restores
    them without changing what is being inverted.
    """
    b = rho.reshape(-1, order="F")
    x = s_inv @ b
    x += s_inv @ (b - s_fwd @ x)
    dim = rho.shape[0]
    return x.reshape(dim, dim, order="F")


def apply_super(s, rho):
    dim = rho.shape[0]
    return (s @ rho.reshape(-1, order="F")).reshape(dim, dim, order="F")


def pseudo_inverse_loss(rho, dims, gammas):
    """Inverse channel via dense superoperator pseudo-inverse."""
    s = multimode_loss_superoperator(dims, gammas)
    s_inv = np.linalg.pinv(s, rcond=1e-12)
    return apply_super(s_inv, rho)


def forward_loss(rho, dims, gammas):
    s = multimode_loss_superoperator(dims, gammas)
    return apply_super(s, rho)


def random_state(dim, support, rng, pure=False):
    """Random density matrix supported on the lowest ``support`` levels."""
    v = rng.normal(size=(support, 1 if pure else support)) \
        + 1j * rng.normal(size=(support, 1 if pure else support))
    rho_s = v @ v.conj().T
    rho_s /= np.trace(rho_s).real
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:support, :support] = rho_s
    return rho


def trace_distance(a, b):
    w = np.linalg.eigvalsh((a - b + (a - b).conj().T) / 2)
    return 0.5 * float(np.abs(w).sum())


# --- closed forms ----------------------------------------------------------

def cat_amplitude_norm_sq(alpha, phi):
    """Norm^2 of |alpha> + e^{i phi} |-alpha> before normalization."""
    a2 = abs(alpha) ** 2
    return 2.0 + 2.0 * math.exp(-2.0 * a2) * math.cos(phi)


def cat_s_closed_form(alpha, phi, gamma):
    """One-norm of the cat-state quasi-probability pair."""
    a2 = abs(alpha) ** 2
    x = gamma * a2 / (1.0 - gamma)
    g0a2 = a2 / (1.0 - gamma)
    npl = cat_amplitude_norm_sq(math.sqrt(g0a2), phi)
    nmi = cat_amplitude_norm_sq(math.sqrt(g0a2), phi + math.pi)
    n0 = cat_amplitude_norm_sq(alpha, phi)
    w_even = math.exp(x) * math.cosh(x) * npl / n0
    w_odd = math.exp(x) * math.sinh(x) * nmi / n0
    return w_even + w_odd


def dual_rail_s(gamma, n_qubits):
    return ((1.0 + gamma) / (1.0 - gamma)) ** n_qubits


def tmsv_sigma(r):
    """Quadrature covariance matrix of a two-mode squeezed vacuum,
    ordering (x1, p1, x2, p2), vacuum normalized to identity."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    return np.array([[c, 0, s, 0],
                     [0, c, 0, -s],
                     [s, 0, c, 0],
                     [0, -s, 0, c]], dtype=float)


def binomial_pattern_weight(gamma, g0, pattern, norms):
    """omega_j = (-gamma)^{|j|} / prod j_i! * N_j from the definition."""
    w = 1.0
    for j in pattern:
        w *= (-gamma) ** j / math.factorial(j)
    return w * norms


def patterns_up_to(num_modes, j_max):
    return list(itertools.product(range(j_max + 1), repeat=num_modes))
