"""Observables and single-shot measurement sampling.

A measurement outcome is sampled from the observable's eigendecomposition.
Three shapes are supported, because they cover everything the experiments
measure and each admits a much cheaper sampling path than a full
eigenbasis projection:

* ``MatrixObservable`` -- arbitrary Hermitian matrix (generic route),
* ``ProjectorObservable`` -- rank-1 projector |psi><psi| (fidelity shots),
* ``ProductObservable`` -- scale * tensor product of single-mode Hermitian
  factors (quadrature covariance entries).

The sampler below works on a "Kraus bundle": a (dim, K) array B whose
columns are K_k |phi> for the Kraus operators of whatever channel acted on
the pure state |phi>, so that rho = B B†.  Outcome probabilities then never
require materialising rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fock import BosonicOperator, FockSpace, FockState, _single_mode_annihilation


class Observable:
    """Interface: dense matrix plus outcome sampling from a Kraus bundle."""

    def matrix(self, space: FockSpace) -> np.ndarray:
        raise NotImplementedError

    def outcome_distribution(self, bundle: np.ndarray, space: FockSpace):
        """Return (values, probabilities) for a single-shot measurement."""
        raise NotImplementedError

    def expectation(self, state: FockState) -> float:
        m = self.matrix(state.space)
        if state.is_pure:
            return float(np.vdot(state.data, m @ state.data).real)
        return float(np.trace(m @ state.data).real)


def _clean_probs(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    s = p.sum()
    if s <= 0:
        raise ValueError("outcome distribution has no mass")
    return p / s


@dataclass
class MatrixObservable(Observable):
    op: BosonicOperator

    def matrix(self, space):
        if space != self.op.space:
            from .errors import SpaceMismatchError
            raise SpaceMismatchError("observable defined on a different space")
        return self.op.matrix

    def outcome_distribution(self, bundle, space):
        w, v = self.op.eig()
        amp = v.conj().T @ bundle
        return w, _clean_probs((np.abs(amp) ** 2).sum(axis=1))


@dataclass
class ProjectorObservable(Observable):
    """Projector onto a pure target state; outcomes are 1 or 0."""

    target: FockState
    _values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.target.is_pure:
            raise ValueError("projector target must be pure")
        self._values = np.array([1.0, 0.0])

    def matrix(self, space):
        return np.outer(self.target.data, self.target.data.conj())

    def outcome_distribution(self, bundle, space):
        p1 = float((np.abs(self.target.data.conj() @ bundle) ** 2).sum())
        return self._values, _clean_probs(np.array([p1, 1.0 - p1]))


@dataclass
class ProductObservable(Observable):
    """scale * (tensor product of per-mode Hermitian factors).

    ``factors`` maps mode index -> single-mode Hermitian matrix; missing
    modes carry the identity.  The factors must commute trivially (they act
    on different modes), so the joint eigenbasis is the product basis.
    """

    factors: dict
    scale: float = 1.0
    _eig: dict = field(default_factory=dict, repr=False)

    def _factor_eig(self, mode, m):
        if mode not in self._eig:
            self._eig[mode] = np.linalg.eigh(m)
        return self._eig[mode]

    def matrix(self, space):
        out = np.array([[1.0 + 0j]])
        for mode, d in enumerate(space.dims):
            f = self.factors.get(mode, np.eye(d))
            out = np.kron(out, f)
        return self.scale * out

    def outcome_distribution(self, bundle, space):
        dims = space.dims
        k = bundle.shape[1]
        t = bundle.reshape(dims + (k,))
        measured = sorted(self.factors)
        for mode in measured:
            _, v = self._factor_eig(mode, self.factors[mode])
            t = np.moveaxis(np.tensordot(v.conj().T, t, axes=([1], [mode])), 0, mode)
        prob = np.abs(t) ** 2
        # sum over the Kraus axis and every unmeasured mode
        drop = [m for m in range(space.num_modes) if m not in measured] + [space.num_modes]
        prob = prob.sum(axis=tuple(drop))
        values = np.array([self.scale])
        for mode in measured:
            w, _ = self._factor_eig(mode, self.factors[mode])
            values = np.multiply.outer(values, w)
        return values.reshape(-1), _clean_probs(prob.reshape(-1))


def covariance_entry_observable(space: FockSpace, k: int, l: int) -> ProductObservable:
    """Observable whose mean is sigma_kl for a zero-mean two-mode state.

    The quadrature vector ordering is (x1, p1, x2, p2); sigma_kl =
    <{r_k, r_l}> for zero-mean states.
    """
    def quad(idx):
        mode, which = divmod(idx, 2)
        a = _single_mode_annihilation(space.dims[mode])
        if which == 0:
            return mode, (a + a.conj().T) / np.sqrt(2.0)
        return mode, (a - a.conj().T) / (1j * np.sqrt(2.0))

    mk, fk = quad(k)
    ml, fl = quad(l)
    if k == l:
        return ProductObservable({mk: 2.0 * fk @ fk})
    if mk == ml:
        raise ValueError("non-commuting same-mode quadrature pair is not measurable in one shot")
    return ProductObservable({mk: fk, ml: fl}, scale=2.0)


def number_observable(space: FockSpace, mode: int = 0) -> ProductObservable:
    n = np.diag(np.arange(space.dims[mode]).astype(complex))
    return ProductObservable({mode: n})
