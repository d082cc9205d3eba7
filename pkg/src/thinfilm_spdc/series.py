"""Sums of complex exponentials in the slab coordinate.

Every z-dependent quantity inside the slab (Green's-function source side,
pump field) is a short sum  sum_j A_j exp(i kappa_j z)  with tensor-valued
amplitudes.  Keeping that form makes the overlap integral over the slab
closed-form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMALL_KAPPA = 1e-8


@dataclass(frozen=True)
class ExponentialSeries:
    """``amplitudes`` has shape (n_terms, *batch, *tensor), ``kappas`` (n_terms, *batch).

    ``rank`` is the number of trailing tensor axes (1 for vectors, 2 for 3x3 matrices).
    """

    amplitudes: np.ndarray
    kappas: np.ndarray
    rank: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        kap = np.asarray(self.kappas, dtype=complex)
        batch = amps.shape[: amps.ndim - self.rank] if self.rank else amps.shape
        if kap.shape != batch:
            kap = np.broadcast_to(kap, batch)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "kappas", kap)

    def __len__(self):
        return self.amplitudes.shape[0]

    @property
    def batch_shape(self):
        return self.kappas.shape[1:]

    def __call__(self, z):
        """Evaluate at ``z`` (broadcasts against the batch shape)."""
        phase = np.exp(1j * self.kappas * np.asarray(z))
        phase = phase.reshape(phase.shape + (1,) * self.rank)
        return np.sum(self.amplitudes * phase, axis=0)

    def contract_left(self, vector):
        """Series of ``vector . M`` for matrix-valued terms (no conjugation)."""
        if self.rank != 2:
            raise ValueError("contract_left needs matrix-valued amplitudes")
        amps = np.einsum("...a,...ab->...b", np.asarray(vector), self.amplitudes)
        return ExponentialSeries(amps, self.kappas, 1)


def integrate_exp(kappa, thickness):
    """Integral of exp(i kappa z) over -thickness <= z <= 0.

    Uses expm1 so there is no cancellation for small |kappa| a; below
    |kappa| a = 1e-8 the second-order Taylor form is used instead.
    """
    kappa = np.asarray(kappa, dtype=complex)
    a = thickness
    x = kappa * a
    small = np.abs(x) < SMALL_KAPPA
    safe = np.where(small, 1.0, kappa)
    exact = -np.expm1(-1j * safe * a) / (1j * safe)
    taylor = a * (1 - 0.5j * x - x * x / 6)
    return np.where(small, taylor, exact)
