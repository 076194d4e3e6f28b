"""Exact finite de Finetti representations and symmetric multi-marginal transport.

Everything here works over finite state spaces with exact rational
arithmetic (:class:`fractions.Fraction`).  The main entry points are

* :mod:`urnlaw.partitions` -- integer/set partitions and the coefficient
  families of the universal polynomials (Stirling numbers, Ewens function);
* :mod:`urnlaw.measures` -- measures, signed tensors and their algebra;
* :mod:`urnlaw.extremal` -- the polynomials ``F_{N,k}`` computed four ways;
* :mod:`urnlaw.definetti` -- mixtures over urns, decomposition, sampling;
* :mod:`urnlaw.mmot` -- symmetric multi-marginal optimal transport;
* :mod:`urnlaw.simplex` -- the exact simplex solver used by the LPs.
"""

__version__ = "0.1.0"

from urnlaw.errors import BudgetError, PoleError, ValidationError, VerificationError

__all__ = [
    "BudgetError",
    "PoleError",
    "ValidationError",
    "VerificationError",
    "__version__",
]
