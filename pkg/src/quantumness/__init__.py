"""Numerical tests of quantumness for single systems, hidden-variable models and light beams."""
from .operator_core import (
    BlochVector,
    DensityState,
    HermitianOperator,
    NumericalError,
    PremiseError,
    Spectrum,
    ValidationError,
    bloch_state,
    commutator_norm,
    eig_hermitian,
    expectation,
    loewner_geq,
    pauli_observable,
    tensor,
)

__version__ = "0.1.0"
