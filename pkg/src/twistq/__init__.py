"""Exact q-graded fermionic sums and quantum twisted Q-systems."""

from .cartan import TwistedTypeId, CartanData, cartan_data, UnsupportedType
from .coeffring import ULaurent, qbinom, exact_div, NotDivisible

__all__ = [
    "TwistedTypeId",
    "CartanData",
    "cartan_data",
    "UnsupportedType",
    "ULaurent",
    "qbinom",
    "exact_div",
    "NotDivisible",
]

__version__ = "0.1.0"
