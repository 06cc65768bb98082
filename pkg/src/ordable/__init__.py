"""Word-level tools for left-orderability arguments about Dehn fillings of two-component links."""

from .words import Word, parse_word, reduce, multiply, invert, conjugate, substitute, format_word
from .slopes import SlopeQ, Arc, Z2Ordering, enumerate_orderings, compatible_slope_arc, slope_from_pair
from .groups import Presentation, PeripheralSystem, DerivationCertificate, parse_presentation, fill

__version__ = "0.1.0"
