"""isolab: certification and structural decomposition of complete isometries
between matrix spaces, with the commutative (function-algebra) special case
and reproducible ground-truth generators."""

__version__ = "0.1.0"

from .algebra import MatrixSubspace, Projection
from .decompose import AnalyzeOptions, Decomposition, analyze
from .envelope import EnvelopeResult, build_envelope
from .gen import GenSpec
from .linmap import DEFAULT_TOL, AmplifiedMap, MatrixMap, Shape

__all__ = [
    "AnalyzeOptions",
    "AmplifiedMap",
    "DEFAULT_TOL",
    "Decomposition",
    "EnvelopeResult",
    "GenSpec",
    "MatrixMap",
    "MatrixSubspace",
    "Projection",
    "Shape",
    "analyze",
    "build_envelope",
    "__version__",
]
