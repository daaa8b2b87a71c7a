"""Spectra, eigenfunction zeros and complex interlacing for PT-symmetric Sturm-Liouville problems."""

__version__ = "0.1.0"

from .potentials import Monomial, QESQuartic, turning_points  # noqa: E402
from .shooting import WedgePair, find_eigenvalues  # noqa: E402

__all__ = ["Monomial", "QESQuartic", "WedgePair", "find_eigenvalues", "turning_points", "__version__"]
