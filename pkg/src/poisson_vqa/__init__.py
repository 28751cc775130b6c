"""Variational quantum solver for the finite-difference Poisson equation."""

from poisson_vqa.errors import CapacityError, InputError, NumericalError

__version__ = "0.1.0"

__all__ = ["CapacityError", "InputError", "NumericalError", "__version__"]
