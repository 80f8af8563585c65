"""Preconditioned conjugate-gradient eigensolvers for Hermitian definite pencils."""

from ._cgeig import *  # noqa: F401,F403
from ._cgeig import Error, Pencil, Preconditioner, solve  # noqa: F401

METHODS = ("pcg-heuristic", "psd", "gd", "lopcg", "lopcgx", "lopcga", "tpcg", "tpcga")
