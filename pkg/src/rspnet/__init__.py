"""Bimatrix Rock-Scissors-Paper replicator dynamics and its heteroclinic network."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .game_core import DomainError, LogState, Params, SimplexState  # noqa: E402

__all__ = ["DomainError", "LogState", "Params", "SimplexState", "__version__"]
