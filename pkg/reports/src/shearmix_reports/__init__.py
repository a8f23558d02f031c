"""Figure generation over shearmix run directories."""
from .artifacts import (REQUIRED_COLUMNS, VIEWS, HashMismatchError,
                        RunArtifacts, SchemaError, ViewData)
from .render import render

__version__ = "0.1.0"

__all__ = ["REQUIRED_COLUMNS", "VIEWS", "HashMismatchError", "RunArtifacts",
           "SchemaError", "ViewData", "render", "__version__"]
