"""Presentation-only rendering of losscancel CSV outputs.

One console script per figure kind; all physics lives upstream in the CSVs.
"""

from .loader import MissingColumnsError, load_table, numeric

__all__ = ["MissingColumnsError", "load_table", "numeric"]
__version__ = "0.1.0"
