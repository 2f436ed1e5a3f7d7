"""Static figure panels from robust-shadows CSV bundles."""

from .schemas import PANEL_SCHEMAS, SchemaError, read_panel
from .render import render_all, render_panel

__version__ = "0.1.0"

__all__ = [
    "PANEL_SCHEMAS",
    "SchemaError",
    "read_panel",
    "render_all",
    "render_panel",
]
