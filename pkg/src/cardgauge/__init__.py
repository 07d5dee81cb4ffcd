"""cardgauge: documentation-sufficiency scoring for AI model cards."""

from .taxonomy import (
    Taxonomy,
    load_default_taxonomy,
    load_taxonomy,
    module_parameters,
    resolve_field,
)

__version__ = "0.1.0"

__all__ = [
    "Taxonomy",
    "load_default_taxonomy",
    "load_taxonomy",
    "module_parameters",
    "resolve_field",
]
