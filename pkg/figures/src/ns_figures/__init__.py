"""Batch figure generation for congested-ns CSV artifacts."""

__version__ = "0.1.0"

from .render import KINDS, FigureSpec, SchemaError, load_table, render
