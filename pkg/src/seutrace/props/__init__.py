"""Assertion language: parser, elaborator and builtin property families."""

from .elaborate import AuxNet, ElaborationError, Property, attach_aux, compile_property, elaborate, elaborate_expr
from .families import (
    CRASH_CODES,
    DEAD_STATE_WINDOW,
    FAMILIES,
    STROBE_SIGNALS,
    builtin_corpus,
    gen_architectural_properties,
    gen_crash_properties,
    gen_hang_properties,
    gen_strobe_properties,
)
from .parser import PropertyAst, PropertySyntaxError, format_expr, format_property, parse, parse_expr, parse_file

__all__ = [
    "AuxNet",
    "CRASH_CODES",
    "DEAD_STATE_WINDOW",
    "ElaborationError",
    "FAMILIES",
    "Property",
    "PropertyAst",
    "PropertySyntaxError",
    "STROBE_SIGNALS",
    "attach_aux",
    "builtin_corpus",
    "compile_property",
    "elaborate",
    "elaborate_expr",
    "format_expr",
    "format_property",
    "gen_architectural_properties",
    "gen_crash_properties",
    "gen_hang_properties",
    "gen_strobe_properties",
    "parse",
    "parse_expr",
    "parse_file",
]
