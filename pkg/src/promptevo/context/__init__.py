"""Static context extraction: parsing, project indexing and bundle assembly."""

from .bundle import ArgumentTypeInfo, ContextBundle, build_context_bundle, trace_argument_types
from .index import FocalMethod, FocalNotFound, ProjectIndex, UnknownClass, find_subclasses, index_project
from .lexer import ParseError
from .parser import ClassInfo, ClassKind, MethodSig, Visibility, parse_source_file

__all__ = [
    "ArgumentTypeInfo",
    "ClassInfo",
    "ClassKind",
    "ContextBundle",
    "FocalMethod",
    "FocalNotFound",
    "MethodSig",
    "ParseError",
    "ProjectIndex",
    "UnknownClass",
    "Visibility",
    "build_context_bundle",
    "find_subclasses",
    "index_project",
    "parse_source_file",
    "trace_argument_types",
]
