"""MiniJ front end: parsing, canonical printing, class models, test inventory."""

from selertion.frontend.model import (
    ClassModel,
    MethodModel,
    SourceFile,
    Statement,
    StatementId,
    build_class_model,
    parse_source,
    pretty_print,
)
from selertion.frontend.project import Project, TestInventory, enumerate_tests, read_source_tree

__all__ = [
    "ClassModel", "MethodModel", "SourceFile", "Statement", "StatementId",
    "build_class_model", "parse_source", "pretty_print",
    "Project", "TestInventory", "enumerate_tests", "read_source_tree",
]
