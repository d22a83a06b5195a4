"""MiniJ execution: interpreter, test runner and dependency collection."""

from selertion.runtime.deps import DependencyDB, Tracer, collect_dependencies
from selertion.runtime.interpreter import Interpreter, MiniJError
from selertion.runtime.runner import Outcome, TestReport, execute_tests

__all__ = [
    "DependencyDB", "Tracer", "collect_dependencies",
    "Interpreter", "MiniJError",
    "Outcome", "TestReport", "execute_tests",
]
