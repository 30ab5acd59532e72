"""MiniDist frontend: parsing, validation, printing, access-node enumeration."""

from __future__ import annotations

from typing import Optional

from .ir import Program, LibSpec
from .parser import ParseError, parse_program
from .validate import ProgramInfo, analyze, require_valid, validate_program


def load_program(text: str,
                 extra_libspecs: Optional[dict[str, LibSpec]] = None
                 ) -> tuple[Program, ProgramInfo]:
    """Parse and validate; raises ParseError/ValueError with diagnostics."""
    program = parse_program(text, extra_libspecs=extra_libspecs)
    return program, require_valid(program)


__all__ = ["ParseError", "Program", "ProgramInfo", "analyze", "load_program",
           "parse_program", "require_valid", "validate_program"]
