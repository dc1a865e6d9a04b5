"""Mailbox calculus checker, interpreter and analysis toolkit."""

from ._mbx import (
    PatternContext,
    Program,
    check,
    encode_session,
    explore,
    generate_constraints,
    parse,
    run,
    __version__,
)

__all__ = [
    "PatternContext",
    "Program",
    "check",
    "encode_session",
    "explore",
    "generate_constraints",
    "parse",
    "run",
    "__version__",
]
