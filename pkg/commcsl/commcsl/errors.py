"""
commcsl exceptions

The exceptions are defined in the following hierarchy::

    Exceptions
    |__Error
       |__InterfaceError
       |__ProgramError
       |  |__ParseError
       |  |__TypeCheckError
       |  |__SpecError
       |  |__OutlineError
       |__NotSupportedError

Exhausted search bounds are not errors: they are reported as ``unknown`` or
``truncated`` verdicts by the checking functions.
"""

# Copyright (C) 2022 The CommCSL Team

from typing import Any, Optional, Tuple, Union


class Error(Exception):
    """
    Base exception for all the errors commcsl will raise.

    You can use this to catch all errors with one single `!except` statement.
    """

    __module__ = "commcsl"


class InterfaceError(Error):
    """
    An error related to the way the library or the command line is used.

    Examples are a missing input file or a non-positive bound.
    """

    __module__ = "commcsl"


class ProgramError(Error):
    """
    Exception raised for problems in the user-provided inputs.
    """

    __module__ = "commcsl"


class ParseError(ProgramError):
    """
    A syntax error in a program, annotation, or specification text.

    The position of the offending token is available in the `line` and `col`
    attributes (both 1-based, 0 if unknown).
    """

    __module__ = "commcsl"

    def __init__(
        self, msg: str, line: int = 0, col: int = 0, source: str = ""
    ):
        self.msg = msg
        self.line = line
        self.col = col
        self.source = source
        super().__init__(self._format())

    def _format(self) -> str:
        where = f"{self.source}:" if self.source else ""
        if self.line:
            where += f"{self.line}:{self.col}:"
        return f"{where} {self.msg}" if where else self.msg

    def __reduce__(self) -> Union[str, Tuple[Any, ...]]:
        return (type(self), (self.msg, self.line, self.col, self.source))


class TypeCheckError(ProgramError):
    """
    An expression or assertion is not well typed.

    The text of the offending expression is available in `expr`.
    """

    __module__ = "commcsl"

    def __init__(self, msg: str, expr: Optional[str] = None):
        self.msg = msg
        self.expr = expr
        super().__init__(f"{msg}: {expr}" if expr else msg)

    def __reduce__(self) -> Union[str, Tuple[Any, ...]]:
        return (type(self), (self.msg, self.expr))


class SpecError(ProgramError):
    """
    A resource specification violates a structural requirement.

    An example is an action precondition mentioning the resource value.
    """

    __module__ = "commcsl"


class OutlineError(ProgramError):
    """
    A proof outline is malformed.

    Examples may be a missing annotation between two statements, an atomic
    block without action tag, unbalanced share/unshare tags.
    """

    __module__ = "commcsl"


class NotSupportedError(Error):
    """
    A construct falls outside the fragment supported by an operation.

    The offending subexpression, if known, is available in `feature`.
    """

    __module__ = "commcsl"

    def __init__(self, msg: str, feature: Optional[str] = None):
        self.msg = msg
        self.feature = feature
        super().__init__(f"{msg}: {feature}" if feature else msg)

    def __reduce__(self) -> Union[str, Tuple[Any, ...]]:
        return (type(self), (self.msg, self.feature))
