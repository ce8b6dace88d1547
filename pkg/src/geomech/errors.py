"""Exception types shared across the engine."""

from __future__ import annotations


class GeomechError(Exception):
    """Base class for all engine errors."""


# --- expression engine ---

class ParseError(GeomechError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownSymbolError(ParseError):
    def __init__(self, name: str, position: int):
        ParseError.__init__(self, f"unknown symbol '{name}'", position)
        self.name = name


class DomainError(GeomechError):
    """Numeric evaluation left the real domain (log of non-positive, 1/0, ...)."""


class UnboundSymbolError(GeomechError):
    def __init__(self, name: str):
        super().__init__(f"symbol '{name}' is not bound")
        self.name = name


# --- chart-level calculus ---

class ChartMismatchError(GeomechError):
    pass


class DegreeOverflowError(GeomechError):
    pass


class ZeroDegreeError(GeomechError):
    pass


class SingularJacobianError(GeomechError):
    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class RankDeficientEmbeddingError(GeomechError):
    pass


# --- structures and dynamics ---

class OddDimensionError(GeomechError):
    pass


class DimensionMismatchError(GeomechError):
    pass


class DegenerateLagrangianError(GeomechError):
    def __init__(self, message: str, witness=None, det=None):
        super().__init__(message)
        self.witness = witness
        self.det = det


class DegenerateOmegaError(GeomechError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NotPoissonError(GeomechError):
    def __init__(self, which: str, witness=None):
        super().__init__(f"bivector '{which}' does not satisfy the Jacobi identity")
        self.which = which
        self.witness = witness


class BadStructureConstantsError(GeomechError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# --- finite quantum realizations ---

class DimMismatchError(GeomechError):
    pass


class TruncationOverflowError(GeomechError):
    pass


class InversionFailureError(GeomechError):
    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


# --- batch front-end ---

class SpecFormatError(GeomechError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


class UnresolvedReferenceError(GeomechError):
    def __init__(self, name: str):
        super().__init__(f"unresolved reference '{name}'")
        self.name = name


class UnknownCheckError(GeomechError):
    def __init__(self, check_id: str):
        super().__init__(f"unknown check '{check_id}'")
        self.check_id = check_id
