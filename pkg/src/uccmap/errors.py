"""Exception taxonomy shared by the whole package.

Each error that a batch front-end can surface carries an ``exit_code`` so
the CLI and the HTTP service map failures consistently:

    1  invalid input (parse errors, bad indices, angle out of domain)
    2  normalization could not be driven to excitation-only form
    3  exponential power series failed to converge
    4  reference determinant has (numerically) zero weight
"""


class UccMapError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class NonCanonicalInput(UccMapError):
    """Operator index lists violate the canonical-form preconditions."""

    exit_code = 1


class AngleOutOfDomain(UccMapError):
    """An amplitude magnitude reached pi/2, where tan/ln(cos) diverge."""

    exit_code = 1


class EdgeCaseMutualMatch(UccMapError):
    """Two exponents match each other both ways; the Hadamard series does
    not truncate and the pair cannot be separated symbolically."""

    exit_code = 2


class NormalizationStuck(UccMapError):
    """Reordering could not reach an excitation-only factor product."""

    exit_code = 2

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class SeriesDivergence(UccMapError):
    """Exponential power series exceeded the term budget."""

    exit_code = 3


class ReferenceDepleted(UccMapError):
    """The reference coefficient vanished; intermediate normalization and
    amplitude extraction are undefined."""

    exit_code = 4


class RankOverflow(UccMapError):
    """A state has support beyond the requested maximum excitation rank."""

    exit_code = 1


class DimensionTooLarge(UccMapError):
    """Full Fock-space matrix requested for too many orbitals."""

    exit_code = 1
