"""Per-factor operator identities.

Each unitary factor exp(theta (T - T+)) built from one pure excitation T
carries a hidden SU(2): T and T+ close with the projector pair

    P+ = prod n_virt * prod (1-n_occ)        (T T+)
    P- = prod n_occ  * prod (1-n_virt)       (T+ T)

All identities are kept in real T-form; the +-i phases of the raising and
lowering combination cancel in every product used here.  The central results
are the operator Euler formula and the two orderings of the exponential
disentangling identity, whose coefficients come from equating triangular
2x2 matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import NonCanonicalInput
from .opalg import AOperator, OperatorSum, identity_op, projector
from .symcoef import AngleId, ScalarExpr


@dataclass(frozen=True)
class UCCFactor:
    """One factor of a factorized unitary ansatz: angle plus excitation."""

    angle: AngleId
    excitation: AOperator

    def __post_init__(self):
        op = self.excitation
        if op.rank < 1 or op.has_projection():
            raise NonCanonicalInput("factor generator must be a pure excitation of rank >= 1")

    @property
    def virt(self) -> tuple[int, ...]:
        return self.excitation.a_indices

    @property
    def occ(self) -> tuple[int, ...]:
        return self.excitation.b_indices


@dataclass(frozen=True)
class ExpFactor:
    """Exponential of a weighted operator sum; the atom of all products.

    ``terms`` pairs an amplitude with a canonical operator.  Amplitudes are
    ScalarExpr here; the reordering engine also stores sector-dressed
    amplitudes (any object with ``expand_terms``/``value_on``).  ``ucc``
    tags a factor that is still the raw exp(theta (T - T+)) of one unitary
    factor, so the normalizer knows to disentangle it.
    """

    terms: tuple[tuple[Any, AOperator], ...]
    ucc: UCCFactor | None = None

    @classmethod
    def from_opsum(cls, opsum: OperatorSum, ucc: UCCFactor | None = None) -> "ExpFactor":
        return cls(tuple(opsum.terms), ucc=ucc)

    def is_identity_factor(self) -> bool:
        return not self.terms

    def single_term(self) -> tuple[Any, AOperator] | None:
        return self.terms[0] if len(self.terms) == 1 else None

    def exponent_opsum(self) -> OperatorSum:
        """The exponent as a plain OperatorSum (sector dressings expanded
        into projector-carrying terms)."""
        out = []
        for amp, op in self.terms:
            if isinstance(amp, ScalarExpr):
                out.append((amp, op))
            else:
                out.extend(amp.expand_terms(op))
        return OperatorSum(out)

    def render(self) -> str:
        if not self.terms:
            return "exp(0)"
        body = " + ".join(
            f"[{amp.render()}] {op.render()}" for amp, op in self.terms
        )
        return f"exp({body})"

    def __repr__(self):
        return self.render()


# -- pseudospin pieces --------------------------------------------------------


def p_plus(f: UCCFactor) -> AOperator:
    """Projector onto 'fully excited': virtuals occupied, occupieds empty."""
    return projector(occupied=f.virt, empty=f.occ)


def p_minus(f: UCCFactor) -> AOperator:
    """Projector onto 'fully de-excited': the mirror of p_plus."""
    return projector(occupied=f.occ, empty=f.virt)


def sz_of(f: UCCFactor) -> OperatorSum:
    """(P+ - P-)/2; equals commutator(T, T+)/2."""
    half = ScalarExpr.rational(1, 2)
    return OperatorSum([(half, p_plus(f)), (-half, p_minus(f))])


def projection_difference(f: UCCFactor) -> OperatorSum:
    """P+ - P- (twice the pseudospin z component)."""
    one = ScalarExpr.one()
    return OperatorSum([(one, p_plus(f)), (-one, p_minus(f))])


def euler_form(f: UCCFactor) -> OperatorSum:
    """I + sin(theta) (T - T+) + (cos(theta) - 1) (P+ + P-).

    Exact because (T - T+)^3 = -(T - T+); this is the operator analogue of
    the Euler identity for one factor.
    """
    T = f.excitation
    sin = ScalarExpr.sin(f.angle)
    cosm1 = ScalarExpr.cos(f.angle) - ScalarExpr.one()
    return OperatorSum(
        [
            (ScalarExpr.one(), identity_op()),
            (sin, T),
            (-sin, T.adjoint()),
            (cosm1, p_plus(f)),
            (cosm1, p_minus(f)),
        ]
    )


def ucc_generator(f: UCCFactor) -> OperatorSum:
    """theta (T - T+), the raw anti-Hermitian exponent."""
    theta = ScalarExpr.angle(f.angle)
    return OperatorSum([(theta, f.excitation), (-theta, f.excitation.adjoint())])


def ucc_exp_factor(f: UCCFactor) -> ExpFactor:
    """The factor exp(theta (T - T+)) itself, tagged for later disentangling."""
    return ExpFactor.from_opsum(ucc_generator(f), ucc=f)


# -- disentangling -------------------------------------------------------------


def disentangle(f: UCCFactor) -> list[ExpFactor]:
    """exp(tan T) * exp(-lncos (P+ - P-)) * exp(-tan T+), equal to euler_form.

    Well defined for |theta| < pi/2; tan and ln(cos) stay symbolic here and
    only diverge at numeric evaluation.
    """
    tan = ScalarExpr.tan(f.angle)
    lncos = ScalarExpr.lncos(f.angle)
    exc = ExpFactor(((tan, f.excitation),))
    proj = ExpFactor.from_opsum(projection_difference(f).scale(-lncos))
    deexc = ExpFactor(((-tan, f.excitation.adjoint()),))
    return [exc, proj, deexc]


def disentangle_reversed(f: UCCFactor) -> list[ExpFactor]:
    """exp(-tan T+) * exp(+lncos (P+ - P-)) * exp(tan T), equal to euler_form.

    The sign flip of the middle exponent relative to the forward order falls
    out of the triangular 2x2 decomposition (see solve_triangular_coefficients).
    """
    tan = ScalarExpr.tan(f.angle)
    lncos = ScalarExpr.lncos(f.angle)
    deexc = ExpFactor(((-tan, f.excitation.adjoint()),))
    proj = ExpFactor.from_opsum(projection_difference(f).scale(lncos))
    exc = ExpFactor(((tan, f.excitation),))
    return [deexc, proj, exc]


# -- 2x2 coefficient solver ----------------------------------------------------

SIGMA_PLUS = np.array([[0.0, 2.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [2.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def rotation_2x2(theta: float) -> np.ndarray:
    """exp(-i theta sigma_x) = [[cos, -i sin], [-i sin, cos]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def solve_triangular_coefficients(target: np.ndarray, order: str) -> tuple[complex, complex, complex]:
    """Coefficients (a, b, c) with target = exp(a s+) exp(b sz) exp(c s-)
    for order '+z-', or target = exp(c s-) exp(b sz) exp(a s+) for '-z+'.

    exp(a sigma+) = [[1, 2a], [0, 1]], exp(b sigma_z) = diag(e^b, e^-b) and
    exp(c sigma-) = [[1, 0], [2c, 1]], so the decomposition reads off the
    matrix entries directly.
    """
    if order == "+z-":
        eb_inv = target[1, 1]
        b = -np.log(eb_inv)
        a = target[0, 1] / (2 * eb_inv)
        c = target[1, 0] / (2 * eb_inv)
    elif order == "-z+":
        eb = target[0, 0]
        b = np.log(eb)
        a = target[0, 1] / (2 * eb)
        c = target[1, 0] / (2 * eb)
    else:
        raise ValueError(f"unknown factor order {order!r}")
    return a, b, c
