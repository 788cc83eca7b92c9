"""Exact determinant-basis simulator.

Determinants are integer bitmasks (bit p set = spin orbital p occupied);
the reference is the Fermi sea of the lowest ``n_electrons`` orbitals.
State vectors are sparse maps determinant -> coefficient, numeric
(float) or symbolic (ScalarExpr, guarded to 16 determinants).

Everything here is deliberately independent of the identity/reordering
machinery: operators are applied one elementary sign-tracked step at a
time, exponentials by their power series.  This module is the ground
truth the symbolic conversions are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import DimensionTooLarge, SeriesDivergence
from .identities import ExpFactor, UCCFactor, euler_form
from .opalg import AOperator, OperatorSum
from .symcoef import ScalarExpr

MAX_DENSE_ORBITALS = 14
SYMBOLIC_STATE_LIMIT = 16
PRUNE_TOL = 1e-15


def reference_det(n_electrons: int) -> int:
    return (1 << n_electrons) - 1


def det_from_occ(occ: Iterable[int]) -> int:
    det = 0
    for p in occ:
        det |= 1 << p
    return det


def occ_list(det: int) -> list[int]:
    out = []
    p = 0
    while det:
        if det & 1:
            out.append(p)
        det >>= 1
        p += 1
    return out


def excitation_rank(det: int, ref: int) -> int:
    """Number of particle-hole pairs separating det from the reference."""
    return (det & ~ref).bit_count()


def _parity(det: int, p: int) -> int:
    return -1 if (det & ((1 << p) - 1)).bit_count() & 1 else 1


def apply_aop(op: AOperator, det: int) -> tuple[int, int] | None:
    """Apply one canonical operator string to a determinant.

    Projectors filter first (they sit rightmost in the string), then
    annihilators act in ascending index order and creators in descending
    order, each with the sign (-1)^(occupied below p).  Returns
    (sign, new determinant) or None when the string annihilates the state.
    """
    for p in op.c_indices:
        if not det >> p & 1:
            return None
    for p in op.d_indices:
        if det >> p & 1:
            return None
    sign = 1
    for p in op.b_indices:
        if not det >> p & 1:
            return None
        sign *= _parity(det, p)
        det ^= 1 << p
    for p in reversed(op.a_indices):
        if det >> p & 1:
            return None
        sign *= _parity(det, p)
        det ^= 1 << p
    return sign, det


@dataclass
class StateVector:
    """Sparse wavefunction over determinants."""

    n_orbitals: int
    n_electrons: int
    amps: dict = field(default_factory=dict)
    symbolic: bool = False

    @classmethod
    def reference(cls, n_orbitals: int, n_electrons: int, symbolic: bool = False) -> "StateVector":
        ref = reference_det(n_electrons)
        amp = ScalarExpr.one() if symbolic else 1.0
        return cls(n_orbitals, n_electrons, {ref: amp}, symbolic)

    def copy(self) -> "StateVector":
        return StateVector(self.n_orbitals, self.n_electrons, dict(self.amps), self.symbolic)

    def coefficient(self, det: int):
        zero = ScalarExpr.zero() if self.symbolic else 0.0
        return self.amps.get(det, zero)

    def scale(self, factor) -> "StateVector":
        return StateVector(
            self.n_orbitals,
            self.n_electrons,
            {d: c * factor for d, c in self.amps.items()},
            self.symbolic,
        )

    def add_into(self, other: "StateVector") -> None:
        for det, coeff in other.amps.items():
            if det in self.amps:
                self.amps[det] = self.amps[det] + coeff
            else:
                self.amps[det] = coeff

    def prune(self) -> "StateVector":
        if self.symbolic:
            self.amps = {d: c for d, c in self.amps.items() if not c.is_zero()}
        else:
            self.amps = {d: c for d, c in self.amps.items() if abs(c) > PRUNE_TOL}
        return self

    def is_empty(self) -> bool:
        return not self.amps

    def max_abs(self) -> float:
        if self.symbolic:
            raise ValueError("max_abs is a numeric-mode operation")
        return max((abs(c) for c in self.amps.values()), default=0.0)

    def norm(self) -> float:
        if self.symbolic:
            raise ValueError("norm is a numeric-mode operation")
        return float(np.sqrt(sum(c * c for c in self.amps.values())))

    def _check_symbolic_growth(self):
        if self.symbolic and len(self.amps) > SYMBOLIC_STATE_LIMIT:
            raise DimensionTooLarge(
                f"symbolic state grew past {SYMBOLIC_STATE_LIMIT} determinants"
            )

    def to_json(self) -> dict:
        entries = []
        for det in sorted(self.amps):
            coeff = self.amps[det]
            entry = {"occ": occ_list(det)}
            if self.symbolic:
                entry["coeff"] = coeff.render()
            else:
                entry["coeff"] = coeff
            entries.append(entry)
        return {
            "n_orbitals": self.n_orbitals,
            "n_electrons": self.n_electrons,
            "amplitudes": entries,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "StateVector":
        amps = {}
        for entry in data["amplitudes"]:
            amps[det_from_occ(entry["occ"])] = float(entry["coeff"])
        return cls(int(data["n_orbitals"]), int(data["n_electrons"]), amps).prune()


def _amp_value(amp, det: int, assign, symbolic: bool):
    """Evaluate an amplitude object on a given source determinant."""
    if symbolic:
        if isinstance(amp, ScalarExpr):
            return amp
        return amp.value_on(det, None)
    if isinstance(amp, ScalarExpr):
        return amp.eval_numeric(assign or {})
    return amp.value_on(det, assign or {})


def _factor_terms(x) -> tuple:
    if isinstance(x, ExpFactor):
        return x.terms
    if isinstance(x, OperatorSum):
        return x.terms
    raise TypeError(f"expected ExpFactor or OperatorSum, got {type(x)!r}")


def apply_terms(terms, s: StateVector, assign=None) -> StateVector:
    """One application of a weighted operator sum to a state."""
    out = StateVector(s.n_orbitals, s.n_electrons, {}, s.symbolic)
    for det, coeff in s.amps.items():
        for amp, op in terms:
            hit = apply_aop(op, det)
            if hit is None:
                continue
            sign, new_det = hit
            value = _amp_value(amp, det, assign, s.symbolic)
            add = coeff * value * sign
            if new_det in out.amps:
                out.amps[new_det] = out.amps[new_det] + add
            else:
                out.amps[new_det] = add
    out.prune()
    out._check_symbolic_growth()
    return out


def apply_opsum(x: OperatorSum, s: StateVector, assign=None) -> StateVector:
    return apply_terms(x.terms, s, assign)


def apply_euler(f: UCCFactor, s: StateVector, assign=None) -> StateVector:
    """Apply one unitary factor exactly via the operator Euler formula."""
    return apply_opsum(euler_form(f), s, assign)


def apply_exp_series(x, s: StateVector, assign=None, tol: float = 1e-15, max_terms: int = 1000) -> StateVector:
    """exp(x) applied by power series.

    Terminates exactly when a power of the exponent annihilates the state
    (pure excitations are nilpotent) and otherwise when the incremental
    term drops below ``tol`` in max norm.
    """
    terms = _factor_terms(x)
    acc = s.copy()
    term = s
    for k in range(1, max_terms + 1):
        term = apply_terms(terms, term, assign)
        if term.is_empty():
            return acc.prune()
        if s.symbolic:
            scale = ScalarExpr.rational(1, k)
        else:
            scale = 1.0 / k
        term = term.scale(scale)
        acc.add_into(term)
        if not s.symbolic and term.max_abs() < tol:
            return acc.prune()
    raise SeriesDivergence(f"exponential series exceeded {max_terms} terms")


def compare(s1: StateVector, s2: StateVector, tol: float = 1e-11) -> tuple[float, bool]:
    """Union-domain infinity-norm difference and a pass flag."""
    diff = 0.0
    for det in set(s1.amps) | set(s2.amps):
        diff = max(diff, abs(s1.coefficient(det) - s2.coefficient(det)))
    return diff, diff <= tol


# -- full Fock-space matrices -------------------------------------------------


def sparse_matrix(x, n_orbitals: int, assign=None) -> sp.csr_matrix:
    """Matrix over all 2^N occupations; columns indexed by determinant bits."""
    if isinstance(x, AOperator):
        terms = ((ScalarExpr.one(), x),)
    else:
        terms = _factor_terms(x)
    dim = 1 << n_orbitals
    rows, cols, vals = [], [], []
    for det in range(dim):
        for amp, op in terms:
            hit = apply_aop(op, det)
            if hit is None:
                continue
            sign, new_det = hit
            value = _amp_value(amp, det, assign, assign is None)
            if isinstance(value, ScalarExpr):
                frac = value.as_fraction()
                if frac is None:
                    raise ValueError("matrix of a symbolic sum needs an angle assignment")
                value = float(frac)
            rows.append(new_det)
            cols.append(det)
            vals.append(sign * value)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def dense_matrix(x, n_orbitals: int, assign=None) -> np.ndarray:
    """Dense variant of :func:`sparse_matrix`, integer-typed when exact.

    ExpFactor inputs are exponentiated by the matrix power series.
    """
    if n_orbitals > MAX_DENSE_ORBITALS:
        raise DimensionTooLarge(f"{n_orbitals} orbitals exceed the 2^{MAX_DENSE_ORBITALS} guard")
    if isinstance(x, ExpFactor):
        mat = matrix_expm_series(sparse_matrix(x.exponent_opsum(), n_orbitals, assign))
        return np.asarray(mat.todense())
    mat = np.asarray(sparse_matrix(x, n_orbitals, assign).todense())
    if assign is None:
        rounded = np.rint(mat)
        if np.array_equal(rounded, mat):
            return rounded.astype(np.int64)
    return mat


def matrix_expm_series(m: sp.spmatrix, tol: float = 1e-16, max_terms: int = 1000) -> sp.csr_matrix:
    """exp(m) summed term by term in sparse arithmetic."""
    m = m.tocsr().astype(float)
    dim = m.shape[0]
    acc = sp.identity(dim, format="csr")
    term = sp.identity(dim, format="csr")
    for k in range(1, max_terms + 1):
        term = (m @ term) / k
        if term.nnz == 0:
            return acc.tocsr()
        acc = acc + term
        if abs(term).max() < tol:
            return acc.tocsr()
    raise SeriesDivergence(f"matrix exponential series exceeded {max_terms} terms")
