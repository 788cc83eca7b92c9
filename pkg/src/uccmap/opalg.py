"""Canonical algebra of generalized fermionic operator strings.

An :class:`AOperator` is a product of unpaired creation operators, unpaired
annihilation operators, number projectors ``n`` and hole projectors ``1-n``,
written in the fixed global order

    a+_{a1} ... a+_{an}  a_{bn} ... a_{b1}  n_{c1} ... n_{cm}  (1-n)_{d1} ...

with each index group strictly increasing (so the annihilators *as written*
run in descending index order).  Canonical form means all four groups are
pairwise disjoint; the contraction rules that enforce this are implemented
in :func:`canonicalize`.

Products and commutators are computed by exhaustive normal ordering of the
elementary operator strings (projectors expand to ``a+a`` and ``aa+``
monomials, so every AOperator is a single string).  The paper-style
nonvanishing case analysis is used only as a fast pre-filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import NonCanonicalInput
from .symcoef import ScalarExpr

# An elementary operator is (orbital index, is_creator).
_Elem = tuple[int, bool]


@dataclass(frozen=True)
class AOperator:
    """Canonical operator string; also used for pure projectors (empty a/b)
    and the identity (all groups empty)."""

    a_indices: tuple[int, ...] = ()
    b_indices: tuple[int, ...] = ()
    c_indices: tuple[int, ...] = ()
    d_indices: tuple[int, ...] = ()

    def __post_init__(self):
        # Balance |a| == |b| holds for everything the conversion pipeline
        # builds (particle conservation); it is not enforced here because
        # the contraction rules are also exercised on lone-operator strings
        # such as a+_p (1-n_p).
        groups = (self.a_indices, self.b_indices, self.c_indices, self.d_indices)
        for g in groups:
            if any(g[i] >= g[i + 1] for i in range(len(g) - 1)):
                raise NonCanonicalInput(f"index group {g} not strictly increasing")
        seen: set[int] = set()
        for g in groups:
            for p in g:
                if p in seen:
                    raise NonCanonicalInput(f"index {p} repeats across groups")
                seen.add(p)

    # -- basic structure ---------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.a_indices)

    def is_identity(self) -> bool:
        return not (self.a_indices or self.b_indices or self.c_indices or self.d_indices)

    def is_projection(self) -> bool:
        return self.rank == 0 and (self.c_indices or self.d_indices)

    def has_projection(self) -> bool:
        return bool(self.c_indices or self.d_indices)

    def orbitals(self) -> set[int]:
        return set(self.a_indices) | set(self.b_indices) | set(self.c_indices) | set(self.d_indices)

    def fermionic_orbitals(self) -> set[int]:
        """Orbitals whose occupation the operator changes."""
        return set(self.a_indices) | set(self.b_indices)

    def sort_key(self):
        return (self.rank, self.a_indices, self.b_indices, self.c_indices, self.d_indices)

    # -- algebra -------------------------------------------------------------

    def adjoint(self) -> "AOperator":
        # (a+_a... a_b...)^dagger reverses and daggers the string; in this
        # storage convention that is exactly an a<->b swap with sign +1.
        return AOperator(self.b_indices, self.a_indices, self.c_indices, self.d_indices)

    def elementary(self) -> tuple[_Elem, ...]:
        """The string as elementary operators, left to right."""
        out: list[_Elem] = [(p, True) for p in self.a_indices]
        out.extend((p, False) for p in reversed(self.b_indices))
        for p in self.c_indices:  # n = a+ a
            out.append((p, True))
            out.append((p, False))
        for p in self.d_indices:  # 1-n = a a+
            out.append((p, False))
            out.append((p, True))
        return tuple(out)

    def without_projectors(self) -> "AOperator":
        return AOperator(self.a_indices, self.b_indices)

    def render(self) -> str:
        ap = ",".join(f"a{p}" for p in self.a_indices)
        bp = ",".join(f"i{p}" for p in self.b_indices)
        cp = ",".join(f"n{p}" for p in self.c_indices)
        dp = ",".join(f"h{p}" for p in self.d_indices)
        return f"A({ap};{bp}|{cp};{dp})"

    def __repr__(self):
        return self.render()


def identity_op() -> AOperator:
    return AOperator()


def number_op(p: int) -> AOperator:
    return AOperator(c_indices=(p,))


def hole_op(p: int) -> AOperator:
    return AOperator(d_indices=(p,))


def projector(occupied: Sequence[int], empty: Sequence[int]) -> AOperator:
    return AOperator(c_indices=tuple(sorted(occupied)), d_indices=tuple(sorted(empty)))


def make_excitation(
    occ: Sequence[int], virt: Sequence[int], n_electrons: int | None = None
) -> AOperator:
    """Pure rank-n excitation a+_{v1}...a+_{vn} a_{on}...a_{o1}.

    ``occ``/``virt`` must be strictly increasing and disjoint.  When
    ``n_electrons`` is given, occupied indices must lie below it and
    virtual indices at or above it.
    """
    occ, virt = tuple(occ), tuple(virt)
    if not occ or len(occ) != len(virt):
        raise NonCanonicalInput("need equally many occupied and virtual indices, at least one")
    for g in (occ, virt):
        if any(g[i] >= g[i + 1] for i in range(len(g) - 1)):
            raise NonCanonicalInput(f"indices {g} not strictly increasing")
    if set(occ) & set(virt):
        raise NonCanonicalInput("occupied and virtual index sets overlap")
    if n_electrons is not None:
        if any(p >= n_electrons for p in occ):
            raise NonCanonicalInput(f"occupied indices {occ} reach past n_electrons={n_electrons}")
        if any(p < n_electrons for p in virt):
            raise NonCanonicalInput(f"virtual indices {virt} dip below n_electrons={n_electrons}")
    return AOperator(a_indices=virt, b_indices=occ)


def _sort_parity(seq: Sequence[int], reverse: bool = False) -> tuple[int, tuple[int, ...]]:
    """Sort by plain insertion, counting transpositions (None on repeats)."""
    items = list(seq)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and ((items[j - 1] > items[j]) != reverse):
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(items)


def canonicalize(
    a: Sequence[int],
    b: Sequence[int],
    c: Sequence[int] = (),
    d: Sequence[int] = (),
    sign: int = 1,
) -> tuple[ScalarExpr, AOperator] | None:
    """Apply the contraction rules to arbitrary index lists.

    ``a`` and ``b`` are in *written* order (left to right as the string
    reads); projector lists may repeat and are unordered.  Returns the
    scalar (sign folded in) and the canonical operator, or None for the
    zero operator.
    """
    a = list(a)
    b = list(b)
    c_set: list[int] = []
    for p in c:  # dedupe, preserving first occurrence
        if p not in c_set:
            c_set.append(p)
    d_set: list[int] = []
    for p in d:
        if p not in d_set:
            d_set.append(p)

    # vanishing rules; a_i = c_j squares a creator only when the index does
    # not also pair with an annihilator (a_i = b_k takes precedence)
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        return None
    if (set(a) & set(c_set)) - set(b) or set(b) & set(d_set) or set(c_set) & set(d_set):
        return None
    # absorption: a+_p (1-n_p) = a+_p ; a_p n_p = a_p
    d_set = [p for p in d_set if p not in a]
    c_set = [p for p in c_set if p not in b]

    # pairing: shared a/b index contracts to a number projector.  Move the
    # creator to the right end of its block and the annihilator to the left
    # end of its (written) block; the two then sit adjacent as a+ a = n.
    result_sign = sign
    for p in sorted(set(a) & set(b)):
        i = a.index(p)
        result_sign *= (-1) ** (len(a) - 1 - i)
        a.pop(i)
        jw = b.index(p)  # b is in written order; jw operators sit to its left
        result_sign *= (-1) ** jw
        b.pop(jw)
        c_set.append(p)

    s_a, a_sorted = _sort_parity(a)
    # written annihilators must descend; the stored tuple ascends
    s_b, b_desc = _sort_parity(b, reverse=True)
    result_sign *= s_a * s_b
    op = AOperator(a_sorted, tuple(reversed(b_desc)), tuple(sorted(c_set)), tuple(sorted(d_set)))
    return ScalarExpr.rational(result_sign), op


def adjoint(op: AOperator) -> tuple[ScalarExpr, AOperator]:
    return ScalarExpr.one(), op.adjoint()


def matches(a: AOperator, b: AOperator) -> bool:
    """True when a's creators lie inside b's annihilators and vice versa."""
    return set(a.a_indices) <= set(b.b_indices) and set(a.b_indices) <= set(b.a_indices)


# -- Wick engine -------------------------------------------------------------


def _normal_order(seq: Sequence[_Elem], coeff: int = 1) -> dict[tuple, int]:
    """Normal-order an elementary string into canonical N-strings.

    Result maps (creators ascending, annihilators ascending) to an integer
    coefficient, where the represented string has creators ascending and
    annihilators *written* descending (same convention as AOperator).
    """
    out: dict[tuple, int] = {}
    stack: list[tuple[list[_Elem], int]] = [(list(seq), coeff)]
    while stack:
        s, cf = stack.pop()
        swap_at = -1
        for i in range(len(s) - 1):
            if not s[i][1] and s[i + 1][1]:  # annihilator left of creator
                swap_at = i
                break
        if swap_at >= 0:
            i = swap_at
            p, q = s[i][0], s[i + 1][0]
            if p == q:
                stack.append((s[:i] + s[i + 2 :], cf))  # contraction: a a+ = 1 - a+ a
            stack.append((s[:i] + [s[i + 1], s[i]] + s[i + 2 :], -cf))
            continue
        creators = [p for p, is_cre in s if is_cre]
        annihil = [p for p, is_cre in s if not is_cre]
        if len(set(creators)) != len(creators) or len(set(annihil)) != len(annihil):
            continue
        s1, cre = _sort_parity(creators)
        s2, ann_written = _sort_parity(annihil, reverse=True)
        key = (cre, tuple(reversed(ann_written)))
        out[key] = out.get(key, 0) + cf * s1 * s2
        if out[key] == 0:
            del out[key]
    return out


def _nstring_to_aop(cre: tuple[int, ...], ann: tuple[int, ...]) -> tuple[int, AOperator]:
    """Rewrite a normal-ordered string as a canonical AOperator (paired
    indices become number projectors), tracking the rearrangement parity."""
    paired = sorted(set(cre) & set(ann))
    if not paired:
        return 1, AOperator(cre, ann)
    a = tuple(p for p in cre if p not in paired)
    b = tuple(p for p in ann if p not in paired)
    op = AOperator(a, b, tuple(paired))
    source: list[_Elem] = [(p, True) for p in cre] + [(p, False) for p in reversed(ann)]
    target = list(op.elementary())
    # permutation parity between two orderings of the same distinct symbols
    pos = {sym: i for i, sym in enumerate(source)}
    perm = [pos[sym] for sym in target]
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign, op


class OperatorSum:
    """Canonical sum of (ScalarExpr, AOperator) terms, like terms merged."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[ScalarExpr, AOperator]] = ()):
        merged: dict[AOperator, ScalarExpr] = {}
        for coeff, op in terms:
            if op in merged:
                merged[op] = merged[op] + coeff
            else:
                merged[op] = coeff
        kept = [(c, op) for op, c in merged.items() if not c.is_zero()]
        kept.sort(key=lambda t: t[1].sort_key())
        object.__setattr__(self, "terms", tuple(kept))

    @classmethod
    def of(cls, op: AOperator, coeff: ScalarExpr | None = None) -> "OperatorSum":
        return cls([(coeff if coeff is not None else ScalarExpr.one(), op)])

    @classmethod
    def zero(cls) -> "OperatorSum":
        return cls()

    def is_zero(self) -> bool:
        return not self.terms

    def __iter__(self) -> Iterator[tuple[ScalarExpr, AOperator]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        return OperatorSum(self.terms + other.terms)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + other.scale(ScalarExpr.rational(-1))

    def scale(self, factor: ScalarExpr) -> "OperatorSum":
        return OperatorSum([(c * factor, op) for c, op in self.terms])

    def __neg__(self) -> "OperatorSum":
        return self.scale(ScalarExpr.rational(-1))

    def adjoint(self) -> "OperatorSum":
        return OperatorSum([(c, op.adjoint()) for c, op in self.terms])

    def mul(self, other: "OperatorSum") -> "OperatorSum":
        out: list[tuple[ScalarExpr, AOperator]] = []
        for c1, op1 in self.terms:
            for c2, op2 in other.terms:
                for coeff, op in product_terms(op1, op2):
                    out.append((c1 * c2 * coeff, op))
        return OperatorSum(out)

    def expand_projectors(self) -> "OperatorSum":
        """Eliminate hole projectors: (1-n_d) products expand to signed
        number-projector terms, giving the unique normal-ordered basis."""
        out: list[tuple[ScalarExpr, AOperator]] = []
        for coeff, op in self.terms:
            if not op.d_indices:
                out.append((coeff, op))
                continue
            d = op.d_indices
            for mask in range(1 << len(d)):
                subset = [d[i] for i in range(len(d)) if mask >> i & 1]
                sign = -1 if len(subset) % 2 else 1
                new_c = tuple(sorted(set(op.c_indices) | set(subset)))
                out.append(
                    (coeff * sign, AOperator(op.a_indices, op.b_indices, new_c))
                )
        return OperatorSum(out)

    def same_operator(self, other: "OperatorSum") -> bool:
        """Equality as operators (compares the projector-free expansions)."""
        return self.expand_projectors().terms == other.expand_projectors().terms

    def render(self) -> str:
        if not self.terms:
            return "(0)"
        return " + ".join(f"{c.render()} {op.render()}" for c, op in self.terms)

    def __repr__(self):
        return f"OperatorSum({self.render()})"

    def __eq__(self, other):
        return isinstance(other, OperatorSum) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)


def product_terms(x: AOperator, y: AOperator) -> list[tuple[ScalarExpr, AOperator]]:
    """Normal-ordered canonical expansion of the product x*y."""
    ordered = _normal_order(x.elementary() + y.elementary())
    out = []
    for (cre, ann), coeff in ordered.items():
        sign, op = _nstring_to_aop(cre, ann)
        out.append((ScalarExpr.rational(coeff * sign), op))
    return out


def commutator(x: AOperator, y: AOperator) -> OperatorSum:
    """xy - yx as a canonical OperatorSum.

    Fast pre-filters: fully disjoint operators commute unless both carry an
    odd number of unpaired fermionic operators (then they anticommute); a
    shared unpaired creator (or annihilator) leaves a squared fermionic
    operator in every term of both products, so the commutator vanishes.
    """
    if not (x.orbitals() & y.orbitals()):
        fx = len(x.a_indices) + len(x.b_indices)
        fy = len(y.a_indices) + len(y.b_indices)
        if fx % 2 == 0 or fy % 2 == 0:
            return OperatorSum.zero()
    if set(x.a_indices) & set(y.a_indices) or set(x.b_indices) & set(y.b_indices):
        return OperatorSum.zero()
    terms = [(c, op) for c, op in product_terms(x, y)]
    terms.extend((-c, op) for c, op in product_terms(y, x))
    return OperatorSum(terms)
