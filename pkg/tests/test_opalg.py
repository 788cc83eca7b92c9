import random
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uccmap.errors import NonCanonicalInput
from uccmap.opalg import (
    AOperator,
    OperatorSum,
    adjoint,
    canonicalize,
    commutator,
    hole_op,
    identity_op,
    make_excitation,
    matches,
    number_op,
    product_terms,
    _normal_order,
)
from uccmap.symcoef import ScalarExpr

ONE = ScalarExpr.one()


def opsum(*pairs):
    return OperatorSum([(ScalarExpr.rational(c), op) for c, op in pairs])


# -- construction and canonicalization -------------------------------------


def test_make_excitation_singles():
    op = make_excitation([0], [2])
    assert op == AOperator((2,), (0,))
    assert op.render() == "A(a2;i0|;)"


def test_make_excitation_doubles():
    op = make_excitation([0, 1], [4, 5])
    assert op == AOperator((4, 5), (0, 1))
    # adjoint of the rank-2 excitation is the pure de-excitation
    assert op.adjoint() == AOperator((0, 1), (4, 5))


def test_make_excitation_rejects_bad_input():
    with pytest.raises(NonCanonicalInput):
        make_excitation([1], [1])
    with pytest.raises(NonCanonicalInput):
        make_excitation([1, 0], [4, 5])
    with pytest.raises(NonCanonicalInput):
        make_excitation([0, 0], [4, 5])
    with pytest.raises(NonCanonicalInput):
        make_excitation([0], [1], n_electrons=2)


def test_canonicalize_absorbs_hole_after_creator():
    # a+_2 (1-n_2) = a+_2
    coeff, op = canonicalize([2], [], d=[2])
    assert coeff == ONE
    assert op == AOperator((2,), ())


def test_canonicalize_absorbs_number_after_annihilator():
    # a_1 n_1 = a_1
    coeff, op = canonicalize([], [1], c=[1])
    assert coeff == ONE
    assert op == AOperator((), (1,))


def test_canonicalize_orthogonal_projectors_vanish():
    assert canonicalize([], [], c=[3], d=[3]) is None


def test_canonicalize_pairing_gives_number_projector():
    coeff, op = canonicalize([2], [2])
    assert coeff == ONE
    assert op == number_op(2)


def test_canonicalize_projector_dedup():
    coeff, op = canonicalize([], [], c=[4, 4], d=[1, 1])
    assert coeff == ONE
    assert op == AOperator(c_indices=(4,), d_indices=(1,))


def test_canonicalize_sorting_sign():
    # one creator swap and one annihilator swap: net sign +1
    coeff, op = canonicalize([3, 1], [0, 2])
    assert op == AOperator((1, 3), (0, 2))
    assert coeff == ONE
    # a single annihilator swap flips the sign
    coeff2, op2 = canonicalize([1, 3], [0, 2])
    assert op2 == op
    assert coeff2 == ScalarExpr.rational(-1)


def test_canonicalize_duplicate_fermionic_vanishes():
    assert canonicalize([1, 1], [0, 2]) is None
    assert canonicalize([1], [0], c=[1]) is None
    assert canonicalize([1], [0], d=[0]) is None


def _random_raw(rng, n_orb=5, max_len=3):
    def draw(k):
        return [rng.randrange(n_orb) for _ in range(k)]

    return (
        draw(rng.randint(0, max_len)),
        draw(rng.randint(0, max_len)),
        draw(rng.randint(0, 2)),
        draw(rng.randint(0, 2)),
    )


def test_canonicalize_agrees_with_normal_ordering():
    # expanding the raw string with the Wick engine must give the same
    # operator as canonicalize (after eliminating hole projectors)
    rng = random.Random(7)
    for _ in range(300):
        a, b, c, d = _random_raw(rng)
        raw_seq = (
            [(p, True) for p in a]
            + [(p, False) for p in b]
            + [e for p in c for e in ((p, True), (p, False))]
            + [e for p in d for e in ((p, False), (p, True))]
        )
        wick = OperatorSum(
            [
                (ScalarExpr.rational(coeff * sign), op)
                for (cre, ann), coeff in _normal_order(raw_seq).items()
                for sign, op in [__import__("uccmap.opalg", fromlist=["x"])._nstring_to_aop(cre, ann)]
            ]
        )
        res = canonicalize(a, b, c, d)
        if res is None:
            assert wick.is_zero()
        else:
            coeff, op = res
            assert OperatorSum.of(op, coeff).same_operator(wick)


def test_canonicalize_idempotent():
    rng = random.Random(11)
    for _ in range(300):
        a, b, c, d = _random_raw(rng)
        res = canonicalize(a, b, c, d)
        if res is None:
            continue
        coeff, op = res
        again = canonicalize(op.a_indices, tuple(reversed(op.b_indices)), op.c_indices, op.d_indices)
        assert again is not None
        assert again[0] == ONE
        assert again[1] == op


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_canonicalize_rejects_all_collisions(data):
    # any forbidden coincidence maps to Zero, never to a canonical operator
    p = data.draw(st.integers(0, 4))
    kind = data.draw(st.sampled_from(["aa", "bb", "ac", "bd", "cd"]))
    extra = data.draw(st.integers(5, 7))
    raw = {
        "aa": ([p, p], [extra, 5 + (extra + 1) % 3], [], []),
        "bb": ([extra, 5 + (extra + 1) % 3], [p, p], [], []),
        "ac": ([p], [extra], [p], []),
        "bd": ([extra], [p], [], [p]),
        "cd": ([], [], [p], [p]),
    }[kind]
    assert canonicalize(*raw) is None


# -- adjoint ---------------------------------------------------------------


def test_adjoint_examples():
    coeff, op = adjoint(AOperator((2,), (0,)))
    assert (coeff, op) == (ONE, AOperator((0,), (2,)))
    assert AOperator((4, 5), (0, 1)).adjoint() == AOperator((0, 1), (4, 5))
    assert number_op(3).adjoint() == number_op(3)
    assert hole_op(3).adjoint() == hole_op(3)


def test_adjoint_involution_and_product_rule():
    rng = random.Random(3)
    for _ in range(100):
        res = canonicalize(*_random_raw(rng))
        if res is None:
            continue
        _, op = res
        assert op.adjoint().adjoint() == op


# -- matches ----------------------------------------------------------------


def test_matches_examples():
    A = AOperator((0,), (2,))  # de-excitation partner of B
    B = AOperator((2,), (0,))
    assert matches(A, B) and matches(B, A)
    big = make_excitation([0, 1], [4, 5])
    small = AOperator((0,), (4,))  # A(i;a|)
    assert matches(small, big)
    assert not matches(big, small)
    disjoint = make_excitation([2, 3], [6, 7])
    assert not matches(make_excitation([0, 1], [4, 5]), disjoint)


# -- products and commutators ------------------------------------------------


def test_product_pauli_exclusion():
    T = make_excitation([0], [2])
    assert OperatorSum.of(T).mul(OperatorSum.of(T)).is_zero()


def test_product_TTdagger_is_plus_projector():
    T = make_excitation([0], [2])
    TTd = OperatorSum.of(T).mul(OperatorSum.of(T.adjoint()))
    # n_2 (1 - n_0) in the projector-free basis: n_2 - n_2 n_0
    expected = OperatorSum.of(AOperator(c_indices=(2,), d_indices=(0,)))
    assert TTd.same_operator(expected)


def test_commutator_with_self_vanishes():
    op = make_excitation([0, 1], [3, 4])
    assert commutator(op, op).is_zero()


def test_commutator_disjoint_vanishes():
    assert commutator(make_excitation([0], [2]), make_excitation([1], [3])).is_zero()


def test_commutator_antisymmetry():
    rng = random.Random(5)
    count = 0
    while count < 120:
        res1 = canonicalize(*_random_raw(rng, n_orb=6))
        res2 = canonicalize(*_random_raw(rng, n_orb=6))
        if res1 is None or res2 is None:
            continue
        count += 1
        x, y = res1[1], res2[1]
        assert commutator(x, y) == -commutator(y, x)


def test_commutator_shared_index_doubles_is_triples():
    # [A(il;cd|), A(ab;ij|)] with i<j<l < a<b<c<d collapses to a single
    # bare rank-3 operator A(l,a,b; j,c,d|)
    i, j, l = 0, 1, 2
    a, b, c, d = 3, 4, 5, 6
    de_exc = AOperator((i, l), (c, d))
    exc = AOperator((a, b), (i, j))
    result = commutator(de_exc, exc)
    assert len(result) == 1
    coeff, op = result.terms[0]
    assert op == AOperator((l, a, b), (j, c, d))
    assert coeff.as_fraction() in (1, -1)


def test_pseudospin_identities():
    # (T)^2 = 0, (T+)^2 = 0, T T+ T = T, T+ T T+ = T+
    for occ, virt in ([(0,), (2,)], [(0, 1), (3, 4)], [(0, 1, 2), (3, 4, 5)]):
        T = OperatorSum.of(make_excitation(occ, virt))
        Td = T.adjoint()
        assert T.mul(T).is_zero()
        assert Td.mul(Td).is_zero()
        assert T.mul(Td).mul(T) == T
        assert Td.mul(T).mul(Td) == Td


def test_operator_sum_merges_like_terms():
    op = make_excitation([0], [2])
    s = opsum((1, op), (2, op))
    assert len(s) == 1
    assert s.terms[0][0] == ScalarExpr.rational(3)
    assert (s - s).is_zero()


def test_operator_sum_term_order_deterministic():
    ops = [number_op(1), make_excitation([0], [2]), make_excitation([0, 1], [2, 3])]
    for perm in permutations(ops):
        s = OperatorSum([(ONE, op) for op in perm])
        assert [op for _, op in s.terms] == [ops[0], ops[1], ops[2]]


def test_expand_projectors():
    # 1-n_p expands to identity minus n_p
    s = OperatorSum.of(hole_op(3)).expand_projectors()
    assert s == opsum((1, identity_op()), (-1, number_op(3)))
    # completeness: n_p + (1-n_p) is the identity
    comp = OperatorSum([(ONE, number_op(3)), (ONE, hole_op(3))])
    assert comp.same_operator(OperatorSum.of(identity_op()))


def test_rendering():
    assert identity_op().render() == "A(;|;)"
    assert AOperator((3, 5), (0, 1), (2,), (4,)).render() == "A(a3,a5;i0,i1|n2;h4)"
    assert number_op(2).render() == "A(;|n2;)"


def test_product_associativity():
    rng = random.Random(17)
    count = 0
    while count < 40:
        ops = []
        while len(ops) < 3:
            res = canonicalize(*_random_raw(rng, n_orb=4, max_len=2))
            if res is not None:
                ops.append(OperatorSum.of(res[1], res[0]))
        count += 1
        x, y, z = ops
        assert x.mul(y).mul(z) == x.mul(y.mul(z))
