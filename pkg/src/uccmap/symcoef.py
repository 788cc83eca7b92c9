"""Exact symbolic scalars for amplitude algebra.

A :class:`ScalarExpr` is a finite rational-weighted sum of monomials in
trigonometric atoms of named angles.  The atom functions are ``sin``,
``cos`` and ``lncos`` (= ln(cos)), plus ``theta`` for the bare angle, which
is only needed to write the exponent of a unitary factor before it has been
disentangled.  ``tan`` and ``sec`` normalize to ``sin*cos^-1`` and
``cos^-1`` on construction.

This is deliberately a *closed* normal form: like monomials merge, zero
monomials drop, atom order is fixed — and nothing else.  There are no
Pythagorean or half-angle identities; two expressions are equal exactly
when their normal forms coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import AngleOutOfDomain

_FUNCS = ("theta", "sin", "cos", "lncos")
_FUNC_ORDER = {name: k for k, name in enumerate(_FUNCS)}


@dataclass(frozen=True, order=True)
class AngleId:
    """Name of one unitary-factor amplitude, optionally rescaled.

    ``scale`` supports Trotterization, where every angle is divided by the
    step count; ``sin(t/2)`` is an atom of the scaled angle, unrelated (in
    the normal form) to ``sin(t)``.
    """

    label: str
    scale: Fraction = Fraction(1)

    def scaled(self, factor: Fraction | int) -> "AngleId":
        return AngleId(self.label, self.scale * Fraction(factor))

    def value(self, assign: Mapping[str, float]) -> float:
        theta = assign[self.label]
        if abs(theta) >= math.pi / 2:
            raise AngleOutOfDomain(
                f"angle {self.label}={theta!r} has magnitude >= pi/2"
            )
        return float(self.scale) * theta

    def render(self) -> str:
        if self.scale == 1:
            return self.label
        if self.scale.numerator == 1:
            return f"{self.label}/{self.scale.denominator}"
        return f"{self.scale.numerator}*{self.label}/{self.scale.denominator}"


def _atom_key(angle: AngleId, func: str):
    return (angle.label, angle.scale.numerator, angle.scale.denominator,
            _FUNC_ORDER[func])


# A monomial key is a sorted tuple of ((angle, func), power) with power != 0.
_MonKey = tuple


def _sort_atoms(atoms: Mapping) -> _MonKey:
    items = [(af, p) for af, p in atoms.items() if p != 0]
    items.sort(key=lambda it: _atom_key(it[0][0], it[0][1]))
    return tuple(items)


class ScalarExpr:
    """Immutable canonical sum of trigonometric monomials."""

    __slots__ = ("_mons",)

    def __init__(self, monomials: Mapping[_MonKey, Fraction] | None = None):
        mons = {}
        if monomials:
            for key, coeff in monomials.items():
                if coeff != 0:
                    mons[key] = Fraction(coeff)
        object.__setattr__(self, "_mons", mons)

    # -- constructors ---------------------------------------------------

    @classmethod
    def rational(cls, num, den: int = 1) -> "ScalarExpr":
        q = Fraction(num, den) if den != 1 else Fraction(num)
        return cls({(): q}) if q != 0 else cls()

    @classmethod
    def zero(cls) -> "ScalarExpr":
        return cls()

    @classmethod
    def one(cls) -> "ScalarExpr":
        return cls.rational(1)

    @classmethod
    def _atom(cls, angle: AngleId, func: str, power: int = 1) -> "ScalarExpr":
        return cls({(((angle, func), power),): Fraction(1)})

    @classmethod
    def sin(cls, angle: AngleId) -> "ScalarExpr":
        return cls._atom(angle, "sin")

    @classmethod
    def cos(cls, angle: AngleId, power: int = 1) -> "ScalarExpr":
        return cls._atom(angle, "cos", power)

    @classmethod
    def tan(cls, angle: AngleId) -> "ScalarExpr":
        # tan := sin * cos^-1 by normalization
        return cls({_sort_atoms({(angle, "sin"): 1, (angle, "cos"): -1}): Fraction(1)})

    @classmethod
    def sec(cls, angle: AngleId) -> "ScalarExpr":
        return cls._atom(angle, "cos", -1)

    @classmethod
    def lncos(cls, angle: AngleId) -> "ScalarExpr":
        return cls._atom(angle, "lncos")

    @classmethod
    def angle(cls, angle: AngleId) -> "ScalarExpr":
        """The bare angle itself (exponent of an undisentangled factor)."""
        return cls._atom(angle, "theta")

    # -- ring operations ------------------------------------------------

    def __add__(self, other: "ScalarExpr") -> "ScalarExpr":
        mons = dict(self._mons)
        for key, coeff in other._mons.items():
            mons[key] = mons.get(key, Fraction(0)) + coeff
        return ScalarExpr(mons)

    def __neg__(self) -> "ScalarExpr":
        return ScalarExpr({k: -c for k, c in self._mons.items()})

    def __sub__(self, other: "ScalarExpr") -> "ScalarExpr":
        return self + (-other)

    def __mul__(self, other) -> "ScalarExpr":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return ScalarExpr()
            return ScalarExpr({k: c * other for k, c in self._mons.items()})
        mons = {}
        for k1, c1 in self._mons.items():
            for k2, c2 in other._mons.items():
                atoms = dict(k1)
                for af, p in k2:
                    atoms[af] = atoms.get(af, 0) + p
                key = _sort_atoms(atoms)
                mons[key] = mons.get(key, Fraction(0)) + c1 * c2
        return ScalarExpr(mons)

    __rmul__ = __mul__

    def pow_int(self, n: int) -> "ScalarExpr":
        """Integer power; negative powers require a single monomial."""
        if n == 0:
            return ScalarExpr.one()
        if n < 0:
            return self.inverse().pow_int(-n)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def inverse(self) -> "ScalarExpr":
        """Reciprocal of a single-monomial expression."""
        if len(self._mons) != 1:
            raise ValueError("only single-monomial expressions are invertible")
        ((key, coeff),) = self._mons.items()
        return ScalarExpr({tuple((af, -p) for af, p in key): 1 / coeff})

    # -- predicates and evaluation ---------------------------------------

    def is_zero(self) -> bool:
        return not self._mons

    def is_one(self) -> bool:
        return self._mons == {(): Fraction(1)}

    def is_monomial(self) -> bool:
        return len(self._mons) == 1

    def as_fraction(self) -> Fraction | None:
        """The exact rational value if the expression is constant."""
        if not self._mons:
            return Fraction(0)
        if len(self._mons) == 1 and () in self._mons:
            return self._mons[()]
        return None

    def angles(self) -> set[AngleId]:
        out = set()
        for key in self._mons:
            for (angle, _func), _p in key:
                out.add(angle)
        return out

    def eval_numeric(self, assign: Mapping[str, float]) -> float:
        """Evaluate at an angle assignment; sin/cos/ln(cos) computed once
        per (angle, scale)."""
        cache: dict[AngleId, tuple[float, float, float, float]] = {}

        def values(angle: AngleId):
            if angle not in cache:
                x = angle.value(assign)
                c = math.cos(x)
                cache[angle] = (x, math.sin(x), c, math.log(c))
            return cache[angle]

        total = 0.0
        for key, coeff in self._mons.items():
            term = float(coeff)
            for (angle, func), power in key:
                x, s, c, lc = values(angle)
                base = {"theta": x, "sin": s, "cos": c, "lncos": lc}[func]
                term *= base**power
            total += term
        return total

    def equal(self, other: "ScalarExpr", check_numeric: bool = True) -> bool:
        """Structural equality of normal forms.

        When the normal forms coincide, a seeded sweep of 8 random angle
        assignments must agree numerically; a mismatch would mean the
        canonicalization itself is broken, so it raises.
        """
        same = self._mons == other._mons
        if same and check_numeric and self._mons:
            import random

            rng = random.Random(0x5CA1A)
            labels = {a.label for a in self.angles() | other.angles()}
            for _ in range(8):
                assign = {lab: rng.uniform(-1.3, 1.3) for lab in labels}
                va, vb = self.eval_numeric(assign), other.eval_numeric(assign)
                scale = max(1.0, abs(va), abs(vb))
                if abs(va - vb) > 1e-9 * scale:
                    raise AssertionError(
                        "structurally equal expressions disagree numerically"
                    )
        return same

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarExpr) and self._mons == other._mons

    def __hash__(self):
        return hash(frozenset(self._mons.items()))

    # -- rendering --------------------------------------------------------

    def _sorted_items(self):
        return sorted(self._mons.items(), key=lambda it: it[0])

    def render(self) -> str:
        """Deterministic text form, e.g. ``(+1) sin(t1) cos(t2)^-1``."""
        if not self._mons:
            return "(0)"
        parts = []
        for key, coeff in self._sorted_items():
            sign = "+" if coeff >= 0 else "-"
            mag = abs(coeff)
            frag = f"({sign}{mag})"
            for (angle, func), power in key:
                name = f"{func}({angle.render()})"
                frag += f" {name}" if power == 1 else f" {name}^{power}"
            parts.append(frag)
        return " + ".join(parts)

    def to_json(self):
        out = []
        for key, coeff in self._sorted_items():
            atoms = [
                {
                    "angle": angle.label,
                    "scale": str(angle.scale),
                    "func": func,
                    "power": power,
                }
                for (angle, func), power in key
            ]
            out.append({"coeff": str(coeff), "atoms": atoms})
        return out

    def __repr__(self):
        return f"ScalarExpr({self.render()})"


def exp_scalar(expr: ScalarExpr) -> ScalarExpr:
    """Exponential of an expression, when it stays inside the normal form.

    Representable summands are integer multiples of a single ``lncos``
    atom, which exponentiate to cosine powers, and rational constants,
    which exponentiate to an exact binary-rational float.  Anything else
    raises ``ValueError`` (the caller decides whether that means a stuck
    normalization).
    """
    out = ScalarExpr.one()
    for key, coeff in expr._mons.items():
        if key == ():
            out = out * ScalarExpr.rational(Fraction(math.exp(coeff)))
            continue
        if len(key) == 1:
            (angle, func), power = key[0]
            if func == "lncos" and power == 1 and coeff.denominator == 1:
                out = out * ScalarExpr.cos(angle, int(coeff))
                continue
        raise ValueError(f"exp of {expr.render()!r} leaves the normal form")
    return out


def product(exprs: Iterable[ScalarExpr]) -> ScalarExpr:
    out = ScalarExpr.one()
    for e in exprs:
        out = out * e
    return out
