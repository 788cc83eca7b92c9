"""Rank-by-rank extraction of coupled cluster amplitudes from a wavefunction.

Given an intermediate-normalized state, the rank-n amplitude of each rank-n
determinant is its coefficient minus whatever exp(T) of the already-fixed
lower ranks generates there; after processing rank n the reconstruction
matches the state exactly on every determinant of rank <= n.  Amplitudes
within one rank never feed each other at that rank (their exponential
cross terms land at higher rank), so the in-rank processing order is
irrelevant and fixed to lexicographic for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

from .errors import RankOverflow, ReferenceDepleted
from .fockoracle import (
    StateVector,
    apply_aop,
    apply_exp_series,
    excitation_rank,
    occ_list,
    reference_det,
)
from .opalg import OperatorSum, make_excitation
from .symcoef import ScalarExpr

REFERENCE_TOL = 1e-12

AmpKey = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass
class CCAmplitudes:
    """Cluster amplitudes keyed by (occupied tuple, virtual tuple) per rank."""

    n_orbitals: int
    n_electrons: int
    per_rank: dict[int, dict[AmpKey, float]] = field(default_factory=dict)

    def set(self, occ: tuple[int, ...], virt: tuple[int, ...], value: float) -> None:
        self.per_rank.setdefault(len(occ), {})[(occ, virt)] = value

    def get(self, occ: tuple[int, ...], virt: tuple[int, ...]) -> float:
        return self.per_rank.get(len(occ), {}).get((occ, virt), 0.0)

    def max_rank(self) -> int:
        return max((n for n, amps in self.per_rank.items() if amps), default=0)

    def count(self) -> int:
        return sum(len(v) for v in self.per_rank.values())

    def items_sorted(self) -> Iterator[tuple[int, AmpKey, float]]:
        for n in sorted(self.per_rank):
            for key in sorted(self.per_rank[n]):
                yield n, key, self.per_rank[n][key]

    def cluster_opsum(self) -> OperatorSum:
        terms = []
        for _n, (occ, virt), value in self.items_sorted():
            if value == 0.0:
                continue
            terms.append((ScalarExpr.rational(Fraction(value)), make_excitation(occ, virt)))
        return OperatorSum(terms)

    def to_json(self) -> list[dict]:
        return [
            {"rank": n, "occ": list(occ), "virt": list(virt), "value": value}
            for n, (occ, virt), value in self.items_sorted()
        ]

    @classmethod
    def from_json(cls, n_orbitals: int, n_electrons: int, entries) -> "CCAmplitudes":
        out = cls(n_orbitals, n_electrons)
        for entry in entries:
            out.set(tuple(entry["occ"]), tuple(entry["virt"]), float(entry["value"]))
        return out


def intermediate_normalize(s: StateVector) -> StateVector:
    """Scale so the reference determinant carries coefficient one."""
    ref = reference_det(s.n_electrons)
    coeff = s.coefficient(ref)
    if abs(coeff) < REFERENCE_TOL:
        raise ReferenceDepleted(
            f"reference coefficient {coeff!r} is numerically zero"
        )
    return s.scale(1.0 / coeff)


def reconstruct(t: CCAmplitudes, symbolic: bool = False) -> StateVector:
    """exp(sum of cluster operators) applied to the reference."""
    ref_state = StateVector.reference(t.n_orbitals, t.n_electrons, symbolic=symbolic)
    opsum = t.cluster_opsum()
    if opsum.is_zero():
        return ref_state
    return apply_exp_series(opsum, ref_state, assign={})


def _det_key(det: int, ref: int) -> AmpKey:
    occ = tuple(occ_list(ref & ~det))
    virt = tuple(occ_list(det & ~ref))
    return occ, virt


def eliminate(
    s: StateVector,
    max_rank: int | None = None,
    allow_residual: bool = False,
) -> tuple[CCAmplitudes, float]:
    """Extract amplitudes rank by rank; returns (amplitudes, residual).

    ``s`` must be intermediate normalized.  The residual is the largest
    coefficient mismatch on determinants above ``max_rank``; without
    ``allow_residual`` any support beyond ``max_rank`` raises RankOverflow
    up front.  A determinant whose coefficient vanishes while the lower
    ranks predict otherwise receives the compensating negative amplitude.
    """
    ref = reference_det(s.n_electrons)
    if abs(s.coefficient(ref)) < REFERENCE_TOL:
        raise ReferenceDepleted("state has no reference component")
    full_rank = min(s.n_electrons, s.n_orbitals - s.n_electrons)
    if max_rank is None:
        max_rank = full_rank
    overflow = [det for det in s.amps if excitation_rank(det, ref) > max_rank]
    if overflow and not allow_residual:
        raise RankOverflow(
            f"state has support at rank {max(excitation_rank(d, ref) for d in overflow)} "
            f"> max_rank {max_rank}"
        )

    t = CCAmplitudes(s.n_orbitals, s.n_electrons)
    predicted = reconstruct(t)
    for rank in range(1, max_rank + 1):
        dets = sorted(
            det
            for det in set(s.amps) | set(predicted.amps)
            if excitation_rank(det, ref) == rank
        )
        entries = sorted((_det_key(det, ref), det) for det in dets)
        new_rank = False
        for (occ, virt), det in entries:
            sign, _ = apply_aop(make_excitation(occ, virt), ref)
            value = (s.coefficient(det) - predicted.coefficient(det)) * sign
            if abs(value) > REFERENCE_TOL:
                t.set(occ, virt, value)
                new_rank = True
        if new_rank:
            predicted = reconstruct(t)

    residual = 0.0
    for det in set(s.amps) | set(predicted.amps):
        if excitation_rank(det, ref) > max_rank:
            residual = max(residual, abs(s.coefficient(det) - predicted.coefficient(det)))
    return t, residual
