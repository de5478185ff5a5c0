"""Dyadic-ring decomposition around a reference point for measures with
unbounded support, and the resulting three-term transport bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .measures import DiscreteMeasure, MeasureError, mix, restrict
from .ot_exact import wpp_mcf, wpp_to_point


@dataclass(frozen=True)
class Ring:
    i: int                 # ring index; outer radius 2^i
    mass_a: float          # first measure's mass on the ring
    mass_b: float          # second measure's mass on the ring
    lam_i: float           # min(mass_a, mass_b)
    cond_a: Optional[DiscreteMeasure]
    cond_b: Optional[DiscreteMeasure]


@dataclass(frozen=True)
class RingDecomposition:
    x0: int
    rings: Tuple[Ring, ...]
    lam: float
    excess_a: Optional[DiscreteMeasure]   # normalized excess of the first
    excess_b: Optional[DiscreteMeasure]   # normalized excess of the second
    mu_a: DiscreteMeasure
    mu_b: DiscreteMeasure

    @property
    def excess_defined(self) -> bool:
        return self.excess_a is not None

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "lambda": self.lam,
            "rings": [{"i": r.i, "mass_a": r.mass_a, "mass_b": r.mass_b,
                       "lambda_i": r.lam_i} for r in self.rings],
            "excess_defined": self.excess_defined,
        }


def ring_index(dist: float) -> int:
    """Ring id: 1 for the ball of radius 2, else i with 2^{i-1} < d <= 2^i."""
    if dist <= 2.0:
        return 1
    return int(np.ceil(np.log2(dist) - 1e-12))


def ring_decompose(mu_a: DiscreteMeasure, mu_b: DiscreteMeasure,
                   x0: int) -> RingDecomposition:
    """Split two measures over dyadic annuli around x0.

    Returns the per-ring shared masses lam_i, the total excess lam, the
    conditional measures on each ring, and the normalized excess measures
    (flagged undefined when lam = 0).
    """
    if mu_a.space is not mu_b.space:
        raise MeasureError("measures live on different spaces")
    space = mu_a.space
    if not (0 <= x0 < space.n):
        raise MeasureError("x0 out of range")

    atoms = np.union1d(mu_a.idx, mu_b.idx)
    d = space.distance_block(np.asarray([x0]), atoms)[0]
    rid = np.array([ring_index(float(t)) for t in d])

    rings: List[Ring] = []
    pos_parts_a = []   # (excess weight, conditional) for the first measure
    pos_parts_b = []
    for i in sorted(set(int(r) for r in rid)):
        members = atoms[rid == i]
        cond_a, a = restrict(mu_a, members)
        cond_b, b = restrict(mu_b, members)
        if a == 0.0 and b == 0.0:
            continue
        rings.append(Ring(i, a, b, min(a, b), cond_a, cond_b))
        if a > b:
            pos_parts_a.append((a - b, cond_a))
        elif b > a:
            pos_parts_b.append((b - a, cond_b))

    lam_from_a = sum(w for w, _ in pos_parts_a)
    lam_from_b = sum(w for w, _ in pos_parts_b)
    if abs(lam_from_a - lam_from_b) > 1e-12:
        raise MeasureError("excess masses disagree beyond tolerance")
    lam = 0.5 * (lam_from_a + lam_from_b)
    if lam <= 1e-12:   # rounding residue, not genuine excess mass
        lam = 0.0

    if lam > 0.0:
        excess_a = mix([(w / lam, m) for w, m in pos_parts_a])
        excess_b = mix([(w / lam, m) for w, m in pos_parts_b])
    else:
        excess_a = excess_b = None

    return RingDecomposition(int(x0), tuple(rings), float(lam),
                             excess_a, excess_b, mu_a, mu_b)


def verify_reconstruction(dec: RingDecomposition, tol: float = 1e-12) -> None:
    """Check mu = sum_i lam_i * (conditional on ring i) + lam * excess,
    atomwise, for both measures."""
    for which in ("a", "b"):
        orig = dec.mu_a if which == "a" else dec.mu_b
        acc: Dict[int, float] = {}
        for r in dec.rings:
            cond = r.cond_a if which == "a" else r.cond_b
            if r.lam_i > 0.0 and cond is not None:
                for i, w in zip(cond.idx, cond.weights):
                    acc[int(i)] = acc.get(int(i), 0.0) + r.lam_i * w
        exc = dec.excess_a if which == "a" else dec.excess_b
        if dec.lam > 0.0:
            for i, w in zip(exc.idx, exc.weights):
                acc[int(i)] = acc.get(int(i), 0.0) + dec.lam * w
        for i, w in zip(orig.idx, orig.weights):
            if abs(acc.get(int(i), 0.0) - w) > tol:
                raise MeasureError(
                    f"reconstruction fails at atom {int(i)}: "
                    f"{acc.get(int(i), 0.0)} vs {w}")
        extra = set(acc) - set(int(i) for i in orig.idx)
        if any(abs(acc[i]) > tol for i in extra):
            raise MeasureError("reconstruction has spurious atoms")


@dataclass(frozen=True)
class MixtureBound:
    total: float
    main: float
    remainder_a: float
    remainder_b: float
    per_ring: Tuple[Tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {"total": self.total, "main": self.main,
                "remainder_a": self.remainder_a,
                "remainder_b": self.remainder_b,
                "per_ring": [list(t) for t in self.per_ring]}


def mixture_bound(dec: RingDecomposition, p: float) -> MixtureBound:
    """Three-term upper bound on W_p^p between the decomposed measures:
    per-ring transport at shared mass, plus the excess measures moved
    through the reference point."""
    main = 0.0
    per_ring = []
    for r in dec.rings:
        if r.lam_i > 0.0:
            v, _ = wpp_mcf(r.cond_a, r.cond_b, p)
            main += r.lam_i * v.value
            per_ring.append((r.i, r.lam_i * v.value))
        else:
            per_ring.append((r.i, 0.0))
    if dec.lam > 0.0:
        factor = 2.0 ** (p - 1.0) * dec.lam
        rem_a = factor * wpp_to_point(dec.excess_a, dec.x0, p)
        rem_b = factor * wpp_to_point(dec.excess_b, dec.x0, p)
    else:
        rem_a = rem_b = 0.0
    return MixtureBound(main + rem_a + rem_b, main, rem_a, rem_b,
                        tuple(per_ring))


def verify_mixture_convexity(mus: Sequence[DiscreteMeasure],
                             nus: Sequence[DiscreteMeasure],
                             lams: Sequence[float], p: float) -> dict:
    """Transport cost of a mixture never exceeds the mixture of transport
    costs; returns both sides and the gap (must be >= -1e-9)."""
    lams = np.asarray(lams, dtype=float)
    if abs(lams.sum() - 1.0) > 1e-10:
        raise MeasureError("mixture weights must sum to 1")
    lhs_mu = mix(list(zip(lams, mus)))
    lhs_nu = mix(list(zip(lams, nus)))
    lhs, _ = wpp_mcf(lhs_mu, lhs_nu, p)
    rhs = 0.0
    for lam, m, n in zip(lams, mus, nus):
        if lam == 0.0:
            continue
        v, _ = wpp_mcf(m, n, p)
        rhs += lam * v.value
    return {"lhs": lhs.value, "rhs": rhs, "gap": rhs - lhs.value, "p": p}
