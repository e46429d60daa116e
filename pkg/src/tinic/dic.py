"""Linear deterministic interference channel.

Regime classification, the exact capacity polytope, and rank-based
evaluation of generator-matrix schemes.  Everything here is exact:
integers for exponents, ``Fraction`` for rates and vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable

from . import gf2
from .errors import DegenerateChannel, InvalidArgument, SchemeShapeError

if TYPE_CHECKING:
    from .schemes import Scheme


@dataclass(frozen=True)
class DicParams:
    """Channel exponents; ``n12`` is the cross link into receiver 1 from user 2."""

    n11: int
    n12: int
    n21: int
    n22: int

    def __post_init__(self):
        for name in ("n11", "n12", "n21", "n22"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise InvalidArgument(f"{name} must be a nonnegative int, got {v!r}")
        if max(self.n11, self.n12, self.n21, self.n22) > gf2.Q_MAX:
            raise InvalidArgument(f"exponents above {gf2.Q_MAX} are not supported")

    @classmethod
    def from_weak_order(cls, n11: int, n22: int, n12: int, n21: int) -> "DicParams":
        """Build from the (n11, n22, n12, n21) order used for the weak-regime tables."""
        return cls(n11=n11, n12=n12, n21=n21, n22=n22)

    @property
    def q(self) -> int:
        return max(self.n11, self.n12, self.n21, self.n22)

    @property
    def degenerate(self) -> bool:
        return self.n11 == self.n12 == self.n21 == self.n22

    def direct(self, k: int) -> int:
        return self.n11 if k == 1 else self.n22

    def cross(self, k: int) -> int:
        """Exponent of the interference link into receiver k."""
        return self.n12 if k == 1 else self.n21

    def swapped(self) -> "DicParams":
        return DicParams(n11=self.n22, n12=self.n21, n21=self.n12, n22=self.n11)

    def as_dict(self) -> dict:
        return {"n11": self.n11, "n12": self.n12, "n21": self.n21, "n22": self.n22, "q": self.q}


@dataclass(frozen=True)
class RatePair:
    r1: Fraction
    r2: Fraction

    def __init__(self, r1, r2):
        object.__setattr__(self, "r1", Fraction(r1))
        object.__setattr__(self, "r2", Fraction(r2))
        if self.r1 < 0 or self.r2 < 0:
            raise InvalidArgument(f"rates must be nonnegative, got ({r1}, {r2})")

    def __iter__(self):
        return iter((self.r1, self.r2))

    def as_tuple(self) -> tuple[Fraction, Fraction]:
        return (self.r1, self.r2)

    def to_json(self) -> dict:
        return {"r1": _frac_json(self.r1), "r2": _frac_json(self.r2)}

    def __repr__(self) -> str:
        return f"RatePair({self.r1}, {self.r2})"


def _frac_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


# Regimes as strict orderings of (n11, n22, n12, n21), highest first.
REGIME_ORDERS: dict[str, tuple[str, ...]] = {
    "Weak1": ("n11", "n22", "n12", "n21"),
    "Weak2": ("n11", "n22", "n21", "n12"),
    "Weak3": ("n11", "n21", "n22", "n12"),
    "Strong1": ("n12", "n21", "n11", "n22"),
    "Strong2": ("n21", "n12", "n11", "n22"),
    "Strong3": ("n21", "n11", "n12", "n22"),
    "Mixed1": ("n11", "n12", "n22", "n21"),
    "Mixed2": ("n11", "n21", "n12", "n22"),
    "Mixed3": ("n11", "n12", "n21", "n22"),
    "Mixed4": ("n12", "n11", "n21", "n22"),
    "Mixed5": ("n12", "n11", "n22", "n21"),
    "Mixed6": ("n21", "n11", "n22", "n12"),
}

_SWAP = {"n11": "n22", "n22": "n11", "n12": "n21", "n21": "n12"}


@dataclass(frozen=True)
class RegimeLabel:
    cls: str
    detail: tuple[str, ...] = ()
    users_swapped: bool = False

    def to_json(self) -> dict:
        return {"class": self.cls, "detail": list(self.detail), "users_swapped": self.users_swapped}

    def __str__(self) -> str:
        s = self.cls
        if self.users_swapped:
            s += " (users swapped)"
        if self.detail:
            s += " [" + ", ".join(self.detail) + "]"
        return s


def _order_holds(vals: dict[str, int], order: tuple[str, ...], strict: bool) -> bool:
    for a, b in zip(order, order[1:]):
        if strict and not vals[a] > vals[b]:
            return False
        if not strict and not vals[a] >= vals[b]:
            return False
    return True


def _matching_labels(vals: dict[str, int], strict: bool) -> list[tuple[str, bool]]:
    out = []
    for name, order in REGIME_ORDERS.items():
        if _order_holds(vals, order, strict):
            out.append((name, False))
        if _order_holds(vals, tuple(_SWAP[x] for x in order), strict):
            out.append((name, True))
    return out


def classify_regime(p: DicParams) -> RegimeLabel:
    """Table-of-regimes classification.

    Orderings not in the table are covered by relabeling the users; such
    results carry ``users_swapped=True``.  Ties among the exponents give
    class ``Boundary`` with every non-strictly matching label in ``detail``.
    """
    if p.degenerate:
        raise DegenerateChannel("n11 = n12 = n21 = n22 is excluded")
    if min(p.n11, p.n22) >= p.n12 + p.n21:
        return RegimeLabel("VeryWeak")
    if min(p.n12, p.n21) >= p.n11 + p.n22:
        return RegimeLabel("VeryStrong")
    vals = {"n11": p.n11, "n12": p.n12, "n21": p.n21, "n22": p.n22}
    strict = _matching_labels(vals, strict=True)
    if len(strict) == 1:
        name, swapped = strict[0]
        return RegimeLabel(name, (), swapped)
    loose = _matching_labels(vals, strict=False)
    ties = [f"{a}={b}" for a, b in itertools.combinations(("n11", "n22", "n12", "n21"), 2)
            if vals[a] == vals[b]]
    labels = [name + ("~swapped" if sw else "") for name, sw in loose]
    return RegimeLabel("Boundary", tuple(ties + labels))


@dataclass(frozen=True)
class CapacityPolytope:
    params: DicParams
    halfplanes: tuple[tuple[int, int, int], ...]
    vertices: tuple[RatePair, ...]

    def to_json(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "halfplanes": [list(h) for h in self.halfplanes],
            "vertices": [[_frac_json(v.r1), _frac_json(v.r2)] for v in self.vertices],
        }


def _pos(x: int) -> int:
    return max(x, 0)


def outer_bound_halfplanes(p: DicParams) -> list[tuple[int, int, int]]:
    """All constraint families for k = 1, 2 plus nonnegativity, as (a1, a2, b)."""
    out: list[tuple[int, int, int]] = []
    for k in (1, 2):
        kb = 3 - k
        nkk, nkbkb = p.direct(k), p.direct(kb)
        nkkb, nkbk = p.cross(k), p.cross(kb)

        def coeffs(ak: int, akb: int) -> tuple[int, int]:
            return (ak, akb) if k == 1 else (akb, ak)

        out.append((*coeffs(1, 0), nkk))
        out.append((*coeffs(1, 1), _pos(nkk - nkkb) + max(nkbkb, nkkb)))
        out.append((*coeffs(1, 1), max(nkbk, _pos(nkk - nkkb)) + max(nkkb, _pos(nkbkb - nkbk))))
        out.append((*coeffs(2, 1), max(nkk, nkbk) + _pos(nkk - nkkb) + max(nkkb, _pos(nkbkb - nkbk))))
    out.append((-1, 0, 0))
    out.append((0, -1, 0))
    return out


def _satisfies(hs: Iterable[tuple[int, int, int]], r1: Fraction, r2: Fraction) -> bool:
    return all(a * r1 + b * r2 <= c for a, b, c in hs)


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull(points: list[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    """Monotone-chain hull in exact arithmetic; collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for pt in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper: list = []
    for pt in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return lower[:-1] + upper[:-1]


def capacity_polytope(p: DicParams) -> CapacityPolytope:
    hs = outer_bound_halfplanes(p)
    lines = sorted(set(hs))
    cands = []
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        r1 = Fraction(c1 * b2 - c2 * b1, det)
        r2 = Fraction(a1 * c2 - a2 * c1, det)
        if _satisfies(hs, r1, r2):
            cands.append((r1, r2))
    hull = _hull(cands)
    r1max = max(v[0] for v in hull)
    r2max = max(v[1] for v in hull)
    keep = [v for v in hull if v != (0, 0) or r1max == 0 or r2max == 0]
    keep.sort(key=lambda v: (v[0], -v[1]))
    return CapacityPolytope(p, tuple(hs), tuple(RatePair(*v) for v in keep))


def contains(poly: CapacityPolytope, r: RatePair) -> bool:
    return _satisfies(poly.halfplanes, Fraction(r.r1), Fraction(r.r2))


def is_vertex(poly: CapacityPolytope, r: RatePair) -> bool:
    return any(v.as_tuple() == (Fraction(r.r1), Fraction(r.r2)) for v in poly.vertices)


# ---------------------------------------------------------------- schemes

def _check_shape(p: DicParams, s: "Scheme") -> None:
    if s.q != p.q:
        raise SchemeShapeError(f"scheme q={s.q} does not match channel q={p.q}")
    for k in (1, 2):
        total = sum(b.rows for b in s.user(k).blocks)
        if total != p.q:
            raise SchemeShapeError(f"user {k} blocks cover {total} rows, expected q={p.q}")


def receiver_matrices(p: DicParams, s: "Scheme", k: int) -> tuple[gf2.BitMatrix, gf2.BitMatrix]:
    """(A_k G_k, B_k G_kbar) for receiver k."""
    kb = 3 - k
    a = gf2.shift_channel(p.q, p.direct(k))
    b = gf2.shift_channel(p.q, p.cross(k))
    return gf2.multiply(a, s.generator(k)), gf2.multiply(b, s.generator(kb))


def evaluate_rates(p: DicParams, s: "Scheme") -> RatePair:
    _check_shape(p, s)
    rates = []
    for k in (1, 2):
        own, other = receiver_matrices(p, s, k)
        rates.append(gf2.rank(gf2.hstack(own, other)) - gf2.rank(other))
    return RatePair(*rates)


@dataclass
class VerificationReport:
    passed: bool
    rates: RatePair | None
    target: RatePair | None
    checks: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "rates": self.rates.to_json() if self.rates else None,
            "target": self.target.to_json() if self.target else None,
            "checks": self.checks,
            "failures": self.failures,
        }


def _occupancy(p: DicParams, s: "Scheme", k: int) -> tuple[list, list]:
    """Receiver-k row intervals of every sub block copy.

    Returns (own, other), each a list of (sub_id, copy_index, set_of_rows)
    in receiver coordinates, dropping rows shifted below the noise floor.
    """
    kb = 3 - k
    res = []
    for user, n in ((k, p.direct(k)), (kb, p.cross(k))):
        shift = p.q - n
        copies = []
        seen: dict[str, int] = {}
        top = 0
        for blk in s.user(user).blocks:
            if blk.kind == "sub" and blk.rows > 0:
                idx = seen.get(blk.sub, 0)
                seen[blk.sub] = idx + 1
                rows = {top + shift + i for i in range(blk.rows) if top + shift + i < p.q}
                copies.append((blk.sub, idx, rows))
            top += blk.rows
        res.append(copies)
    return res[0], res[1]


def _drop_aligned_replicas(own: list, other: list) -> tuple[list, list]:
    """Treat an overlapping replica copy as zero, as long as its twin survives."""

    def reduce(mine: list, theirs: list) -> list:
        theirs_rows = set().union(*[c[2] for c in theirs]) if theirs else set()
        counts: dict[str, int] = {}
        for sid, _, _ in mine:
            counts[sid] = counts.get(sid, 0) + 1
        out = []
        for sid in counts:
            copies = [c for c in mine if c[0] == sid]
            if len(copies) == 2:
                clash = [bool(c[2] & theirs_rows) for c in copies]
                if clash[0] != clash[1]:
                    copies = [c for c, bad in zip(copies, clash) if not bad]
            out.extend(copies)
        return out

    own2 = reduce(own, other)
    other2 = reduce(other, own2)
    return own2, other2


def verify_scheme(p: DicParams, s: "Scheme", target: RatePair | None = None) -> VerificationReport:
    failures: list[str] = []
    checks: dict = {}
    if target is None:
        target = RatePair(s.user(1).target_rate, s.user(2).target_rate)
    try:
        _check_shape(p, s)
    except SchemeShapeError as e:
        return VerificationReport(False, None, target, {"shape": False}, [f"shape: {e}"])
    checks["shape"] = True

    structural = s.structure_problems()
    checks["structure"] = not structural
    failures.extend(f"structure: {m}" for m in structural)

    rates = evaluate_rates(p, s)
    for k in (1, 2):
        g = s.generator(k)
        own, _ = receiver_matrices(p, s, k)
        r_target = s.user(k).target_rate
        ra, rg = gf2.rank(own), gf2.rank(g)
        ok = ra == rg == r_target
        checks[f"P2_user{k}"] = {"rank_AG": ra, "rank_G": rg, "r": r_target, "ok": ok}
        if not ok:
            failures.append(f"P2 user {k}: rank(AG)={ra}, rank(G)={rg}, r={r_target}")

        own_c, other_c = _drop_aligned_replicas(*_occupancy(p, s, k))
        other_rows = set().union(*[c[2] for c in other_c]) if other_c else set()
        clashes = sorted({c[0] for c in own_c if c[2] & other_rows})
        checks[f"P1_receiver{k}"] = {"ok": not clashes, "clashing_subs": clashes}
        if clashes:
            failures.append(f"P1 receiver {k}: own subs {clashes} share rows with interference")

    checks["rates_match_target"] = rates.as_tuple() == target.as_tuple()
    if not checks["rates_match_target"]:
        failures.append(f"rates {rates.as_tuple()} differ from target {target.as_tuple()}")
    poly = capacity_polytope(p)
    checks["target_in_polytope"] = contains(poly, target)
    if not checks["target_in_polytope"]:
        failures.append("target outside the capacity polytope")
    return VerificationReport(not failures, rates, target, checks, failures)
