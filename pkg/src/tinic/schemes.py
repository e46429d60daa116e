"""Generator-matrix schemes: data model, weak-regime builders, JSON exchange.

A scheme stacks, per user, zero blocks and blocks that reference a named
submatrix.  A submatrix referenced by two blocks is a replica (Type II).
Builders instantiate the distinct submatrices of user k, in order of
first appearance, as consecutive row bands of the r_k x r_k identity.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from . import gf2
from .dic import DicParams, RatePair, capacity_polytope, contains, evaluate_rates
from .errors import InvalidArgument, RegimeMismatch, SchemeParseError, SchemeShapeError


@dataclass(frozen=True)
class Block:
    kind: str  # "zero" or "sub"
    rows: int
    sub: str | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "sub"):
            raise SchemeShapeError(f"unknown block kind {self.kind!r}")
        if self.rows < 0:
            raise SchemeShapeError("block rows must be nonnegative")
        if self.kind == "zero" and self.sub is not None:
            raise SchemeShapeError("zero block cannot reference a submatrix")
        if self.kind == "sub" and not self.sub:
            raise SchemeShapeError("sub block needs a submatrix id")


@dataclass(frozen=True)
class SubSpec:
    content: gf2.BitMatrix

    @property
    def rows(self) -> int:
        return self.content.nrows

    @property
    def cols(self) -> int:
        return self.content.ncols


@dataclass(frozen=True)
class UserScheme:
    target_rate: int
    blocks: tuple[Block, ...]
    subs: dict[str, SubSpec]

    def sub_order(self) -> list[str]:
        seen: list[str] = []
        for b in self.blocks:
            if b.kind == "sub" and b.sub not in seen:
                seen.append(b.sub)
        return seen

    def copies(self, sub_id: str) -> int:
        return sum(1 for b in self.blocks if b.kind == "sub" and b.sub == sub_id)

    def rows_below(self) -> list[int]:
        """For each block, the number of rows stacked beneath it."""
        total = sum(b.rows for b in self.blocks)
        out, top = [], 0
        for b in self.blocks:
            top += b.rows
            out.append(total - top)
        return out


@dataclass(frozen=True)
class Scheme:
    q: int
    users: tuple[UserScheme, UserScheme]
    scheme_type: str  # "I" or "II"
    meta: dict = field(default_factory=dict, compare=False)

    def user(self, k: int) -> UserScheme:
        return self.users[k - 1]

    @property
    def target(self) -> RatePair:
        return RatePair(self.users[0].target_rate, self.users[1].target_rate)

    def generator(self, k: int) -> gf2.BitMatrix:
        u = self.user(k)
        parts = []
        for b in u.blocks:
            if b.kind == "zero":
                parts.append(gf2.BitMatrix.zeros(b.rows, u.target_rate))
            else:
                sub = u.subs.get(b.sub)
                if sub is None:
                    raise SchemeShapeError(f"user {k} references unknown submatrix {b.sub!r}")
                if sub.rows != b.rows or sub.cols != u.target_rate:
                    raise SchemeShapeError(f"user {k} block {b.sub!r} shape mismatch")
                parts.append(sub.content)
        return gf2.vstack_all(parts, u.target_rate)

    def replicated(self, k: int) -> list[str]:
        u = self.user(k)
        return [s for s in u.sub_order() if u.copies(s) > 1]

    def structure_problems(self) -> list[str]:
        probs: list[str] = []
        for k in (1, 2):
            u = self.user(k)
            for b in u.blocks:
                if b.kind == "sub":
                    sub = u.subs.get(b.sub)
                    if sub is None:
                        probs.append(f"user {k}: unknown submatrix {b.sub!r}")
                    elif sub.rows != b.rows:
                        probs.append(f"user {k}: block rows {b.rows} != {b.sub} rows {sub.rows}")
            for sid, sub in u.subs.items():
                if sub.cols != u.target_rate:
                    probs.append(f"user {k}: {sid} has {sub.cols} cols, target rate {u.target_rate}")
                if gf2.rank(sub.content) != sub.rows:
                    probs.append(f"user {k}: {sid} rows are not linearly independent")
                if u.copies(sid) == 0:
                    probs.append(f"user {k}: {sid} is declared but unused")
                if u.copies(sid) > 2:
                    probs.append(f"user {k}: {sid} appears {u.copies(sid)} times")
            if probs:
                continue
            order = u.sub_order()
            stacked = gf2.vstack_all([u.subs[s].content for s in order], u.target_rate)
            if gf2.rank(stacked) != u.target_rate or stacked.nrows != u.target_rate:
                probs.append(f"user {k}: distinct submatrices do not stack to rank {u.target_rate}")
            if len(self.replicated(k)) > 1:
                probs.append(f"user {k}: more than one replicated submatrix")
        reps = self.replicated(1) + self.replicated(2) if not probs else []
        if self.scheme_type == "I" and reps:
            probs.append(f"declared Type I but {reps} are replicated")
        if self.scheme_type == "II" and not probs and not reps:
            probs.append("declared Type II but nothing is replicated")
        if self.scheme_type not in ("I", "II"):
            probs.append(f"unknown scheme type {self.scheme_type!r}")
        return probs


# ------------------------------------------------------------ construction

Layout = Sequence[tuple[str | None, int]]  # (sub id or None for zeros, rows)


def _instantiate(layout: Layout) -> UserScheme:
    layout = [(sid, rows) for sid, rows in layout if rows != 0]
    for sid, rows in layout:
        if rows < 0:
            raise InvalidArgument(f"negative block width for {sid or 'zero block'}")
    order: list[str] = []
    widths: dict[str, int] = {}
    for sid, rows in layout:
        if sid is None:
            continue
        if sid in widths:
            if widths[sid] != rows:
                raise SchemeShapeError(f"replica {sid} has inconsistent widths")
        else:
            order.append(sid)
            widths[sid] = rows
    r = sum(widths.values())
    subs: dict[str, SubSpec] = {}
    col = 0
    for sid in order:
        rows = tuple(1 << (col + i) for i in range(widths[sid]))
        subs[sid] = SubSpec(gf2.BitMatrix(widths[sid], r, rows))
        col += widths[sid]
    blocks = tuple(Block("zero", rows) if sid is None else Block("sub", rows, sid)
                   for sid, rows in layout)
    return UserScheme(r, blocks, subs)


def _make(p: DicParams, g1: Layout, g2: Layout, meta: dict) -> Scheme:
    u1, u2 = _instantiate(g1), _instantiate(g2)
    reps = any(u.copies(s) > 1 for u in (u1, u2) for s in u.sub_order())
    return Scheme(p.q, (u1, u2), "II" if reps else "I", meta)


def _check_range(name: str, value: int, lo: int, hi: int) -> None:
    if not isinstance(value, int) or not lo <= value <= hi:
        raise InvalidArgument(f"{name}={value} outside [{lo}, {hi}]")


def weak1_case1_holds(p: DicParams) -> bool:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    return n11 > n22 > n12 > n21 and n11 > n12 + n21 > n22


def weak1_case2_holds(p: DicParams) -> bool:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    return (n11 > n22 > n12 > n21 and n11 < n12 + n21
            and n11 + n22 - n12 - 2 * n21 < 0
            and 2 * (n12 + n21 - n22) - n11 <= 0)


def weak1_case1_ranges(p: DicParams, segment: str) -> list[tuple[str, int, int]]:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    if segment == "A":
        return [("t1", 0, n22 - n12), ("t2", 0, n22 - n21)]
    if segment == "B":
        return [("t3", 0, n12 + n21 - n22)]
    if segment == "C":
        return [("t4", 0, n11 - n12 - n21)]
    raise InvalidArgument(f"unknown segment {segment!r}")


def _case2_shorthand(p: DicParams) -> tuple[int, int, int, int]:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    x = 2 * n21 + n12 - n11 - n22
    y = 2 * n11 + n22 - 2 * n12 - 2 * n21
    z = 2 * n22 + n11 - 2 * n12 - 2 * n21
    w = n12 - n21
    return x, y, z, w


def weak1_case2_ranges(p: DicParams, segment: str) -> list[tuple[str, int, int]]:
    x, y, z, w = _case2_shorthand(p)
    if segment == "A":
        return [("t1", 0, x), ("t2", 0, z)]
    if segment == "B":
        return [("t3", 0, w), ("t4", 0, x), ("t5", 0, w)]
    if segment == "C":
        return [("t6", 0, x), ("t7", 0, y)]
    raise InvalidArgument(f"unknown segment {segment!r}")


def build_weak1_case1(p: DicParams, segment: str, t: Sequence[int]) -> Scheme:
    if not weak1_case1_holds(p):
        raise RegimeMismatch(f"{p.as_dict()} is not in Weak1 case 1")
    ranges = weak1_case1_ranges(p, segment)
    if len(t) != len(ranges):
        raise InvalidArgument(f"segment {segment} takes {len(ranges)} tunables")
    for (name, lo, hi), v in zip(ranges, t):
        _check_range(name, v, lo, hi)
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    meta = {"builder": "weak1-1" + segment.lower(), "params": p.as_dict(), "t": list(t)}
    if segment == "A":
        t1, t2 = t
        g1 = [("F11", n21 - t1), (None, t1), ("F12", n11 - n21 - n12), (None, t2), ("F13", n12 - t2)]
        g2 = [("F21", t2), (None, n22 - n21 - t2), (None, n12 + n21 - n22),
              (None, n22 - n12 - t1), ("F22", t1), (None, n11 - n22)]
    elif segment == "B":
        (t3,) = t
        e = n12 + n21 - n22
        g1 = [(None, t3), ("F11", e - t3), (None, n22 - n12), ("F12", n11 - n12 - n21),
              (None, n22 - n21 + t3), ("F13", e - t3)]
        g2 = [("F21", n22 - n21 + t3), (None, e - t3), ("F22", n22 - n12), (None, n11 - n22)]
    else:
        (t4,) = t
        g1 = [(None, n21), (None, t4), ("F11", n11 - n12 - n21 - t4), (None, n12)]
        g2 = [("F21", n12), ("F22", n22 - n12), (None, n11 - n22)]
    return _make(p, g1, g2, meta)


def build_weak1_case2(p: DicParams, segment: str, t: Sequence[int]) -> Scheme:
    if not weak1_case2_holds(p):
        raise RegimeMismatch(f"{p.as_dict()} is not in Weak1 case 2")
    ranges = weak1_case2_ranges(p, segment)
    if len(t) != len(ranges):
        raise InvalidArgument(f"segment {segment} takes {len(ranges)} tunables")
    for (name, lo, hi), v in zip(ranges, t):
        _check_range(name, v, lo, hi)
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    x, y, z, w = _case2_shorthand(p)
    meta = {"builder": "weak1-2" + segment.lower(), "params": p.as_dict(), "t": list(t)}
    if segment == "A":
        t1, t2 = t
        g1 = [("F11", n11 - n21), ("F12", t1), ("F13", x - t1), ("F14", t2), (None, z - t2),
              ("F15", t1), ("F13", x - t1), ("F16", n11 - n21)]
        g2 = [(None, w), (None, t1), ("F21", x - t1), (None, t2), ("F22", z - t2),
              (None, n12 + n21 - n22), (None, t2), ("F23", z - t2), (None, t1),
              ("F24", x - t1), (None, n11 - n22)]
    elif segment == "B":
        t3, t4, t5 = t
        if t5 > 0 and t3 != w:
            raise InvalidArgument(f"t5={t5} requires t3={w}")
        g1 = [("F11", t4), ("F12", x - t4), ("F13", y), (None, t3), ("F14", w - t3),
              (None, t4), ("F15", x - t4), (None, z), (None, t4), ("F15", x - t4),
              ("F16", y), (None, t5), ("F17", w - t5), ("F18", t4), ("F19", x - t4)]
        g2 = [("F21", t3), (None, w - t3), ("F22", t4), ("F23", x - t4), ("F24", z),
              ("F25", t4), (None, x - t4), (None, y), ("F26", t5), (None, w - t5),
              ("F25", t4), (None, x - t4), ("F27", z), ("F28", t4), ("F29", x - t4),
              (None, n11 - n22)]
    else:
        t6, t7 = t
        g1 = [(None, t6), ("F11", x - t6), (None, t7), ("F12", y - t7), (None, n22 - n21),
              (None, x), (None, t7), ("F13", y - t7), (None, t6), ("F14", x - t6), (None, w)]
        g2 = [("F21", n22 - n21), ("F22", t6), ("F23", x - t6), ("F24", t7), (None, y - t7),
              ("F25", t6), ("F23", x - t6), ("F26", w), ("F27", n22 - n12), (None, n11 - n22)]
    return _make(p, g1, g2, meta)


def closed_form_rates(p: DicParams, builder_id: str, t: Sequence[int]) -> RatePair:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    if builder_id == "weak1-1a":
        t1, t2 = t
        return RatePair(n11 - t1 - t2, t1 + t2)
    if builder_id == "weak1-1b":
        (t3,) = t
        return RatePair(n11 + n12 + n21 - 2 * n22 - 2 * t3, 2 * n22 - n12 - n21 + t3)
    if builder_id == "weak1-1c":
        (t4,) = t
        return RatePair(n11 - n12 - n21 - t4, n22)
    if builder_id == "weak1-2a":
        t1, t2 = t
        return RatePair(n11 + n12 - n22 + t1 + t2, 2 * (n22 - n12 - t1 - t2))
    if builder_id == "weak1-2b":
        t3, t4, t5 = t
        s = t3 + t4 + t5
        return RatePair(n11 + n12 - n22 - s, 2 * (n22 - n12) + s)
    if builder_id == "weak1-2c":
        t6, t7 = t
        return RatePair(2 * (n11 - n12 - t6 - t7), n22 + n12 - n11 + t6 + t7)
    raise InvalidArgument(f"unknown builder {builder_id!r}")


def weak1_case1_corners(p: DicParams) -> list[RatePair]:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    return [RatePair(n11, 0), RatePair(n11 + n12 + n21 - 2 * n22, 2 * n22 - n12 - n21),
            RatePair(n11 - n12 - n21, n22), RatePair(0, n22)]


def weak1_case2_corners(p: DicParams) -> list[RatePair]:
    n11, n12, n21, n22 = p.n11, p.n12, p.n21, p.n22
    return [RatePair(n11, 0), RatePair(n11 + n12 - n22, 2 * (n22 - n12)),
            RatePair(2 * (n11 - n12), n22 + n12 - n11), RatePair(0, n22)]


@dataclass(frozen=True)
class BuilderEntry:
    regime: str
    segment: str
    holds: Callable[[DicParams], bool]
    ranges: Callable[[DicParams, str], list]
    build: Callable[[DicParams, str, Sequence[int]], Scheme]


REGISTRY: dict[str, BuilderEntry] = {}
for _seg in "ABC":
    REGISTRY["weak1-1" + _seg.lower()] = BuilderEntry(
        "Weak1", _seg, weak1_case1_holds, weak1_case1_ranges, build_weak1_case1)
    REGISTRY["weak1-2" + _seg.lower()] = BuilderEntry(
        "Weak1", _seg, weak1_case2_holds, weak1_case2_ranges, build_weak1_case2)


def get_builder(builder_id: str) -> BuilderEntry:
    try:
        return REGISTRY[builder_id]
    except KeyError:
        raise InvalidArgument(
            f"no builder {builder_id!r}; available: {sorted(REGISTRY)}; "
            "other regimes load hand-written schemes from JSON") from None


def build(p: DicParams, builder_id: str, t: Sequence[int]) -> Scheme:
    e = get_builder(builder_id)
    return e.build(p, e.segment, list(t))


def builders_for(p: DicParams) -> list[str]:
    return [bid for bid, e in REGISTRY.items() if e.holds(p)]


def legal_tunables(p: DicParams, builder_id: str) -> Iterator[tuple[int, ...]]:
    e = get_builder(builder_id)
    ranges = e.ranges(p, e.segment)
    for t in itertools.product(*[range(lo, hi + 1) for _, lo, hi in ranges]):
        if builder_id == "weak1-2b":
            w = ranges[0][2]
            if t[2] > 0 and t[0] != w:
                continue
        yield t


def sweep_segment(p: DicParams, builder_id: str) -> list[tuple[tuple[int, ...], RatePair]]:
    e = get_builder(builder_id)
    if not e.holds(p):
        raise RegimeMismatch(f"{builder_id} does not apply to {p.as_dict()}")
    poly = capacity_polytope(p)
    out = []
    for t in legal_tunables(p, builder_id):
        rates = evaluate_rates(p, e.build(p, e.segment, list(t)))
        if not contains(poly, rates):
            raise AssertionError(f"{builder_id} t={t} gives {rates} outside the region")
        out.append((t, rates))
    return out


# ------------------------------------------------------------------- JSON

def scheme_to_dict(s: Scheme) -> dict:
    users = []
    for u in s.users:
        users.append({
            "target_rate": u.target_rate,
            "blocks": [{"kind": b.kind, "rows": b.rows, **({"sub": b.sub} if b.sub else {})}
                       for b in u.blocks],
            "subs": {sid: {"rows": sub.rows, "matrix": sub.content.to_strings()}
                     for sid, sub in u.subs.items()},
        })
    d = {"q": s.q, "type": s.scheme_type, "users": users}
    if s.meta:
        d["meta"] = s.meta
    return d


def scheme_to_json(s: Scheme) -> str:
    return json.dumps(scheme_to_dict(s), indent=2, sort_keys=True)


def _need(d: dict, key: str, typ, loc: str):
    if not isinstance(d, dict):
        raise SchemeParseError("expected an object", loc)
    if key not in d:
        raise SchemeParseError(f"missing key {key!r}", loc)
    v = d[key]
    if typ is int and (not isinstance(v, int) or isinstance(v, bool)):
        raise SchemeParseError(f"{key!r} must be an integer", f"{loc}.{key}")
    if typ is not int and not isinstance(v, typ):
        raise SchemeParseError(f"{key!r} has the wrong type", f"{loc}.{key}")
    return v


def scheme_from_dict(d: dict) -> Scheme:
    q = _need(d, "q", int, "$")
    stype = _need(d, "type", str, "$")
    if stype not in ("I", "II"):
        raise SchemeParseError("type must be 'I' or 'II'", "$.type")
    users_raw = _need(d, "users", list, "$")
    if len(users_raw) != 2:
        raise SchemeParseError("exactly two users required", "$.users")
    users = []
    for ui, ud in enumerate(users_raw):
        loc = f"$.users[{ui}]"
        r = _need(ud, "target_rate", int, loc)
        subs_raw = _need(ud, "subs", dict, loc)
        subs = {}
        for sid, sd in subs_raw.items():
            sloc = f"{loc}.subs.{sid}"
            rows = _need(sd, "rows", int, sloc)
            mat = _need(sd, "matrix", list, sloc)
            if len(mat) != rows:
                raise SchemeParseError(f"matrix has {len(mat)} rows, declared {rows}", sloc)
            for i, line in enumerate(mat):
                if not isinstance(line, str) or len(line) != r or set(line) - {"0", "1"}:
                    raise SchemeParseError(f"row must be a {r}-char 0/1 string", f"{sloc}.matrix[{i}]")
            try:
                subs[sid] = SubSpec(gf2.BitMatrix.from_strings(mat, r))
            except InvalidArgument as e:
                raise SchemeParseError(str(e), sloc) from None
        blocks = []
        for bi, bd in enumerate(_need(ud, "blocks", list, loc)):
            bloc = f"{loc}.blocks[{bi}]"
            kind = _need(bd, "kind", str, bloc)
            rows = _need(bd, "rows", int, bloc)
            sid = bd.get("sub") if isinstance(bd, dict) else None
            if kind == "sub":
                if sid not in subs:
                    raise SchemeParseError(f"references unknown sub {sid!r}", bloc)
                if subs[sid].rows != rows:
                    raise SchemeParseError(f"rows {rows} != sub {sid} rows {subs[sid].rows}", bloc)
            try:
                blocks.append(Block(kind, rows, sid))
            except SchemeShapeError as e:
                raise SchemeParseError(str(e), bloc) from None
        total = sum(b.rows for b in blocks)
        if total != q:
            raise SchemeParseError(f"blocks cover {total} rows, expected q={q}", f"{loc}.blocks")
        users.append(UserScheme(r, tuple(blocks), subs))
    meta = d.get("meta", {})
    return Scheme(q, (users[0], users[1]), stype, meta if isinstance(meta, dict) else {})


def scheme_from_json(text: str) -> Scheme:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemeParseError(f"invalid JSON: {e.msg}", f"line {e.lineno} col {e.colno}") from None
    return scheme_from_dict(d)


def verify_construction(p: DicParams, builder_id: str, t: Sequence[int],
                        target: RatePair | None = None):
    """Build and verify in one step; range or regime violations become report failures."""
    from .dic import VerificationReport, verify_scheme

    try:
        s = build(p, builder_id, t)
    except (InvalidArgument, RegimeMismatch) as e:
        kind = "regime-mismatch" if isinstance(e, RegimeMismatch) else "parameter-range"
        return VerificationReport(False, None, target, {"constructed": False}, [f"{kind}: {e}"])
    closed = closed_form_rates(p, builder_id, t)
    rep = verify_scheme(p, s, target or closed)
    rep.checks["closed_form"] = closed.to_json()
    if rep.rates is not None and rep.rates.as_tuple() != closed.as_tuple():
        rep.passed = False
        rep.failures.append(f"rank rates {rep.rates.as_tuple()} disagree with closed form {closed.as_tuple()}")
    return rep


def random_params(builder_id: str, rng, max_exponent: int = 20, tries: int = 100000) -> DicParams:
    """Rejection-sample an exponent tuple where ``builder_id`` applies."""
    e = get_builder(builder_id)
    for _ in range(tries):
        v = sorted(rng.sample(range(0, max_exponent + 1), 4), reverse=True)
        p = DicParams.from_weak_order(*v)
        if e.holds(p):
            return p
    raise InvalidArgument(f"no tuple found for {builder_id} with exponents <= {max_exponent}")
