"""Real Gaussian interference channel: PAM translation and gap certificates.

Each submatrix of a scheme becomes one PAM layer.  Its transmit scale is
2^-q times the sum over its copies of 2^(rows below the copy), times a
power adjustment rho that is non-trivial only around replicas.  Guard
reduction: a layer of rank m carries 2^(m-1) points (Type I) or 2^(m-2)
(Type II); non-positive orders collapse to the single point {0}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dic import DicParams, evaluate_rates
from .errors import DegenerateConstellation, InvalidArgument, InvalidSuperposition, RegimeMismatch
from .oracles import pam_points
from .schemes import Scheme

# 0.5*log2(2*pi*e*13/12) + 0.5*log2(7/3)
OZAROW_CONST = 0.5 * math.log2(2 * math.pi * math.e * 13 / 12) + 0.5 * math.log2(7 / 3)


def _split_exponent(x: float) -> tuple[int, float]:
    """Integer and fractional parts; a link weaker than the noise maps to (0, 0)."""
    if x < 0:
        return 0, 0.0
    n = math.floor(x + 1e-12)
    return n, max(x - n, 0.0)


@dataclass(frozen=True)
class RealChannel:
    """Link gains as 0.5*log2 of the linear SNR/INR values."""

    g11: float
    g12: float
    g21: float
    g22: float

    @classmethod
    def from_linear(cls, snr1: float, snr2: float, inr1: float, inr2: float) -> "RealChannel":
        for v in (snr1, snr2, inr1, inr2):
            if not v > 0:
                raise InvalidArgument("SNR and INR must be positive")
        return cls(0.5 * math.log2(snr1), 0.5 * math.log2(inr1), 0.5 * math.log2(inr2), 0.5 * math.log2(snr2))

    @classmethod
    def from_db(cls, snr1_db: float, snr2_db: float, inr1_db: float, inr2_db: float) -> "RealChannel":
        lin = [10 ** (x / 10) for x in (snr1_db, snr2_db, inr1_db, inr2_db)]
        return cls.from_linear(*lin)

    @classmethod
    def from_exponents(cls, p: DicParams, b11=0.0, b12=0.0, b21=0.0, b22=0.0) -> "RealChannel":
        for b in (b11, b12, b21, b22):
            if not 0 <= b < 1:
                raise InvalidArgument("fractional offsets must lie in [0, 1)")
        return cls(p.n11 + b11, p.n12 + b12, p.n21 + b21, p.n22 + b22)

    def gain(self, k: int, j: int) -> float:
        return {(1, 1): self.g11, (1, 2): self.g12, (2, 1): self.g21, (2, 2): self.g22}[(k, j)]

    def n(self, k: int, j: int) -> int:
        return _split_exponent(self.gain(k, j))[0]

    def beta(self, k: int, j: int) -> float:
        return _split_exponent(self.gain(k, j))[1]

    @property
    def params(self) -> DicParams:
        return DicParams(n11=self.n(1, 1), n12=self.n(1, 2), n21=self.n(2, 1), n22=self.n(2, 2))

    def to_json(self) -> dict:
        return {"snr1": 4 ** self.g11, "inr1": 4 ** self.g12, "inr2": 4 ** self.g21,
                "snr2": 4 ** self.g22,
                "beta": {"11": self.beta(1, 1), "12": self.beta(1, 2),
                         "21": self.beta(2, 1), "22": self.beta(2, 2)}}


@dataclass(frozen=True)
class PamLayer:
    owner: int
    sub_id: str
    rank: int
    order_exponent: int  # log2 of the point count; 0 means the single point {0}
    power_exponents: tuple[int, ...]  # rows below each copy, upper copy first
    block_rows: int
    rho: float = 1.0

    def points(self) -> np.ndarray:
        return pam_points(2 ** self.order_exponent)

    @property
    def nontrivial(self) -> bool:
        return self.order_exponent > 0


@dataclass(frozen=True)
class Term:
    layer: PamLayer
    scale: float  # total multiplier of the unit-spacing PAM variable
    copy_scales: tuple[float, ...]


@dataclass(frozen=True)
class Superposition:
    terms: tuple[Term, ...]
    guard: int = 1

    def raw_layers(self) -> list[tuple[float, np.ndarray]]:
        return [(t.scale, t.layer.points()) for t in self.terms]

    @property
    def replica_links(self) -> list[tuple[int, str]]:
        return [(t.layer.owner, t.layer.sub_id) for t in self.terms if len(t.copy_scales) > 1]

    def entropy_bits(self) -> int:
        """log2 of the support size when all sums are distinct."""
        return sum(t.layer.order_exponent for t in self.terms)

    def owned_by(self, k: int) -> "Superposition":
        return Superposition(tuple(t for t in self.terms if t.layer.owner == k), self.guard)

    def __add__(self, other: "Superposition") -> "Superposition":
        return Superposition(self.terms + other.terms, max(self.guard, other.guard))


def guard_bits(s: Scheme) -> int:
    return 2 if s.scheme_type == "II" else 1


def _sub_geometry(s: Scheme, k: int) -> dict[str, list[tuple[int, int]]]:
    """sub id -> [(rows below, block rows)] for each copy, upper copy first."""
    u = s.user(k)
    out: dict[str, list[tuple[int, int]]] = {}
    for b, below in zip(u.blocks, u.rows_below()):
        if b.kind == "sub" and b.rows > 0:
            out.setdefault(b.sub, []).append((below, b.rows))
    return out


def power_adjustments(s: Scheme, ch: RealChannel) -> dict[tuple[int, str], float]:
    """rho for every (user, sub) pair; 1 unless an alignment condition fires.

    For a replicated sub F of user k with upper copy at rows-below a and
    height h, and a sub F' of the other user with a copy at rows-below b
    and height h':
      C1: n_kk + a <= n_kkb + b < n_kk + a + h  (alignment at receiver k)
      C2: n_kbkb + b <= n_kbk + a < n_kbkb + b + h'  (alignment at receiver kb)
    """
    p = ch.params
    rho: dict[tuple[int, str], float] = {}
    for k in (1, 2):
        kb = 3 - k
        mine, theirs = _sub_geometry(s, k), _sub_geometry(s, kb)
        for sid, copies in mine.items():
            if len(copies) < 2:
                continue
            a, h = copies[0]
            for sid2, copies2 in theirs.items():
                for b, h2 in copies2:
                    if p.direct(k) + a <= p.cross(k) + b < p.direct(k) + a + h:
                        top = max(ch.beta(k, k), ch.beta(k, kb))
                        pair = (2 ** (top - ch.beta(k, k)), 2 ** (top - ch.beta(k, kb)))
                    elif p.direct(kb) + b <= p.cross(kb) + a < p.direct(kb) + b + h2:
                        top = max(ch.beta(kb, kb), ch.beta(kb, k))
                        pair = (2 ** (top - ch.beta(kb, k)), 2 ** (top - ch.beta(kb, kb)))
                    else:
                        continue
                    rho.setdefault((k, sid), pair[0])
                    rho.setdefault((kb, sid2), pair[1])
    return rho


def _layers(s: Scheme, k: int, rho: dict) -> list[PamLayer]:
    g = guard_bits(s)
    u = s.user(k)
    out = []
    for sid, copies in _sub_geometry(s, k).items():
        rank = u.subs[sid].rows
        out.append(PamLayer(owner=k, sub_id=sid, rank=rank, order_exponent=max(rank - g, 0),
                            power_exponents=tuple(c[0] for c in copies), block_rows=copies[0][1],
                            rho=rho.get((k, sid), 1.0)))
    return out


def check_channel_matches(s: Scheme, p: DicParams) -> None:
    if s.q != p.q:
        raise RegimeMismatch(f"scheme has q={s.q} but the channel gives q={p.q}")
    if evaluate_rates(p, s).as_tuple() != s.target.as_tuple():
        raise RegimeMismatch(f"scheme does not achieve its target on exponents {p.as_dict()}")


def translate_to_pam(s: Scheme, ch: RealChannel) -> tuple[Superposition, Superposition]:
    """Transmit constellations X_1, X_2 (unit average power at most)."""
    check_channel_matches(s, ch.params)
    rho = power_adjustments(s, ch)
    q = s.q
    out = []
    for k in (1, 2):
        terms = []
        for layer in _layers(s, k, rho):
            copies = tuple(2.0 ** (pe - q) * layer.rho for pe in layer.power_exponents)
            terms.append(Term(layer, sum(copies), copies))
        out.append(Superposition(tuple(terms), guard_bits(s)))
    return out[0], out[1]


def split_noise_level(tx: tuple[Superposition, Superposition], receiver: int, ch: RealChannel
                      ) -> tuple[Superposition, Superposition]:
    """Receiver-side (above, below) parts of both users' signals.

    A copy is above the noise when its lowest row sits at or above the
    floor, i.e. rows below it >= q - n for the link.  Copies whose top row
    only touches the floor stay below.
    """
    p = ch.params
    q = p.q
    above, below = [], []
    for k in (1, 2):
        link_gain = ch.gain(receiver, k)
        n = ch.n(receiver, k)
        floor_rows = q - n
        for t in tx[k - 1].terms:
            up, down = [], []
            for pe in t.layer.power_exponents:
                sc = 2.0 ** (link_gain - q + pe) * t.layer.rho
                (up if pe >= floor_rows else down).append(sc)
            if up:
                above.append(Term(t.layer, sum(up), tuple(up)))
            if down:
                below.append(Term(t.layer, sum(down), tuple(down)))
    g = tx[0].guard
    return Superposition(tuple(above), g), Superposition(tuple(below), g)


def analytic_min_distance(above: Superposition) -> float:
    """Lowest effective scale among layers with more than one point.

    Guard bits make every higher layer clear the span of the ones below,
    so the composite keeps the spacing of its lowest layer.
    """
    scales = sorted(t.scale for t in above.terms if t.layer.nontrivial)
    if not scales:
        return math.inf
    for a, b in zip(scales, scales[1:]):
        if not b > a * (1 + 1e-12):
            raise InvalidSuperposition(f"layer scales {a} and {b} are not strictly increasing")
    return scales[0]


def cardinality_exponent(above: Superposition) -> int:
    """log2 |composite| from the guard-reduced orders (2^(sum m - gL) form)."""
    return sum(max(t.layer.rank - above.guard, 0) for t in above.terms)


def rate_lower_bound(combined: Superposition, interferer: Superposition) -> float:
    d = analytic_min_distance(combined)
    if d == 0:
        raise DegenerateConstellation("composite minimum distance is zero")
    h = cardinality_exponent(combined) - cardinality_exponent(interferer)
    inv = 0.0 if math.isinf(d) else 1 / d ** 2
    return h - 0.5 * math.log2(2 * math.pi * math.e * (inv + 1 / 12)) - 0.5 * math.log2(7 / 3)


@dataclass
class GapCertificate:
    user: int
    target_rate_dic: int
    rate_lower_bound: float
    gap: float
    gap_bound: float
    dmin: float
    A_size: int
    g: int
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.gap <= self.gap_bound + 1e-12

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("user", "target_rate_dic", "rate_lower_bound", "gap",
                                              "gap_bound", "dmin", "A_size", "g", "holds")}


def gap_bound(g: int, a_size: int) -> float:
    return g * a_size + OZAROW_CONST


def gap_certificate(s: Scheme, ch: RealChannel) -> tuple[GapCertificate, GapCertificate]:
    tx = translate_to_pam(s, ch)
    g = guard_bits(s)
    certs = []
    for k in (1, 2):
        above, _ = split_noise_level(tx, k, ch)
        own = above.owned_by(k)
        lb = rate_lower_bound(above, above.owned_by(3 - k))
        r = s.user(k).target_rate
        a_size = len(own.terms)
        certs.append(GapCertificate(k, r, lb, r - lb, gap_bound(g, a_size),
                                    analytic_min_distance(above), a_size, g))
    return certs[0], certs[1]


def transmit_energy(x: Superposition) -> float:
    """Exact average energy: layers are independent, zero mean."""
    total = 0.0
    for t in x.terms:
        m = 2 ** t.layer.order_exponent
        total += t.scale ** 2 * (m * m - 1) / 12
    return total


def superposition_to_json(sp: Superposition) -> dict:
    return {"guard": sp.guard,
            "layers": [{"owner": t.layer.owner, "sub": t.layer.sub_id, "rank": t.layer.rank,
                        "order_exponent": t.layer.order_exponent,
                        "power_exponents": list(t.layer.power_exponents),
                        "rho": t.layer.rho, "scale": t.scale} for t in sp.terms]}


def support_csv(sp: Superposition) -> str:
    """Distinct support points with their probabilities, one per line."""
    from .oracles import enumerate_support

    pts = np.round(enumerate_support(sp).points, 12)
    vals, counts = np.unique(pts, return_counts=True)
    lines = ["point,probability"]
    total = counts.sum()
    lines += [f"{float(v)!r},{float(c / total)!r}" for v, c in zip(vals, counts)]
    return "\n".join(lines) + "\n"
