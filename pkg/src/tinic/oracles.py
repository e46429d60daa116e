"""Brute-force reference implementations.

Nothing here calls the analytic paths in ``gic_real`` or ``gic_complex``;
constellations are expanded from their raw layer description and every
distance is found by exhaustive comparison.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gf2
from .dic import DicParams, RatePair
from .errors import InvalidArgument, SizeLimitExceeded

ENUM_CAP = int(os.environ.get("TINIC_ENUM_CAP", 2 ** 20))


def pam_points(order: int, spacing: float = 1.0) -> np.ndarray:
    """Zero-mean PAM with ``order`` points and the given spacing; order 1 is {0}."""
    if order < 1:
        raise InvalidArgument("PAM order must be >= 1")
    return (np.arange(order) - (order - 1) / 2.0) * spacing


def qam_points(log2_order: int, spacing: float = 1.0) -> np.ndarray:
    """Zero-mean QAM of 2**log2_order points; odd orders use a 2:1 rectangle."""
    if log2_order < 0:
        raise InvalidArgument("QAM order exponent must be >= 0")
    re = pam_points(2 ** ((log2_order + 1) // 2), spacing)
    im = pam_points(2 ** (log2_order // 2), spacing)
    return (re[:, None] + 1j * im[None, :]).ravel()


@dataclass(frozen=True)
class EnumeratedConstellation:
    points: np.ndarray  # one entry per input tuple, duplicates kept
    size: int

    @property
    def distinct(self) -> int:
        return len(_unique(self.points))


def _unique(points: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(points):
        key = np.round(points.real, 12) + 1j * np.round(points.imag, 12)
        return np.unique(key)
    return np.unique(np.round(points, 12))


def enumerate_sum(layers: Sequence[tuple[complex, np.ndarray]], cap: int | None = None) -> EnumeratedConstellation:
    """Cartesian expansion of sum(scale * support) over independent layers."""
    cap = ENUM_CAP if cap is None else cap
    total = 1
    for _, sup in layers:
        total *= len(sup)
    if total > cap:
        raise SizeLimitExceeded(f"support of {total} points exceeds cap {cap}")
    acc = np.zeros(1, dtype=complex if any(np.iscomplexobj(s) or isinstance(c, complex)
                                            for c, s in layers) else float)
    for scale, sup in layers:
        acc = (acc[:, None] + scale * np.asarray(sup)[None, :]).ravel()
    return EnumeratedConstellation(acc, total)


def enumerate_support(sp, cap: int | None = None) -> EnumeratedConstellation:
    """Expand any object exposing ``raw_layers()`` -> [(scale, support)]."""
    return enumerate_sum(sp.raw_layers(), cap)


def brute_force_min_distance(c: EnumeratedConstellation | np.ndarray) -> float:
    pts = c.points if isinstance(c, EnumeratedConstellation) else np.asarray(c)
    if len(pts) < 2:
        raise InvalidArgument("minimum distance needs at least two points")
    if not np.iscomplexobj(pts):
        s = np.sort(pts)
        return float(np.min(np.diff(s)))
    if len(pts) > 4096:
        from scipy.spatial import cKDTree

        xy = np.column_stack([pts.real, pts.imag])
        d, _ = cKDTree(xy).query(xy, k=2)
        return float(d[:, 1].min())
    diff = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min())


def pairwise_min_distance(pts: np.ndarray) -> float:
    """Literal O(N^2) scan, used to cross-check the faster paths on small sets."""
    pts = np.asarray(pts)
    best = math.inf
    for i in range(len(pts)):
        d = np.abs(pts[i + 1:] - pts[i])
        if len(d):
            best = min(best, float(d.min()))
    return best


# ------------------------------------------------------------ D-IC entropy

def entropy_rate_oracle(p: DicParams, s, bound: int = 20) -> RatePair:
    """Rates from counting distinct channel outputs over all message pairs."""
    g = {k: s.generator(k) for k in (1, 2)}
    r = {k: g[k].ncols for k in (1, 2)}
    if r[1] + r[2] > bound:
        raise SizeLimitExceeded(f"r1 + r2 = {r[1] + r[2]} exceeds enumeration bound {bound}")
    q = p.q
    cw = {k: [g[k].apply(u) for u in range(2 ** r[k])] for k in (1, 2)}
    rates = []
    for k in (1, 2):
        kb = 3 - k
        own_shift, cross_shift = q - p.direct(k), q - p.cross(k)
        own = {_shift(x, own_shift, q) for x in cw[k]}
        other = {_shift(x, cross_shift, q) for x in cw[kb]}
        outputs = {a ^ b for a in own for b in other}
        # uniform messages map to uniform outputs over a coset structure,
        # so H equals log2 of the support size
        if len(outputs) & (len(outputs) - 1):
            raise ArithmeticError(f"output set of size {len(outputs)} is not a subspace")
        rates.append(len(outputs).bit_length() - len(other).bit_length())
    return RatePair(*rates)


def _shift(x: int, s: int, q: int) -> int:
    """Move bit i (row i, top = 0) to row i + s, dropping rows >= q."""
    return (x << s) & ((1 << q) - 1)


def output_entropy(a: gf2.BitMatrix, b: gf2.BitMatrix) -> float:
    """log2 of the number of distinct a*u xor b*v, by enumeration."""
    outs = {a.apply(u) ^ b.apply(v) for u in range(2 ** a.ncols) for v in range(2 ** b.ncols)}
    return math.log2(len(outs))


# ------------------------------------------------------------------ property checks

@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int
    counterexamples: list

    def to_json(self) -> dict:
        return {"check": self.name, "passed": self.passed, "checked": self.checked,
                "counterexamples": self.counterexamples[:5]}


def two_layer_distance_check(l1: np.ndarray, l2: np.ndarray, p1: float, p2: float) -> tuple[bool, bool, float, float]:
    """Two-constellation distance formula.

    Returns (applicable, holds, predicted, brute).  The formula is
    min(P1 (min L1 - max L1) + P2 d2, P1 d1) and is only claimed when
    P1 d1 < P2 d2 and the first argument is positive.
    """
    d1 = brute_force_min_distance(np.asarray(l1, dtype=float))
    d2 = brute_force_min_distance(np.asarray(l2, dtype=float))
    first = p1 * (np.min(l1) - np.max(l1)) + p2 * d2
    applicable = p1 * d1 < p2 * d2 and first > 0
    predicted = min(first, p1 * d1)
    pts = (p1 * np.asarray(l1)[:, None] + p2 * np.asarray(l2)[None, :]).ravel()
    brute = brute_force_min_distance(pts)
    return applicable, (not applicable) or math.isclose(predicted, brute, rel_tol=1e-9), predicted, brute


def two_layer_distance_verify(trials: int = 300, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad, checked = [], 0
    for _ in range(trials):
        l1 = np.sort(rng.choice(np.arange(-20, 21), size=rng.integers(2, 6), replace=False)).astype(float)
        l2 = np.sort(rng.choice(np.arange(-20, 21), size=rng.integers(2, 6), replace=False)).astype(float)
        p1 = 1.0
        span = l1.max() - l1.min()
        d2 = np.min(np.diff(l2))
        p2 = float(rng.uniform(0.5, 3.0) * (span + 1) / d2)
        app, ok, pred, brute = two_layer_distance_check(l1, l2, p1, p2)
        checked += app
        if not ok:
            bad.append({"L1": l1.tolist(), "L2": l2.tolist(), "P2": p2, "predicted": pred, "brute": brute})
    return CheckResult("two-layer-distance", not bad and checked > 0, checked, bad)


def layer_chain_verify(trials: int = 200, seed: int = 1) -> CheckResult:
    """Layer chain: when each adjacent pair keeps its lower distance and
    powers grow, the whole chain keeps P1 d1."""
    rng = np.random.default_rng(seed)
    bad, checked = [], 0
    for _ in range(trials):
        nl = int(rng.integers(2, 4))
        sups = [pam_points(int(2 ** rng.integers(1, 3))) for _ in range(nl)]
        powers = [1.0]
        for l in range(1, nl):
            span = powers[-1] * (sups[l - 1].max() - sups[l - 1].min())
            powers.append(float(span + powers[-1] * rng.uniform(1.05, 2.0)))
        pairs_ok = True
        for l in range(nl - 1):
            d_pair = brute_force_min_distance(
                (powers[l] * sups[l][:, None] + powers[l + 1] * sups[l + 1][None, :]).ravel())
            if not math.isclose(d_pair, powers[l] * 1.0, rel_tol=1e-9):
                pairs_ok = False
            if not powers[l + 1] * 1.0 > powers[l] * 1.0:
                pairs_ok = False
        if not pairs_ok:
            continue
        checked += 1
        pts = enumerate_sum([(pw, s) for pw, s in zip(powers, sups)]).points
        d = brute_force_min_distance(pts)
        if not math.isclose(d, powers[0], rel_tol=1e-9):
            bad.append({"powers": powers, "orders": [len(s) for s in sups], "dmin": d})
    return CheckResult("layer-chain", not bad and checked > 0, checked, bad)


def interleaved_subsets(m1: int, m2: int, d: float) -> list[np.ndarray]:
    """The decomposition of 2^m1 L + (2^m1 + 1) L, L = PAM(2^m2, d), into
    2^(m2+1) - 1 shifted sub-constellations, indexed t = 1 .. 2^(m2+1) - 1."""
    n = 2 ** m2
    out = []
    for t in range(1, 2 * n):
        if t >= n:
            lo, hi = -(3 * n - 1) / 2 + t, (n - 1) / 2
        else:
            lo, hi = -(n - 1) / 2, -(n + 1) / 2 + t
        psi = np.arange(lo, hi + 0.5) * d
        out.append(2 ** m1 * (t - n) * d + psi)
    return out


def interleaved_gap(m1: int, m2: int, t: int, d: float) -> float:
    n = 2 ** m2
    if n <= t <= 2 * n - 2:
        return (2 + 2 ** m1 - 2 * n + t) * d
    return (1 + 2 ** m1 - t) * d


def interleaved_verify(m1_max: int = 6, spacings: Sequence[float] = (1.0, 0.5)) -> CheckResult:
    bad, checked = [], 0
    for m1 in range(1, m1_max + 1):
        for m2 in range(1, m1 + 1):
            for d in spacings:
                checked += 1
                lam = pam_points(2 ** m2, d)
                full = (2 ** m1 * lam[:, None] + (2 ** m1 + 1) * lam[None, :]).ravel()
                case = {"m1": m1, "m2": m2, "d": d}
                dm = brute_force_min_distance(full)
                if not math.isclose(dm, d, rel_tol=1e-12):
                    bad.append({**case, "issue": "dmin", "value": dm})
                subs = interleaved_subsets(m1, m2, d)
                union = np.sort(np.concatenate(subs))
                if len(union) != len(full) or not np.allclose(union, np.sort(full), atol=1e-12):
                    bad.append({**case, "issue": "union"})
                    continue
                for t in range(1, 2 ** (m2 + 1) - 1):
                    a, b = subs[t - 1], subs[t]
                    gap = float(np.min(b) - np.max(a))
                    if not math.isclose(gap, interleaved_gap(m1, m2, t, d), rel_tol=1e-12):
                        bad.append({**case, "issue": "gap", "t": t, "gap": gap,
                                    "expected": interleaved_gap(m1, m2, t, d)})
    return CheckResult("interleaved-gaps", not bad, checked, bad)


def energy_check(layers: Sequence[tuple[float, np.ndarray]]) -> tuple[bool, float]:
    """Average energy of the enumerated transmit support is at most 1."""
    pts = enumerate_sum(layers).points
    e = float(np.mean(np.abs(pts) ** 2))
    return e <= 1 + 1e-12, e



def mc_mutual_information_real(own_pts: np.ndarray, int_pts: np.ndarray, samples: int,
                               rng: np.random.Generator) -> tuple[float, float]:
    """I(X; X + W + Z), Z ~ N(0,1), by plain Monte-Carlo with full mixture sums.

    Returns (bits, standard error).  Meant for small real constellations.
    """
    from scipy.special import logsumexp

    own = np.asarray(own_pts, dtype=float)
    oth = np.asarray(int_pts, dtype=float) if len(int_pts) else np.zeros(1)
    x = own[rng.integers(0, len(own), samples)]
    w = oth[rng.integers(0, len(oth), samples)]
    y = x + w + rng.standard_normal(samples)
    comp = (own[:, None] + oth[None, :]).ravel()
    vals = np.empty(samples)
    for s in range(0, samples, 256):
        yy = y[s:s + 256]
        cond = logsumexp(-0.5 * (yy[:, None] - x[s:s + 256, None] - oth[None, :]) ** 2, axis=1)
        tot = logsumexp(-0.5 * (yy[:, None] - comp[None, :]) ** 2, axis=1)
        vals[s:s + 256] = (cond - tot + math.log(len(own))) / math.log(2)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))
