"""Complex Gaussian interference channel: QAM layering, phase-dependent
minimum distance, outage estimation and Monte-Carlo rates.

Every submatrix becomes a square (or 2:1 rectangular) QAM layer with unit
spacing, scaled by 2^((rows below - q)/2).  There are no guard bits and no
power adjustments here, so the composite distance depends on the relative
phase between the direct and the cross link.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .dic import DicParams
from .errors import DegenerateConstellation, InvalidArgument, SizeLimitExceeded
from .gic_real import _split_exponent, _sub_geometry, check_channel_matches
from .oracles import qam_points
from .schemes import Scheme

MI_CAP = int(os.environ.get("TINIC_MI_CAP", 2 ** 18))
DIFF_CAP = int(os.environ.get("TINIC_DIFF_CAP", 2 ** 22))
SCAN_CAP = int(os.environ.get("TINIC_ENUM_CAP", 2 ** 20))


@dataclass(frozen=True)
class ComplexChannel:
    """Link gains as log2 of linear SNR/INR, plus the four link phases."""

    g11: float
    g12: float
    g21: float
    g22: float
    theta11: float = 0.0
    theta12: float = 0.0
    theta21: float = 0.0
    theta22: float = 0.0

    @classmethod
    def from_linear(cls, snr1, snr2, inr1, inr2, phases=(0.0, 0.0, 0.0, 0.0)) -> "ComplexChannel":
        for v in (snr1, snr2, inr1, inr2):
            if not v > 0:
                raise InvalidArgument("SNR and INR must be positive")
        return cls(math.log2(snr1), math.log2(inr1), math.log2(inr2), math.log2(snr2), *phases)

    @classmethod
    def from_db(cls, snr1_db, snr2_db, inr1_db, inr2_db, phases=(0.0, 0.0, 0.0, 0.0)) -> "ComplexChannel":
        lin = [10 ** (x / 10) for x in (snr1_db, snr2_db, inr1_db, inr2_db)]
        return cls.from_linear(*lin, phases=phases)

    @classmethod
    def from_exponents(cls, p: DicParams, betas=(0.0, 0.0, 0.0, 0.0), phases=(0.0, 0.0, 0.0, 0.0)):
        """betas and phases ordered (11, 12, 21, 22)."""
        for b in betas:
            if not 0 <= b < 1:
                raise InvalidArgument("fractional offsets must lie in [0, 1)")
        return cls(p.n11 + betas[0], p.n12 + betas[1], p.n21 + betas[2], p.n22 + betas[3], *phases)

    def gain(self, k: int, j: int) -> float:
        return {(1, 1): self.g11, (1, 2): self.g12, (2, 1): self.g21, (2, 2): self.g22}[(k, j)]

    def phase(self, k: int, j: int) -> float:
        return {(1, 1): self.theta11, (1, 2): self.theta12,
                (2, 1): self.theta21, (2, 2): self.theta22}[(k, j)]

    def n(self, k: int, j: int) -> int:
        return _split_exponent(self.gain(k, j))[0]

    def beta(self, k: int, j: int) -> float:
        return _split_exponent(self.gain(k, j))[1]

    def relative_phase(self, k: int) -> float:
        return (self.phase(k, 3 - k) - self.phase(k, k)) % (2 * math.pi)

    def with_phases(self, phases) -> "ComplexChannel":
        return ComplexChannel(self.g11, self.g12, self.g21, self.g22, *phases)

    @property
    def params(self) -> DicParams:
        return DicParams(n11=self.n(1, 1), n12=self.n(1, 2), n21=self.n(2, 1), n22=self.n(2, 2))

    def to_json(self) -> dict:
        return {"snr1": 2 ** self.g11, "inr1": 2 ** self.g12, "inr2": 2 ** self.g21,
                "snr2": 2 ** self.g22,
                "phases": [self.theta11, self.theta12, self.theta21, self.theta22]}


@dataclass(frozen=True)
class QamLayer:
    owner: int
    sub_id: str
    order_exponent: int  # log2 cardinality = rank of the submatrix
    power_exponents: tuple[int, ...]

    def points(self) -> np.ndarray:
        return qam_points(self.order_exponent)


@dataclass(frozen=True)
class QamTerm:
    layer: QamLayer
    scale: complex


@dataclass(frozen=True)
class QamSuperposition:
    terms: tuple[QamTerm, ...]

    def raw_layers(self) -> list[tuple[complex, np.ndarray]]:
        return [(t.scale, t.layer.points()) for t in self.terms]

    @property
    def size(self) -> int:
        return 2 ** sum(t.layer.order_exponent for t in self.terms)

    def entropy_bits(self) -> int:
        return sum(t.layer.order_exponent for t in self.terms)

    def owned_by(self, k: int) -> "QamSuperposition":
        return QamSuperposition(tuple(t for t in self.terms if t.layer.owner == k))

    def rotated(self, theta: float) -> "QamSuperposition":
        r = complex(math.cos(theta), math.sin(theta))
        return QamSuperposition(tuple(QamTerm(t.layer, t.scale * r) for t in self.terms))

    def __add__(self, other: "QamSuperposition") -> "QamSuperposition":
        return QamSuperposition(self.terms + other.terms)


def _qam_layers(s: Scheme, k: int) -> list[QamLayer]:
    u = s.user(k)
    return [QamLayer(k, sid, u.subs[sid].rows, tuple(c[0] for c in copies))
            for sid, copies in _sub_geometry(s, k).items()]


def translate_to_qam(s: Scheme, ch: ComplexChannel) -> tuple[QamSuperposition, QamSuperposition]:
    """Transmit constellations with E|X|^2 <= 1."""
    check_channel_matches(s, ch.params)
    q = s.q
    out = []
    for k in (1, 2):
        terms = tuple(QamTerm(layer, complex(sum(2.0 ** ((pe - q) / 2) for pe in layer.power_exponents)))
                      for layer in _qam_layers(s, k))
        out.append(QamSuperposition(terms))
    return out[0], out[1]


def transmit_energy(x: QamSuperposition) -> float:
    total = 0.0
    for t in x.terms:
        m = t.layer.order_exponent
        a, b = 2 ** ((m + 1) // 2), 2 ** (m // 2)
        total += abs(t.scale) ** 2 * ((a * a - 1) + (b * b - 1)) / 12
    return total


def receiver_view(tx: tuple[QamSuperposition, QamSuperposition], rx: int, ch: ComplexChannel,
                  above_only: bool = True) -> tuple[QamSuperposition, QamSuperposition]:
    """(own, interferer) in the frame where the direct link has phase 0.

    Interferer scales are real and positive; the relative phase is applied
    separately.  With ``above_only`` copies below the noise floor are
    dropped, using the same lowest-row rule as the real channel.
    """
    q = ch.params.q
    out = []
    for k in (rx, 3 - rx):
        g, n = ch.gain(rx, k), ch.n(rx, k)
        terms = []
        for t in tx[k - 1].terms:
            pes = [pe for pe in t.layer.power_exponents if not above_only or pe >= q - n]
            if pes:
                terms.append(QamTerm(t.layer, complex(sum(2.0 ** ((g - q + pe) / 2) for pe in pes))))
        out.append(QamSuperposition(tuple(terms)))
    return out[0], out[1]


# ----------------------------------------------------------- distances

def phase_distance_sq(own_delta: complex, int_delta: complex, theta: float,
                      beta_own: float = 0.0, beta_int: float = 0.0) -> float:
    """Expanded squared distance from the real/imaginary difference terms.

    ``own_delta`` and ``int_delta`` are the weighted layer differences before
    the 2^(beta/2) link offsets and the interferer rotation.
    """
    dr, di = own_delta.real, own_delta.imag
    er, ei = int_delta.real, int_delta.imag
    cross = 2 ** ((beta_own + beta_int) / 2 + 1)
    return (2 ** beta_own * (dr * dr + di * di) + 2 ** beta_int * (er * er + ei * ei)
            + cross * math.cos(theta) * (dr * er + di * ei)
            + cross * math.sin(theta) * (er * di - dr * ei))


def _keyed_unique(z: np.ndarray) -> np.ndarray:
    key = np.round(z.real, 9) + 1j * np.round(z.imag, 9)
    _, idx = np.unique(key, return_index=True)
    return z[np.sort(idx)]


def _difference_grid(scale: complex, m: int) -> np.ndarray:
    a, b = 2 ** ((m + 1) // 2), 2 ** (m // 2)
    re = np.arange(-(a - 1), a)
    im = np.arange(-(b - 1), b)
    return scale * (re[:, None] + 1j * im[None, :]).ravel()


def _difference_set(sp: QamSuperposition, cap: int) -> np.ndarray | None:
    est = 1
    for t in sp.terms:
        m = t.layer.order_exponent
        est *= (2 ** ((m + 1) // 2 + 1) - 1) * (2 ** (m // 2 + 1) - 1)
    if est > cap:
        return None
    acc = np.zeros(1, dtype=complex)
    for t in sp.terms:
        acc = _keyed_unique((acc[:, None] + _difference_grid(t.scale, t.layer.order_exponent)[None, :]).ravel())
    return acc


def _points(sp: QamSuperposition) -> np.ndarray:
    acc = np.zeros(1, dtype=complex)
    for scale, sup in sp.raw_layers():
        acc = (acc[:, None] + scale * sup[None, :]).ravel()
    return acc


def _xy(z: np.ndarray) -> np.ndarray:
    return np.column_stack([z.real, z.imag])


class PhaseDistance:
    """Minimum distance of own + e^{j theta} interferer as a function of theta.

    The own difference set D_own is phase independent, so for each nonzero
    interferer difference b the closest own difference to -e^{j theta} b is
    one nearest-neighbour query.  When D_own is too large, the own points
    themselves are indexed and every own point is shifted instead.
    """

    def __init__(self, own: QamSuperposition, interferer: QamSuperposition,
                 diff_cap: int = DIFF_CAP, scan_cap: int = SCAN_CAP):
        if not own.terms and not interferer.terms:
            raise InvalidArgument("above-noise composite is empty")
        d_int = _difference_set(interferer, diff_cap)
        if d_int is None:
            raise SizeLimitExceeded(f"interferer difference set exceeds cap {diff_cap}")
        nz = d_int[np.abs(d_int) > 1e-12]
        # b and -b give the same distance
        keep = (nz.real > 1e-12) | ((np.abs(nz.real) <= 1e-12) & (nz.imag > 0))
        self.d_int = nz[keep]
        self.d_own = _difference_set(own, diff_cap)
        if self.d_own is not None:
            self.mode = "difference-set"
            nonzero = np.abs(self.d_own[np.abs(self.d_own) > 1e-12])
            self.own_min = float(nonzero.min()) if len(nonzero) else math.inf
            self.tree = cKDTree(_xy(self.d_own))
        else:
            if own.size > scan_cap:
                raise SizeLimitExceeded(f"own constellation of {own.size} points exceeds cap {scan_cap}")
            self.mode = "point-shift"
            self.own_pts = _points(own)
            self.tree = cKDTree(_xy(self.own_pts))
            d, _ = self.tree.query(_xy(self.own_pts), k=2)
            self.own_min = float(d[:, 1].min())

    def at(self, theta: float) -> float:
        return float(self.many(np.array([theta]))[0])

    def many(self, thetas: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        out = np.full(len(thetas), self.own_min)
        if not len(self.d_int):
            return out
        if self.mode == "difference-set":
            per = max(1, chunk // len(self.d_int))
            for s in range(0, len(thetas), per):
                th = thetas[s:s + per]
                qs = -(np.exp(1j * th)[:, None] * self.d_int[None, :]).ravel()
                d, _ = self.tree.query(_xy(qs))
                out[s:s + per] = np.minimum(out[s:s + per], d.reshape(len(th), -1).min(axis=1))
        else:
            for i, th in enumerate(thetas):
                best = out[i]
                for b in self.d_int:
                    d, _ = self.tree.query(_xy(self.own_pts - np.exp(1j * th) * b))
                    best = min(best, float(d.min()))
                out[i] = best
        return out


def min_distance_at_phase(rx: int, s: Scheme, ch: ComplexChannel, theta: float | None = None) -> float:
    """d_min of the above-noise composite at receiver ``rx``.

    ``theta`` defaults to the channel's own relative phase.
    """
    own, other = receiver_view(translate_to_qam(s, ch), rx, ch)
    th = ch.relative_phase(rx) if theta is None else theta
    return PhaseDistance(own, other).at(th)


# ------------------------------------------------------------- outage

def phase_draws(n: int, seed: int, stream: int = 0) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([seed, stream])).uniform(0, 2 * math.pi, n)


def outage_curve(dist: PhaseDistance, d_targets, samples: int, seed: int) -> list[tuple[float, float]]:
    """[(d_target, Pr{d_min < d_target})] over uniform relative phases."""
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    dm = dist.many(phase_draws(samples, seed))
    return [(float(d), float(np.mean(dm < d))) for d in d_targets]


def dmin_at_outage(dmins: np.ndarray, eta: float) -> float:
    """Largest target whose empirical outage stays at or below eta."""
    return float(np.quantile(np.asarray(dmins), eta, method="inverted_cdf"))


def layered_outage_config(m: tuple[int, int, int]) -> tuple[QamSuperposition, QamSuperposition]:
    """Three QAM layers: layers 1 and 3 share the direct phase, layer 2 is
    rotated.  Powers (1, 2^(m1/2), 2^((m1+m2)/2))."""
    m1, m2, m3 = m
    lay = lambda i, o, mm: QamLayer(o, f"L{i}", mm, (0,))
    own = QamSuperposition((QamTerm(lay(1, 1, m1), 1.0), QamTerm(lay(3, 1, m3), 2 ** ((m1 + m2) / 2))))
    other = QamSuperposition((QamTerm(lay(2, 2, m2), 2 ** (m1 / 2)),))
    return own, other


# --------------------------------------------------------- rate bounds

def ozarow_2d_penalty(d: float) -> float:
    inv = 0.0 if math.isinf(d) else 4 / (math.pi * d * d)
    return math.log2(2 * math.pi * math.e * (inv + 0.25))


def rate_lower_bound_complex(rate: float, dmin: float) -> float:
    """rate - log2(2 pi e (4/(pi d^2) + 1/4)) + log2(7/3)."""
    if not dmin > 0:
        raise DegenerateConstellation("composite minimum distance is zero")
    return rate - ozarow_2d_penalty(dmin) + math.log2(7 / 3)


def gaussian_tin_rates(ch: ComplexChannel) -> tuple[float, float]:
    snr = (2 ** ch.g11, 2 ** ch.g22)
    inr = (2 ** ch.g12, 2 ** ch.g21)
    return tuple(math.log2(1 + s / (1 + i)) for s, i in zip(snr, inr))


# ------------------------------------------------- Monte-Carlo rates

class _Mixture:
    """log sum_p exp(-|y - p|^2) over a fixed point set, pruned by k-NN.

    Neighbours are added until the discarded mass is provably below
    ``rel_tol`` of the kept mass.
    """

    def __init__(self, pts: np.ndarray, rel_tol: float = 1e-9):
        self.pts = np.asarray(pts, dtype=complex)
        self.n = len(self.pts)
        self.direct = self.n <= 64
        self.tree = None if self.direct else cKDTree(_xy(self.pts))
        self.slack = math.log(self.n) - math.log(rel_tol)

    def logsum(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=complex).ravel()
        if self.direct:
            return logsumexp(-np.abs(y[:, None] - self.pts[None, :]) ** 2, axis=1)
        out = np.empty(len(y))
        todo = np.arange(len(y))
        k = min(32, self.n)
        while len(todo):
            d, _ = self.tree.query(_xy(y[todo]), k=k)
            d2 = d * d
            done = (d2[:, -1] - d2[:, 0] >= self.slack) | (k == self.n)
            out[todo[done]] = logsumexp(-d2[done], axis=1)
            todo = todo[~done]
            k = min(4 * k, self.n)
        return out


@dataclass
class MiEstimate:
    bits: float
    stderr: float
    samples: int


def mc_mutual_information(own_pts: np.ndarray, int_pts: np.ndarray, a: complex, b: complex,
                          samples: int, rng: np.random.Generator, cap: int = MI_CAP) -> MiEstimate:
    """I(X; aX + bW + Z) for X, W uniform over the given supports, Z ~ CN(0,1).

    Exact mixture sums; the only randomness is the noise and the symbols.
    """
    own_pts = np.asarray(own_pts, dtype=complex)
    int_pts = np.asarray(int_pts, dtype=complex) if len(int_pts) else np.zeros(1, dtype=complex)
    if len(own_pts) * len(int_pts) > cap:
        raise SizeLimitExceeded(f"composite of {len(own_pts) * len(int_pts)} points exceeds cap {cap}")
    if samples < 2:
        raise InvalidArgument("need at least two samples for a standard error")
    A, B = a * own_pts, b * int_pts
    ix = rng.integers(0, len(A), samples)
    iw = rng.integers(0, len(B), samples)
    z = (rng.standard_normal(samples) + 1j * rng.standard_normal(samples)) / math.sqrt(2)
    y = A[ix] + B[iw] + z

    # index the larger set once; rotate queries so the tree never moves
    big_is_int = len(B) > len(A)
    if big_is_int:
        rot = np.exp(-1j * np.angle(b)) if b != 0 else 1.0
        mix = _Mixture(B * rot)
        cond = mix.logsum((y - A[ix]) * rot)
        total = logsumexp(mix.logsum(((y[None, :] - A[:, None]) * rot)).reshape(len(A), -1), axis=0)
    else:
        rot = np.exp(-1j * np.angle(a)) if a != 0 else 1.0
        mix = _Mixture(A * rot)
        cond = logsumexp(-np.abs((y - A[ix])[:, None] - B[None, :]) ** 2, axis=1)
        total = logsumexp(mix.logsum(((y[None, :] - B[:, None]) * rot)).reshape(len(B), -1), axis=0)
    vals = (cond - total + math.log(len(A))) / math.log(2)
    return MiEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), samples)


def discrete_input_bound_verify(count: int = 20, samples: int = 2000, seed: int = 11) -> dict:
    """I(X; X+Z) against H(X) - log2(2 pi e (4/(pi d^2) + 1/4)) on random
    two-dimensional constellations."""
    from .oracles import brute_force_min_distance

    ss = np.random.SeedSequence([seed, 5])
    rows, ok = [], True
    for i, child in enumerate(ss.spawn(count)):
        rng = np.random.default_rng(child)
        nl = int(rng.integers(1, 3))
        pts = np.zeros(1, dtype=complex)
        for _ in range(nl):
            m = int(rng.integers(1, 5))
            pts = (pts[:, None] + rng.uniform(0.3, 3.0) * np.exp(2j * math.pi * rng.uniform())
                   * qam_points(m)[None, :]).ravel()
        pts = _keyed_unique(pts)
        d = brute_force_min_distance(pts)
        est = mc_mutual_information(pts, np.zeros(1), 1.0, 0.0, samples, rng)
        bound = math.log2(len(pts)) - ozarow_2d_penalty(d)
        good = est.bits >= bound - 3 * est.stderr
        ok &= good
        rows.append({"index": i, "size": len(pts), "dmin": d, "mi": est.bits,
                     "stderr": est.stderr, "bound": bound, "holds": bool(good)})
    return {"check": "discrete-input-bound", "passed": bool(ok), "checked": count, "cases": rows}


# ------------------------------------------------ rate pair simulation

@dataclass
class PhaseResult:
    index: int
    phases: tuple[float, float, float, float]
    mi: tuple[float, float]
    stderr: tuple[float, float]
    dmin: tuple[float, float]
    bound: tuple[float, float]


@dataclass
class RateSimulation:
    per_phase: list[PhaseResult]
    mean: tuple[float, float] = field(init=False)
    stderr: tuple[float, float] = field(init=False)

    def __post_init__(self):
        mi = np.array([p.mi for p in self.per_phase])
        self.mean = tuple(float(x) for x in mi.mean(axis=0))
        n = len(mi)
        self.stderr = tuple(float(x) for x in (mi.std(axis=0, ddof=1) / math.sqrt(n) if n > 1
                                               else np.array([p.stderr for p in self.per_phase])[0]))


class _Worker:
    """Per-process cache of the phase-independent pieces of a run."""

    def __init__(self, s: Scheme, ch: ComplexChannel, mc_samples: int, seed: int, cap: int):
        self.ch, self.mc, self.seed, self.cap = ch, mc_samples, seed, cap
        tx = translate_to_qam(s, ch)
        self.full = [receiver_view(tx, k, ch, above_only=False) for k in (1, 2)]
        self.pts = [(_points(o), _points(w)) for o, w in self.full]
        self.dist, self.rate = [], []
        for k in (1, 2):
            own, other = receiver_view(tx, k, ch)
            self.dist.append(PhaseDistance(own, other))
            self.rate.append(own.entropy_bits())

    def run(self, i: int, zero_phase: bool = False) -> PhaseResult:
        if zero_phase:
            phases = (0.0, 0.0, 0.0, 0.0)
        else:
            phases = tuple(float(x) for x in phase_draws(4, self.seed, stream=1_000_003 + i))
        ch = self.ch.with_phases(phases)
        mi, se, dm, lb = [], [], [], []
        for k in (1, 2):
            th = ch.relative_phase(k)
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, i, k]))
            # receiver_view already carries the link magnitudes
            own, other = self.pts[k - 1]
            est = mc_mutual_information(own, other, 1.0, np.exp(1j * th), self.mc, rng, self.cap)
            d = self.dist[k - 1].at(th)
            mi.append(est.bits)
            se.append(est.stderr)
            dm.append(d)
            lb.append(rate_lower_bound_complex(self.rate[k - 1], d) if d > 0 else -math.inf)
        return PhaseResult(i, phases, tuple(mi), tuple(se), tuple(dm), tuple(lb))


_WORKER: _Worker | None = None


def _init_worker(args):
    global _WORKER
    _WORKER = _Worker(*args)


def _run_one(i: int) -> PhaseResult:
    return _WORKER.run(i)


def rate_pair_simulation(s: Scheme, ch: ComplexChannel, phase_samples: int, mc_samples: int,
                         seed: int, workers: int = 1, cap: int = MI_CAP,
                         zero_phase: bool = False) -> RateSimulation:
    """Average (I(X1;Y1), I(X2;Y2)) over independent uniform link phases.

    Sample i always uses the streams derived from (seed, i), so the result
    does not depend on ``workers``.
    """
    if phase_samples < 1:
        raise InvalidArgument("phase_samples must be >= 1")
    args = (s, ch, mc_samples, seed, cap)
    idx = range(phase_samples)
    if zero_phase:
        w = _Worker(*args)
        results = [w.run(i, zero_phase=True) for i in idx]
    elif workers <= 1:
        w = _Worker(*args)
        results = [w.run(i) for i in idx]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(args,)) as ex:
            results = list(ex.map(_run_one, idx, chunksize=max(1, phase_samples // (4 * workers))))
    return RateSimulation(results)

