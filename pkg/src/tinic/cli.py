"""Command-line front end.

Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 regime
mismatch, 4 resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import dic, gic_complex as gc, gic_real as gr, oracles, schemes
from .dic import DicParams, RatePair
from .errors import InvalidArgument, RegimeMismatch, TinicError
from .manifest import RunManifest, load_config


def _params(vals) -> DicParams:
    """--n takes n11 n12 n21 n22."""
    if vals is None or len(vals) != 4:
        raise InvalidArgument("--n needs four exponents: n11 n12 n21 n22")
    return DicParams(*[int(v) for v in vals])


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    return repr(float(x))


def _load_scheme(path: str) -> schemes.Scheme:
    try:
        with open(path) as fh:
            return schemes.scheme_from_json(fh.read())
    except OSError as e:
        raise InvalidArgument(f"cannot read {path}: {e.strerror}") from None


def _scheme_params(s: schemes.Scheme, n) -> DicParams:
    if n is not None:
        return _params(n)
    meta = s.meta.get("params")
    if isinstance(meta, dict):
        return DicParams(**{k: int(meta[k]) for k in ("n11", "n12", "n21", "n22")})
    raise InvalidArgument("scheme has no recorded exponents; pass --n")


def _default_scheme(p: DicParams, builder: str | None, t) -> schemes.Scheme:
    if builder is None:
        ids = schemes.builders_for(p)
        if not ids:
            raise RegimeMismatch(f"no built-in builder for {dic.classify_regime(p)}; "
                                 "load a hand-written scheme with --scheme")
        builder = ids[0]
    if t is None:
        t = [0] * len(schemes.get_builder(builder).ranges(p, schemes.get_builder(builder).segment))
    return schemes.build(p, builder, t)


def _write_manifest(man: RunManifest, out: str | None, path: str | None) -> None:
    target = path or (out + ".manifest.json" if out else None)
    if target:
        with open(target, "w") as fh:
            fh.write(man.to_json() + "\n")


# ------------------------------------------------------------ commands

def cmd_classify(a) -> int:
    lab = dic.classify_regime(_params(a.n))
    _emit(json.dumps(lab.to_json()) + "\n" if a.json else str(lab) + "\n", None)
    return 0


def cmd_capacity(a) -> int:
    poly = dic.capacity_polytope(_params(a.n))
    if a.format == "json":
        text = json.dumps(poly.to_json(), indent=2) + "\n"
    else:
        rows = ["kind,a1,a2,b,r1,r2"]
        rows += [f"halfplane,{h[0]},{h[1]},{h[2]},," for h in poly.halfplanes]
        rows += [f"vertex,,,,{v.r1},{v.r2}" for v in poly.vertices]
        text = "\n".join(rows) + "\n"
    _emit(text, a.out)
    return 0


def cmd_scheme(a) -> int:
    p = _params(a.n)
    builder = a.builder
    if builder is None and a.segment:
        matches = [b for b in schemes.builders_for(p) if schemes.get_builder(b).segment == a.segment.upper()]
        if not matches:
            raise RegimeMismatch(f"no built-in builder with segment {a.segment} for {dic.classify_regime(p)}")
        builder = matches[0]
    s = _default_scheme(p, builder, a.t)
    _emit(schemes.scheme_to_json(s) + "\n", a.out)
    if a.out:
        print(f"{s.meta['builder']} t={s.meta['t']} rates {s.target.r1},{s.target.r2} -> {a.out}")
    return 0


def cmd_verify(a) -> int:
    s = _load_scheme(a.scheme)
    p = _scheme_params(s, a.n)
    target = RatePair(*a.target) if a.target else None
    rep = dic.verify_scheme(p, s, target)
    _emit(json.dumps(rep.to_json(), indent=2) + "\n", a.out)
    return 0 if rep.passed else 1


def _gic_scheme(a, p: DicParams) -> schemes.Scheme:
    if a.scheme:
        s = _load_scheme(a.scheme)
        return s
    return _default_scheme(p, a.builder, a.t)


def cmd_gic(a) -> int:
    if a.snr is None or a.inr is None:
        raise InvalidArgument("gic needs --snr S1 S2 and --inr I1 I2 (dB)")
    (s1, s2), (i1, i2) = a.snr, a.inr
    caps = {"mi_cap": a.cap, "diff_cap": gc.DIFF_CAP, "enum_cap": oracles.ENUM_CAP}
    params = {k: v for k, v in vars(a).items() if k not in ("func", "config")}
    man = RunManifest(f"gic {a.what}", params, a.seed, caps)

    if a.what == "gap":
        ch = gr.RealChannel.from_db(s1, s2, i1, i2)
        s = _gic_scheme(a, ch.params)
        certs = gr.gap_certificate(s, ch)
        rows = ["user,target_rate_bits_per_real_dim,rate_lower_bound_bits_per_real_dim,gap_bits,"
                "gap_bound_bits,dmin,A_size,guard_bits,holds"]
        rows += [f"{c.user},{c.target_rate_dic},{_fmt(c.rate_lower_bound)},{_fmt(c.gap)},"
                 f"{_fmt(c.gap_bound)},{_fmt(c.dmin)},{c.A_size},{c.g},{int(c.holds)}" for c in certs]
        text = "\n".join(rows) + "\n"
        ok = all(c.holds for c in certs)
    else:
        ch = gc.ComplexChannel.from_db(s1, s2, i1, i2)
        s = _gic_scheme(a, ch.params)
        ok = True
        if a.what == "dmin":
            tx = gc.translate_to_qam(s, ch)
            rows = ["receiver,theta_rad,dmin,dmin_brute_force"]
            for k in (1, 2):
                own, other = gc.receiver_view(tx, k, ch)
                d = gc.PhaseDistance(own, other).at(a.theta)
                brute = ""
                if own.size * other.size <= oracles.ENUM_CAP:
                    pts = oracles.enumerate_sum((own + other.rotated(a.theta)).raw_layers()).points
                    brute = _fmt(oracles.brute_force_min_distance(pts))
                rows.append(f"{k},{_fmt(a.theta)},{_fmt(d)},{brute}")
        elif a.what == "outage":
            own, other = gc.receiver_view(gc.translate_to_qam(s, ch), a.rx, ch)
            curve = gc.outage_curve(gc.PhaseDistance(own, other), a.targets, a.samples, a.seed)
            rows = ["d_delta,eta"] + [f"{_fmt(d)},{_fmt(e)}" for d, e in curve]
        else:
            sim = gc.rate_pair_simulation(s, ch, a.phases, a.mc_samples, a.seed, a.workers, a.cap)
            tin = gc.gaussian_tin_rates(ch)
            cid = s.meta.get("builder", "scheme")
            rows = ["config_id,R1_bits_per_complex_use,R2_bits_per_complex_use,stderr1_bits,stderr2_bits",
                    f"{cid},{_fmt(sim.mean[0])},{_fmt(sim.mean[1])},{_fmt(sim.stderr[0])},{_fmt(sim.stderr[1])}",
                    f"gaussian_tin,{_fmt(tin[0])},{_fmt(tin[1])},0.0,0.0"]
            man.parameters["mc_depth_per_phase"] = a.mc_samples
        text = "\n".join(rows) + "\n"
    _emit(text, a.out)
    if a.out:
        man.record_output(a.out, text)
    _write_manifest(man, a.out, a.manifest)
    return 0 if ok else 1


def cmd_selftest(a) -> int:
    from . import selftest

    report = selftest.run(a.level, fixtures=a.fixture or [], dump_dir=a.dump_dir)
    for name, res in report["results"].items():
        print(f"{'PASS' if res['passed'] else 'FAIL'} {name}: {res.get('summary', '')}")
        if not res["passed"] and res.get("dump"):
            print(f"  counterexample: {res['dump']}")
    print(f"selftest {a.level} finished in {report['seconds']:.1f} s")
    return 0 if report["passed"] else 1


# -------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tinic", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("--config", help="JSON file mirroring the long flags; flags win")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="regime of an exponent tuple")
    c.add_argument("--n", nargs=4, type=int, metavar=("N11", "N12", "N21", "N22"))
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("capacity", help="deterministic-channel capacity region")
    c.add_argument("--n", nargs=4, type=int, metavar=("N11", "N12", "N21", "N22"))
    c.add_argument("--format", choices=["csv", "json"], default="csv")
    c.add_argument("--out")
    c.set_defaults(func=cmd_capacity)

    c = sub.add_parser("scheme", help="build a scheme from the registry")
    c.add_argument("--n", nargs=4, type=int, metavar=("N11", "N12", "N21", "N22"))
    c.add_argument("--builder", help="e.g. weak1-2a")
    c.add_argument("--segment", choices=["A", "B", "C", "a", "b", "c"])
    c.add_argument("--t", nargs="*", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_scheme)

    c = sub.add_parser("verify", help="check a scheme JSON file")
    c.add_argument("--scheme", required=True)
    c.add_argument("--n", nargs=4, type=int, metavar=("N11", "N12", "N21", "N22"))
    c.add_argument("--target", nargs=2, type=int, metavar=("R1", "R2"))
    c.add_argument("--out")
    c.set_defaults(func=cmd_verify)

    c = sub.add_parser("gic", help="Gaussian channel certificates and simulations")
    c.add_argument("what", choices=["rates", "gap", "dmin", "outage"])
    c.add_argument("--snr", nargs=2, type=float, metavar=("SNR1_DB", "SNR2_DB"))
    c.add_argument("--inr", nargs=2, type=float, metavar=("INR1_DB", "INR2_DB"))
    c.add_argument("--scheme")
    c.add_argument("--builder")
    c.add_argument("--t", nargs="*", type=int)
    c.add_argument("--theta", type=float, default=0.0, help="relative phase for dmin (rad)")
    c.add_argument("--rx", type=int, choices=[1, 2], default=1)
    c.add_argument("--targets", nargs="+", type=float, default=[0.25, 0.5, 1.0])
    c.add_argument("--samples", type=int, default=10000, help="phase draws for outage")
    c.add_argument("--phases", type=int, default=500, help="phase samples for rates")
    c.add_argument("--mc-samples", type=int, default=200, help="noise samples per phase")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--cap", type=int, default=gc.MI_CAP)
    c.add_argument("--out")
    c.add_argument("--manifest")
    c.set_defaults(func=cmd_gic)

    c = sub.add_parser("selftest", help="run oracle and property-check suites")
    c.add_argument("--level", choices=["quick", "full"], default="quick")
    c.add_argument("--fixture", nargs="*", help="scheme JSON files to verify")
    c.add_argument("--dump-dir", default="selftest-counterexamples")
    c.set_defaults(func=cmd_selftest)
    return ap


def parse(argv=None) -> argparse.Namespace:
    ap = build_parser()
    a = ap.parse_args(argv)
    if a.config:
        conf = load_config(a.config)
        # re-parse with config values as defaults so explicit flags win
        sub = ap._subparsers._group_actions[0].choices[a.command]
        known = {act.dest for act in sub._actions}
        sub.set_defaults(**{k: v for k, v in conf.items() if k in known})
        a = ap.parse_args(argv)
    return a


def main(argv=None) -> int:
    try:
        a = parse(argv)
        return a.func(a)
    except TinicError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
