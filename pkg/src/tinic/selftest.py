"""Oracle and property-check suites behind ``tinic selftest``."""

from __future__ import annotations

import json
import os
import random
import time

from . import dic, gic_complex as gc, gic_real as gr, oracles, schemes


def _dump(dump_dir: str, name: str, payload: dict) -> str:
    os.makedirs(dump_dir, exist_ok=True)
    safe = "".join(c if c.isalnum() or c in "._-" else "-" for c in name)
    path = os.path.join(dump_dir, f"{safe}.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
    return path


def scheme_verifications(count: int, seed: int = 0) -> tuple[bool, list]:
    rng = random.Random(seed)
    bad = []
    ids = sorted(schemes.REGISTRY)
    for i in range(count):
        bid = ids[i % len(ids)]
        p = schemes.random_params(bid, rng)
        t = rng.choice(list(schemes.legal_tunables(p, bid)))
        rep = schemes.verify_construction(p, bid, t)
        if not rep.passed:
            bad.append({"builder": bid, "params": p.as_dict(), "t": list(t), "failures": rep.failures})
    return not bad, bad


def distance_agreement(count: int, seed: int = 0) -> tuple[bool, list]:
    """Analytic PAM distance against brute force on random instances."""
    rng = random.Random(seed)
    bad, ids = [], sorted(schemes.REGISTRY)
    done = 0
    while done < count:
        bid = ids[done % len(ids)]
        p = schemes.random_params(bid, rng, max_exponent=12)
        t = rng.choice(list(schemes.legal_tunables(p, bid)))
        s = schemes.build(p, bid, t)
        ch = gr.RealChannel.from_exponents(p, *[rng.random() for _ in range(4)])
        tx = gr.translate_to_pam(s, ch)
        for k in (1, 2):
            above, _ = gr.split_noise_level(tx, k, ch)
            c = oracles.enumerate_support(above, cap=2 ** 16) if above.terms else None
            if c is None or c.size < 2 or c.size > 2 ** 16:
                continue
            d, db = gr.analytic_min_distance(above), oracles.brute_force_min_distance(c)
            if abs(d - db) > 1e-9 * db or d < 1:
                bad.append({"scheme": schemes.scheme_to_dict(s), "channel": ch.to_json(),
                            "receiver": k, "analytic": d, "brute": db})
        done += 1
    return not bad, bad


def run(level: str = "quick", fixtures=(), dump_dir: str = "selftest-counterexamples") -> dict:
    t0 = time.time()
    results: dict[str, dict] = {}

    def record(name, passed, summary, payload=None):
        entry = {"passed": bool(passed), "summary": summary}
        if not passed and payload is not None:
            entry["dump"] = _dump(dump_dir, name, payload)
        results[name] = entry

    l4 = oracles.interleaved_verify()
    record("interleaved-gaps", l4.passed, f"{l4.checked} grid points", l4.to_json())
    ok, bad = scheme_verifications(20)
    record("scheme-verification", ok, f"20 constructions, {len(bad)} failed", {"failures": bad})

    for path in fixtures:
        name = f"fixture:{os.path.basename(path)}"
        try:
            with open(path) as fh:
                s = schemes.scheme_from_json(fh.read())
            meta = s.meta.get("params") or {}
            p = dic.DicParams(**{k: int(meta[k]) for k in ("n11", "n12", "n21", "n22")})
            rep = dic.verify_scheme(p, s)
            record(name, rep.passed, "; ".join(rep.failures) or "verified",
                   {"fixture": path, "report": rep.to_json()})
        except Exception as e:  # a broken fixture is a failed check, not a crash
            record(name, False, f"{type(e).__name__}: {e}", {"fixture": path, "error": str(e)})

    if level == "full":
        for res in (oracles.two_layer_distance_verify(), oracles.layer_chain_verify()):
            record(res.name, res.passed, f"{res.checked} applicable cases", res.to_json())
        l5 = gc.discrete_input_bound_verify()
        record("discrete-input-bound", l5["passed"], f"{l5['checked']} constellations", l5)
        ok, bad = distance_agreement(60)
        record("pam-distance-oracle", ok, f"{len(bad)} disagreements", {"cases": bad})
        ok, bad = scheme_verifications(120, seed=1)
        record("scheme-verification-wide", ok, f"120 constructions, {len(bad)} failed", {"failures": bad})

    return {"passed": all(r["passed"] for r in results.values()), "results": results,
            "seconds": time.time() - t0}
