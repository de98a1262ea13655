"""Smoke test for the spectra_py extension.

Build and install first, e.g.
    cd crates/python && maturin develop --release
then run
    python python/smoke_test.py
"""

import json

import spectra_py as sp


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok   {msg}")


def main():
    names = sp.list_scenarios()
    check("claim1_collusion" in names and "vickrey_gap" in names, "catalog lists the worked examples")

    demo = sp.Scenario.from_catalog("increment_demo")
    out = demo.run()
    check(out.allocation == {"L": "B"} and out.prices["L"] == 151.0, "increment_demo: B wins at 151")
    check(out.raise_rounds == 51, "increment_demo: 51 raise rounds")

    coarse = demo.configured(increment=10.0).run()
    check(coarse.prices["L"] == 150.0 and coarse.tie_breaks, "increment 10 ends in a seeded tie at 150")

    gap = sp.Scenario.from_catalog("vickrey_gap")
    bids = {"A": {"L": 10.0}, "B": {"L": 15.0}, "C": {"L": 20.0}}
    check(sp.run_fpsb(gap, bids).prices["L"] == 20.0, "FPSB: C pays its bid of 20")
    vick = sp.run_vickrey(gap, bids)
    check(vick.allocation["L"] == "C" and vick.prices["L"] == 15.0, "Vickrey: C pays 15")
    metrics = sp.score(vick, gap)
    check(metrics["efficiency"] == 1.0 and metrics["winners_curse_gap"]["L"] == 5.0, "score reports efficiency and gap")

    claim1 = sp.Scenario.from_catalog("claim1_collusion")
    verdict, gain, trace = claim1.collusion_viability("HAMR")
    check(verdict == "BREAKS" and gain > 0 and trace, f"HAMR cartel breaks (gain {gain})")
    verdict, gain, _ = claim1.collusion_viability("SAMR")
    check(verdict == "SUSTAINABLE" and gain <= 0, "SAMR cartel is sustainable")

    alloc, welfare = sp.Scenario.from_catalog("two_slot_complements").optimal_allocation()
    check(welfare == 300.0 and alloc == {"s1": "A", "s2": "A"}, "oracle: tie at 300 broken toward A's pair")

    for mech in ("FPSB", "VICKREY"):
        mean, stderr = sp.monte_carlo_revenue(mech, 2, 4000, 7)
        check(abs(mean - 1 / 3) <= 3 * stderr, f"{mech} revenue {mean:.4f} ± {stderr:.4f} near 1/3")

    round_trip = sp.Scenario.from_json(claim1.to_json())
    check(round_trip.to_json() == claim1.to_json(), "scenario JSON round trip")
    check(json.loads(out.to_json())["mechanism"] == "SEQ_AMR", "outcome serialises")

    try:
        sp.Scenario.from_catalog("nope")
    except KeyError:
        check(True, "unknown scenario raises KeyError")
    else:
        check(False, "unknown scenario raises KeyError")

    try:
        demo.configured(increment=-1.0)
    except ValueError:
        check(True, "negative increment raises ValueError")
    else:
        check(False, "negative increment raises ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
