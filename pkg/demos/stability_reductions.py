"""L1 distance between solutions of two problems against the reduced envelopes.

* burgers_vs_shifted: f = u^2/2 against g = f + 0.05 u with the same datum;
  the distance is exactly T TV(u0) 0.05, the envelope is sharp.
* source_only: no flux, two different x dependent sources.
* x_only: two state independent fluxes cos x with different amplitudes.
"""
from balancelaw.certify import load_scenario, run_scenario

for name in ("burgers_vs_shifted", "source_only", "x_only"):
    rep = run_scenario(load_scenario(name))
    chk = rep.check("stability")
    s = chk.series
    print(f"{name} ({s.branch}), slack {chk.rel_slack:g} relative + {chk.abs_slack:.3g} absolute")
    print(f"{'t':>6} {'|u - v|_1':>11} {'envelope':>11}")
    for t, m, v in zip(s.times, s.measured, s.values):
        print(f"{t:6.2f} {m:11.6f} {v:11.6f}")
    print(f"full envelope at T for comparison: {chk.extra['generic_envelope_final']:.6f}")
    print()
