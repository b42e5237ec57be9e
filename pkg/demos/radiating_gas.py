"""Radiating gas model: Burgers flux on a window, damping and a Gaussian convolution.

Picard iterates contract on each time slab; the total variation, the L1
norm and the sensitivity to the kernel all stay below their envelopes.
"""
from balancelaw.certify import load_scenario, run_scenario

rep = run_scenario(load_scenario("radiating_gas"))
print("constants:", {k: round(v, 4) for k, v in rep.constants.items()})
for slab in rep.picard:
    d = slab["distances"]
    ratios = ", ".join(f"{b / a:.3f}" for a, b in zip(d[:-1], d[1:]) if a > 0)
    print(f"slab [{slab['slab'][0]:.3f}, {slab['slab'][1]:.3f}]: {len(d)} iterates, ratios {ratios}")

for name in ("radiating_tv", "radiating_l1"):
    s = rep.check(name).series
    print(f"\n{name}")
    for t, m, v in zip(s.times, s.measured, s.values):
        print(f"{t:6.2f} {m:10.5f} {v:10.5f}")

kern = run_scenario(load_scenario("radiating_gas_kernel"))
s = kern.check("kernel_stability").series
print(f"\nkernel_stability, |K - K~|_1 = {s.constants_used['dK_l1']:.4f}")
for t, m, v in zip(s.times, s.measured, s.values):
    print(f"{t:6.2f} {m:10.6f} {v:10.6f}")
