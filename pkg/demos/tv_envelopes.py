"""Total variation against its envelope for Burgers and the windowed cos flux.

For Burgers the envelope is the constant TV(u0) and the scheme never
exceeds it.  With the flux f(x) = cos x and u0 = 0 every cell follows the
ODE u' = sin x, so TV grows linearly and the envelope is attained.
"""
from balancelaw.certify import load_scenario, run_scenario

for name in ("burgers", "cosx_flux"):
    rep = run_scenario(load_scenario(name))
    s = rep.check("tv").series
    print(f"{name}: kappa0 = {rep.constants['kappa0']:.3g}, branch {s.branch}")
    print(f"{'t':>6} {'TV(u)':>10} {'envelope':>10} {'ratio':>7}")
    for t, m, v in zip(s.times, s.measured, s.values):
        print(f"{t:6.2f} {m:10.5f} {v:10.5f} {m / v if v else 1.0:7.4f}")
    print(f"weaker closed form at T: {rep.check('tv').extra['weak_form_final']:.5f}")
    print()
