"""Discrete entropy residuals and self-convergence under grid refinement.

For fluxes that do not depend on x the residual vanishes up to roundoff;
otherwise it is the consistency error of div f(x, k) and drops by about 4
per halving.  With state independent fluxes the flux differences telescope
under cell averaging, so the coarse solution equals the restricted fine one
up to roundoff and the printed order carries no information.
"""
from balancelaw.certify import load_scenario, refinement_study

for name in ("advection", "burgers", "cosx_flux", "x_only"):
    table = refinement_study(load_scenario(name), 3)
    ent = ", ".join(f"{e:.2e}" for e in table.entropy_max)
    orders = ", ".join(f"{p:.2f}" for p in table.orders)
    print(f"{name:>10}: entropy max [{ent}], self-convergence orders [{orders}]")
