"""Wallis integrals, unit ball volumes and the mollifier moment ratio."""
from balancelaw.constants import ball_volume, dim_constants, mollifier_identities, plateau_mollifier, wallis

print(f"{'N':>3} {'W_N':>12} {'omega_N':>12} {'ratio - 2W_N':>14}")
for n in range(1, 11):
    print(f"{n:>3} {wallis(n):12.8f} {ball_volume(n):12.8f} {ball_volume(n) / ball_volume(n - 1) - 2 * wallis(n):14.2e}")

# the moment ratio does not depend on the mollifier profile
print()
print(f"{'N':>3} {'flat':>5} {'C1':>12} {'M1':>12} {'M1/C1':>12} {'N W_N':>12} {'identities':>11}")
for n in range(1, 5):
    for flat in (0.2, 0.5, 0.8):
        m = plateau_mollifier(n, flat)
        dc = dim_constants(n, m)
        res = mollifier_identities(n, m).max()
        print(f"{n:>3} {flat:5.1f} {dc.c1:12.8f} {dc.m1:12.8f} {dc.m1 / dc.c1:12.8f} {dc.nwn:12.8f} {res:11.1e}")
