"""High-precision reference values for the duel rate bound and the n0 bound.

Run with `python3 rate_bound.py`; the printed table is frozen into
tests/acceptance.rs and tests/cli.rs.
"""
from mpmath import mp, mpf, log, ceil

mp.dps = 50


def h(alpha, B, eps):
    return eps ** (3 - 2 * alpha) * (1 - alpha) ** (1 - alpha) * alpha ** alpha / B ** (1 - alpha)


def beta(alpha, B):
    return B ** (1 - alpha) / ((1 - alpha) ** (1 - alpha) * alpha ** alpha)


def r_n(alpha, B, eps, V, C, n, delta):
    p = 1 / (2 - alpha)
    return 2 * (1 / (n * h(alpha, B, eps))) ** p * (
        (64 * C ** 2 * V * log(n)) ** p + (32 * log(2 / delta)) ** p
    )


def n0(alpha, B, eps, V, C, delta):
    first = (2 / delta) ** (1 / (2 * C ** 2 * V))
    second = log(2 / delta) * (
        (mpf(16) / 3) ** (2 - alpha) / (32 * beta(alpha, B) * eps ** alpha)
    ) ** (1 / (1 - alpha))
    return max(first, second)


CASES = [
    # alpha, B, eps, V, C, n, delta
    ("0.5", "1", "1", "2", "1", 10000, "0.1"),
    ("0.2", "1", "0.5", "2", "1", 1000, "0.05"),
    ("0.8", "2", "0.25", "3", "0.5", 100000, "0.01"),
    ("0.5", "0.1", "0.1", "3", "2", 500, "0.05"),
    ("0.9", "1.5", "0.5", "1", "0.3", 50, "0.5"),
]

for a, B, e, V, C, n, d in CASES:
    a, B, e, V, C, d = map(mpf, (a, B, e, V, C, d))
    n = mpf(n)
    r = r_n(a, B, e, V, C, n, d)
    m = n0(a, B, e, V, C, d)
    print(f"r_n = {mp.nstr(r, 20)}   n0_raw = {mp.nstr(m, 20)}   n0 = {int(ceil(m))}")
