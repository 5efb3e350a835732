"""Independent reference implementations used as test oracles.

Written directly from the fully expanded closed-form expressions with plain
Python floats, sharing no code with the package.
"""


def poly(coeffs):
    return lambda z: sum(f * z**k for k, f in coeffs.items())


def expanded_step(x, a, p, lam, rho, pmp=0.0, pmc=0.0, pmi=0.0):
    big_a = x + (1 - x) * (1 - lam(1 - p * x)) * (1 - pmp)
    big_b = 1 - (
        ((1 - x - (1 - x) * (1 - lam(1 - p * x)) * (1 - pmp)) * (1 - pmi)) ** (a - 1)
    ) * (1 - rho((((1 - pmi) * (x + (1 - x) * (1 - lam(1 - p * x)) * (1 - pmp))) ** a) * (1 - pmc)))
    return big_a * big_b + big_a * (1 - big_b) * pmi


def two_slot_step(x, a, p, lam, rho):
    """Two-slot delayed recursion written slot by slot."""
    y1 = 1 - (1 - x) * lam(1 - p * x)
    y2 = 1 - (1 - y1) * lam(1 - p * y1)
    u = 1 - (1 - y1) ** (a - 1) * (1 - rho(x**a))
    return y2 * u + (1 - lam(1 - p * y2)) * (1 - u)


def bound(a, p, mean_lam):
    return min(1.0, 1 / ((a - 1) * (1 + p * mean_lam) ** 2)) if a > 1 else 1.0
