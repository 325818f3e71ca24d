"""Independent reference computations used by the test-suite.

None of these share code with the package: the series are summed by mpmath
at 50 digits and the constraint integrals use a fixed composite
Gauss-Legendre rule in long double after the substitution ``x = u**2``.
"""

import mpmath as mp
import numpy as np

DPS = 50


def hyp2f1_series(a, b, c, z, dps=DPS, terms=None):
    with mp.workdps(dps):
        a, b, c, z = mp.mpf(a), mp.mpf(b), mp.mpf(c), mp.mpc(z)
        term = mp.mpc(1)
        total = mp.mpc(1)
        n = 0
        tiny = mp.mpf(10) ** (-(dps - 5))
        while True:
            term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
            total += term
            n += 1
            if terms is not None:
                if n >= terms:
                    return total
            elif n > 10 and abs(term) < tiny * abs(total):
                return total


def bessel_i_series(alpha, x, dps=DPS, terms=None):
    with mp.workdps(dps):
        x = mp.mpf(x)
        total = mp.mpf(0)
        m = 0
        tiny = mp.mpf(10) ** (-(dps - 5))
        while True:
            term = (x / 2) ** (2 * m + alpha) / (mp.factorial(m) * mp.gamma(m + alpha + 1))
            total += term
            m += 1
            if terms is not None:
                if m >= terms:
                    return total
            elif m > 60 and abs(term) <= tiny * abs(total):
                return total


def block_delta_mp(delta, x, dps=DPS):
    with mp.workdps(dps):
        x = mp.mpc(x)
        d = mp.mpf(delta)
        return x ** (d + 1) / (1 - d) * hyp2f1_series(d + 1, d + 2, 2 * d + 4, x, dps)


def b2_mp(x, dps=DPS):
    with mp.workdps(dps):
        x = mp.mpc(x)
        return x - x * hyp2f1_series(1, 2, 4, x, dps)


def bessel_constants_mp(g, dps=DPS):
    """(F(g), B(g)) from the Bessel series at extended precision."""
    with mp.workdps(dps):
        g = mp.mpf(g)
        arg = 4 * mp.pi * g
        i0, i1, i2 = (bessel_i_series(k, arg, dps) for k in range(3))
        big_f = 3 * i1 * ((2 * mp.pi**2 * g**2 + 1) * i1 - 2 * g * mp.pi * i0) / (2 * g**2 * mp.pi**2 * i2**2)
        big_b = g / mp.pi * i2 / i1
        return big_f, big_b


def h_mp(x, g, dps=DPS):
    with mp.workdps(dps):
        big_f, _ = bessel_constants_mp(g, dps)
        bps = big_f - 1
        x = mp.mpc(x)
        y = 1 - x
        return x**2 * (y + bps * b2_mp(y, dps)) + y**2 * (x + bps * b2_mp(x, dps))


def big_f_delta_mp(delta, x, dps=DPS):
    with mp.workdps(dps):
        x = mp.mpc(x)
        return x**2 * block_delta_mp(delta, 1 - x, dps) + (1 - x) ** 2 * block_delta_mp(delta, x, dps)


# ---------------------------------------------------------------------------
# long-double fixed-rule quadrature

LD = np.longdouble


def _block_over_x2_ld(delta, x):
    """``f_Delta(x) / x**2`` for real long-double ``x`` in (0, 1/2]."""
    d = LD(delta)
    a, b, c = d + 1, d + 2, 2 * d + 4
    term = np.ones_like(x)
    total = np.ones_like(x)
    n = 0
    while True:
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1))) * x
        total = total + term
        n += 1
        if n > 3 and abs(term[-1]) < LD(1e-21) * abs(total[-1]):
            break
    return np.power(x, d - 1) / (1 - d) * total


def constraint_integrals_oracle(delta, panels=10**6, chunk=20_000):
    """(Int1, Int2) by a composite 3-point Gauss-Legendre rule in ``u = sqrt(x)``.

    With half-integer or integer ``delta`` the transformed integrands are
    smooth on ``[0, sqrt(1/2)]``, so uniform panels converge at full order.
    Chunks run in increasing ``x`` so early ones need only a few series terms.
    """
    s35 = np.sqrt(LD(3) / LD(5))
    nodes = np.array([-s35, LD(0), s35], dtype=LD)
    weights = np.array([LD(5) / 9, LD(8) / 9, LD(5) / 9], dtype=LD)
    upper = np.sqrt(LD(1) / LD(2))
    h = upper / panels
    total1 = LD(0)
    total2 = LD(0)
    for start in range(0, panels, chunk):
        idx = np.arange(start, min(start + chunk, panels), dtype=LD)
        mids = (idx + LD(0.5)) * h
        u = (mids[:, None] + nodes[None, :] * (h / 2)).ravel()
        w = np.tile(weights, len(idx)) * (h / 2) * 2 * u
        x = u * u
        g = _block_over_x2_ld(delta, x)
        total1 += np.sum(w * (-(x - 1 - x * x) * g * (1 / x - 1 / (1 - x))))
        total2 += np.sum(w * (g * (2 * x - 1)))
    return float(total1), float(total2)
