"""Independent numerical-integration oracles for distribution quantiles."""

import math

from scipy import integrate, optimize


def _bisect(cdf, target, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _f_logpdf_u(u, d1, d2):
    """Log density of ``log X`` for ``X ~ F(d1, d2)``."""
    logc = (math.lgamma((d1 + d2) / 2) - math.lgamma(d1 / 2) - math.lgamma(d2 / 2)
            + (d1 / 2) * math.log(d1 / d2))
    a = math.log(d1 / d2) + u
    log1p_term = a + math.log1p(math.exp(-a)) if a > 0 else math.log1p(math.exp(a))
    return logc + (d1 / 2) * u - ((d1 + d2) / 2) * log1p_term


def f_quantile_oracle(d1, d2, prob):
    """Quantile from quadrature of the F density in ``u = log x``.

    The log-density peaks at ``u = 0`` with spread about
    ``sqrt(2/d1 + 2/d2)``, so the range is cut into pieces at multiples of
    that spread before integrating.  Whichever tail is smaller is matched.
    """
    g = lambda u: math.exp(_f_logpdf_u(u, d1, d2))
    w = math.sqrt(2 / d1 + 2 / d2)
    cuts = sorted({0.0} | {s * w * 2 ** j for s in (-1, 1) for j in range(-2, 12)
                           if -80 < s * w * 2 ** j < 60} | {-80.0, 60.0})

    def integral(a, b):
        edges = [a] + [c for c in cuts if a < c < b] + [b]
        return sum(integrate.quad(g, lo, hi, epsabs=1e-16, epsrel=1e-13, limit=200)[0]
                   for lo, hi in zip(edges[:-1], edges[1:]))

    if prob > 0.5:
        resid = lambda u: (1 - prob) - integral(u, 60.0)
    else:
        resid = lambda u: integral(-80.0, u) - prob
    return math.exp(optimize.brentq(resid, -79.0, 59.0, xtol=1e-14, rtol=1e-14))


def t_quantile_oracle(df, prob):
    logc = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    pdf = lambda t: math.exp(logc - (df + 1) / 2 * math.log1p(t * t / df))
    cdf = lambda x: 0.5 + integrate.quad(pdf, 0, x, epsabs=1e-14, epsrel=1e-13)[0]
    return _bisect(cdf, prob, 0.0, 1e3, iters=90)


def normal_quantile_oracle(prob):
    pdf = lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
    if prob > 0.5:
        return -normal_quantile_oracle(1 - prob)
    # direct lower-tail integral keeps relative precision for tiny prob
    resid = lambda x: integrate.quad(pdf, -math.inf, x, epsabs=0.0, epsrel=1e-13)[0] - prob
    return optimize.brentq(resid, -40.0, 0.0, xtol=1e-14, rtol=1e-15)
