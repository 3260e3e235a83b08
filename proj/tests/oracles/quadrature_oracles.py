"""Reference values frozen into test_quadrature.cpp and test_bayes.cpp.

1-D means use mpmath at 25 digits; the 2-D shape-rate mean integrates the
joint (alpha, beta) density directly with scipy, without the analytic beta
marginal the C++ code relies on. All densities are negligible beyond the
finite upper limits used here.
"""
import mpmath as mp
from scipy import integrate

mp.mp.dps = 25
BREAKS = [0, 0.5, 1, 2, 5, 10, 20, 50, 120]


def mean_1d(logw):
    peak = max(logw(mp.mpf(x)) for x in [0.01 * 1.1**k for k in range(100)])
    w = lambda x: mp.e ** (logw(x) - peak)
    return mp.quad(lambda x: x * w(x), BREAKS) / mp.quad(w, BREAKS)


def shape_mean(a, b_eff, c_eff, theta, log_prod):
    a, theta = mp.mpf(a), mp.mpf(theta)
    return mean_1d(lambda l: (l - 1) * (mp.log(a) + log_prod) + c_eff * l * mp.log(theta) - b_eff * mp.loggamma(l))


def shape_rate_marginal_mean(p, q, r_eff, s_eff, log_prod, loss_sum):
    def logw(al):
        return ((al - 1) * (mp.log(p) + log_prod) + mp.loggamma(al * s_eff + 1)
                - (al * s_eff + 1) * mp.log(q + loss_sum) - r_eff * mp.loggamma(al))
    ea = mean_1d(logw)
    return ea, (ea * s_eff + 1) / (q + loss_sum)


def shape_rate_joint_mean(p, q, r_eff, s_eff, log_prod, loss_sum, upper=60.0):
    import math

    def f(be, al):
        if al <= 0 or be <= 0:
            return 0.0
        lj = ((al - 1) * (math.log(p) + log_prod) - (q + loss_sum) * be
              - r_eff * math.lgamma(al) + al * s_eff * math.log(be))
        return math.exp(lj)

    opts = dict(epsabs=0, epsrel=1e-11)
    z = integrate.dblquad(f, 0, upper, 0, upper, **opts)[0]
    ea = integrate.dblquad(lambda be, al: al * f(be, al), 0, upper, 0, upper, **opts)[0] / z
    eb = integrate.dblquad(lambda be, al: be * f(be, al), 0, upper, 0, upper, **opts)[0] / z
    return ea, eb


if __name__ == "__main__":
    print("shape a=1 theta=1 t=0 b=c=1:", mp.nstr(shape_mean(1, 1, 1, 1, 0), 18))
    print("shape a=1 theta=1 t=0 b=c=3:", mp.nstr(shape_mean(1, 3, 3, 1, 0), 18))
    gs = ["0.3", "0.5", "0.2", "0.9", "0.4"]
    lp = sum(mp.log(mp.mpf(g)) for g in gs)
    print("shape a=1 theta=0.1 t=5 b=c=6, g=", gs, ":", mp.nstr(shape_mean(1, 6, 6, "0.1", lp), 18))
    ea, eb = shape_rate_marginal_mean(1, 1, mp.mpf("2.5"), 2, mp.log(mp.mpf("0.5")), mp.mpf("0.5"))
    print("shape_rate marginal t=1 g=0.5:", mp.nstr(ea, 18), mp.nstr(eb, 18))
    import math
    ja, jb = shape_rate_joint_mean(1.0, 1.0, 2.5, 2.0, math.log(0.5), 0.5)
    print("shape_rate joint    t=1 g=0.5:", repr(ja), repr(jb))
    gs = [0.3, 0.5, 0.2, 0.9, 0.4, 0.6, 0.25, 0.35, 0.45, 0.7]
    lp = sum(mp.log(mp.mpf(repr(g))) for g in gs)
    ls = sum(mp.mpf(repr(g)) for g in gs)
    ea, eb = shape_rate_marginal_mean(1, 1, mp.mpf("11.5"), 11, lp, ls)
    print("shape_rate marginal t=10:", mp.nstr(ea, 18), mp.nstr(eb, 18))
