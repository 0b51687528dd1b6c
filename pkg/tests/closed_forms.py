"""Hand-derived zeta functions of the shipped fixtures, as germs at s = 0.

Each is built from q^{a s} factors only, so the expansion is exact in Q[L].
"""

from fractions import Fraction

from kron.exact_base import QL, TaylorExpansion, taylor_qpow

ORDER = 3


def one():
    return TaylorExpansion.constant(QL.const(1), ORDER)


def qpow(alpha):
    return taylor_qpow(Fraction(alpha), ORDER)


def geometric(c, alpha):
    """1 / (1 - c q^{alpha s})."""
    return one() / (one() - qpow(alpha) * QL.const(c))


# polynomial rings in one variable with ideal norm q^{deg}: 1/(1 - q^{1-s})
def zeta_polynomial_ring(q):
    return geometric(q, -1)


def zeta_constant_f4():
    # F_4[T] over F_2[T]: norms 4^d, 4^d ideals of each degree
    return geometric(4, -2)


def zeta_kummer(q):
    # O = F_q[y], y^2 = T; d(O/A) = q^1 contributes q^{s/2}
    return qpow(Fraction(1, 2)) * zeta_polynomial_ring(q)


def zeta_real_quadratic(q):
    # genus 0, two rational places at infinity removed: (1-u)/(1-qu); d = q^2; s^{1-m} with m = 2
    numerator = one() - qpow(-1)
    return (qpow(1) * numerator * zeta_polynomial_ring(q)).divide_by_s()
