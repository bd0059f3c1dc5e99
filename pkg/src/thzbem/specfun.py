"""Bessel and Hankel functions of integer order for complex arguments.

Thin, domain-checked wrappers around scipy.special (AMOS for complex
arguments, cephes for real ones), which already meet the 1e-10 accuracy
bar against arbitrary-precision references.  The bulk evaluator used by
matrix assembly lives in `_kernels` and is independent of these wrappers.

Conventions: time dependence e^{+j w t}, so H^(2) = J - jY is the
outgoing/damped kind and arguments with Im(z) <= 0 are the lossy case.
"""

import numpy as np
import scipy.special as _sp

from .errors import DomainError, SingularityError

MAX_ORDER = 200
MAX_ABS_ARG = 1.0e4


def _check(order: int, z: complex, allow_zero: bool) -> complex:
    if order < 0 or order > MAX_ORDER:
        raise DomainError(f"order {order} outside supported range [0, {MAX_ORDER}]")
    z = complex(z)
    if abs(z) >= MAX_ABS_ARG:
        raise DomainError(f"|z| = {abs(z):.3g} exceeds supported bound {MAX_ABS_ARG:g}")
    if not allow_zero and z == 0:
        raise SingularityError("Hankel/Y functions are singular at z = 0")
    return z


def bessel_j(order: int, z: complex) -> complex:
    """J_order(z) for integer order >= 0 and complex z."""
    z = _check(order, z, allow_zero=True)
    return complex(_sp.jv(order, z))


def bessel_y(order: int, z: complex) -> complex:
    """Y_order(z); log-singular at the origin."""
    z = _check(order, z, allow_zero=False)
    return complex(_sp.yv(order, z))


def hankel2(order: int, z: complex) -> complex:
    """H_order^(2)(z) = J_order(z) - j Y_order(z)."""
    z = _check(order, z, allow_zero=False)
    return complex(_sp.hankel2(order, z))


def bessel_j_prime(order: int, z: complex) -> complex:
    """dJ_order/dz via the two-sided recurrence."""
    z = _check(order, z, allow_zero=True)
    if order == 0:
        return -complex(_sp.jv(1, z))
    return 0.5 * (complex(_sp.jv(order - 1, z)) - complex(_sp.jv(order + 1, z)))


def hankel2_prime(order: int, z: complex) -> complex:
    """dH_order^(2)/dz via the two-sided recurrence."""
    z = _check(order, z, allow_zero=False)
    if order == 0:
        return -complex(_sp.hankel2(1, z))
    return 0.5 * (complex(_sp.hankel2(order - 1, z)) - complex(_sp.hankel2(order + 1, z)))


def bessel_j_array(order: int, z: np.ndarray) -> np.ndarray:
    """J_order over an array of complex arguments (series/field evaluation)."""
    if order < 0 or order > MAX_ORDER:
        raise DomainError(f"order {order} outside supported range [0, {MAX_ORDER}]")
    return _sp.jv(order, np.asarray(z))


def hankel2_array(order: int, z: np.ndarray) -> np.ndarray:
    """H_order^(2) over an array of complex arguments; no zeros allowed."""
    if order < 0 or order > MAX_ORDER:
        raise DomainError(f"order {order} outside supported range [0, {MAX_ORDER}]")
    z = np.asarray(z)
    if np.any(z == 0):
        raise SingularityError("Hankel functions are singular at z = 0")
    return _sp.hankel2(order, z)


def bessel_j_many(orders: np.ndarray, z: complex) -> np.ndarray:
    """J_n(z) for a vector of orders at one argument (series summation aid)."""
    orders = np.asarray(orders)
    if orders.min() < 0 or orders.max() > MAX_ORDER:
        raise DomainError("orders outside supported range")
    _check(0, z, allow_zero=True)
    return _sp.jv(orders, z)


def hankel2_many(orders: np.ndarray, z: complex) -> np.ndarray:
    """H_n^(2)(z) for a vector of orders at one argument."""
    orders = np.asarray(orders)
    if orders.min() < 0 or orders.max() > MAX_ORDER:
        raise DomainError("orders outside supported range")
    _check(0, z, allow_zero=False)
    return _sp.hankel2(orders, z)
