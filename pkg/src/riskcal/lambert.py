"""The -1 branch of the Lambert W function on [-1/e, 0).

Solved in log space: W_-1(x) is the root of w + log(-w) = log(-x) on
(-inf, -1], which is monotone increasing in w and numerically benign even
deep in the tail (x near -0). Bisection is seeded from closed-form
logarithmic bounds that bracket the branch everywhere on the domain.
"""

from __future__ import annotations

import math

#: -1/e, the branch point.
NEG_INV_E = -math.exp(-1.0)

_E = math.e
_BRANCH_TOL = 1e-16


def _check_domain(x: float) -> None:
    if not (NEG_INV_E - _BRANCH_TOL <= x < 0.0):
        raise ValueError(f"x={x!r} outside Lambert W_-1 domain [-1/e, 0)")


def loczi_bracket(x: float) -> tuple[float, float]:
    """Closed-form bounds with ``lower <= W_-1(x) <= upper``.

    ``lower = e*ln(-x)/(e-1)`` and ``upper = ln(-x) - ln(-ln(-x))``.
    """
    _check_domain(x)
    if x <= NEG_INV_E + _BRANCH_TOL:
        return (-_E / (_E - 1.0), -1.0)
    log_neg_x = math.log(-x)
    lower = _E * log_neg_x / (_E - 1.0)
    upper = log_neg_x - math.log(-log_neg_x)
    return (lower, upper)


def lambert_w_m1(x: float) -> float:
    """W_-1(x) for x in [-1/e, 0), accurate to ~1e-12 relative residual."""
    _check_domain(x)
    if x <= NEG_INV_E + _BRANCH_TOL:
        # Derivative singularity at the branch point; the value is exact.
        return -1.0

    target = math.log(-x)

    def h(w: float) -> float:
        return w + math.log(-w) - target

    lower, upper = loczi_bracket(x)
    lo = lower
    hi = min(upper, -1.0)
    # Widen against floating-point rounding of the analytic bounds.
    while h(lo) > 0.0:
        lo -= max(1e-9, 1e-12 * abs(lo))
    while h(hi) < 0.0:
        hi = min(hi + max(1e-9, 1e-12 * abs(hi)), -1.0)
        if hi == -1.0 and h(hi) < 0.0:
            break

    # h is increasing on (-inf, -1]; plain bisection converges unconditionally.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if h(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)

    # Guarded Newton polish on h (h'(w) = 1 + 1/w > 0 for w < -1).
    for _ in range(3):
        hp = 1.0 + 1.0 / w
        if hp <= 0.0:
            break
        step = h(w) / hp
        w_new = w - step
        if not (lo <= w_new <= hi):
            break
        w = w_new
    return min(w, -1.0)
