"""Independent brute-force evaluators used as test oracles.

These recompute the same quantities as the library by direct definition
(segment walks, candidate enumeration) rather than by curve algebra, so a
bug in the engine cannot hide in its own oracle.
"""

from fractions import Fraction as F

from tsnbounds import curves as C


def brute_lpi(curve: C.Curve, x) -> "F | float":
    """inf{t >= 0 : f(t) >= x} by walking segments directly."""
    x = F(x)
    if curve.value_at(F(0)) >= x:
        return F(0)
    # find a horizon where the curve certainly exceeds x (or prove it never
    # does)
    horizon = curve.t0 + curve.period
    if curve.value_at(horizon) < x:
        if curve.increment <= 0:
            return C.INF
        k = (x - curve.value_at(curve.t0)) / curve.increment
        horizon = curve.t0 + (int(k) + 2) * curve.period
    positions = curve.breakpoint_positions(horizon)
    prev = F(0)
    for p in positions + [horizon]:
        if p <= prev:
            continue
        # segment (prev, p): starts at right limit of prev
        rv = curve.right_limit_at(prev)
        if C.is_inf(rv):
            return prev
        end_left = curve.left_limit_at(p)
        if rv >= x:
            return prev
        if not C.is_inf(end_left) and end_left < x:
            if curve.value_at(p) >= x:
                return p
            prev = p
            continue
        # crosses inside (prev, p]: solve rv + s*(t - prev) >= x
        span = p - prev
        slope = ((end_left - rv) / span if not C.is_inf(end_left)
                 else None)
        if slope is None or slope <= 0:
            return p
        t = prev + (x - rv) / slope
        return min(t, p)
    return C.INF


def brute_upi(curve: C.Curve, x) -> "F | float":
    """sup{t >= 0 : f(t) <= x} = inf{t : f(t) > x} for nondecreasing f."""
    x = F(x)
    lo = brute_lpi(curve, x)
    if C.is_inf(lo):
        return C.INF
    # advance over the flat stretch where f == x
    horizon = max(curve.t0 + 2 * curve.period, lo + 1)
    if curve.increment == 0 and curve.value_at(horizon) <= x:
        return C.INF
    while curve.value_at(horizon) <= x:
        horizon += curve.period
    t = lo
    for p in sorted(set(curve.breakpoint_positions(horizon) + [horizon])):
        if p < lo:
            continue
        if curve.value_at(p) > x:
            # sup is inside (t, p]
            rv = curve.right_limit_at(t)
            if C.is_inf(rv) or rv > x:
                return t
            end_left = curve.left_limit_at(p)
            slope = (end_left - rv) / (p - t) if not C.is_inf(end_left) else None
            if slope is None or slope <= 0:
                return p
            return t + (x - rv) / slope
        t = p
    return t


def brute_hdev_at(w_in: C.Curve, w_out: C.Curve, t) -> "F | float":
    """w_out_lpi(w_in(t)) - t, one candidate of the horizontal deviation."""
    v = w_in.value_at(F(t))
    if C.is_inf(v):
        return C.INF
    d = brute_lpi(w_out, v)
    if C.is_inf(d):
        return C.INF
    return d - F(t)


def brute_convolve_at(f: C.Curve, g: C.Curve, t) -> "F | float":
    """(f conv g)(t) over a candidate grid including all kink positions."""
    t = F(t)
    cands = {F(0), t}
    for p in f.breakpoint_positions(t):
        cands.add(p)
        cands.add(t - p)
    for p in g.breakpoint_positions(t):
        cands.add(p)
        cands.add(t - p)
    best = C.INF
    for s in sorted(c for c in cands if 0 <= c <= t):
        combos = [(f.value_at(s), g.value_at(t - s))]
        if s < t:
            combos.append((f.right_limit_at(s), g.left_limit_at(t - s)))
        if s > 0:
            combos.append((f.left_limit_at(s), g.right_limit_at(t - s)))
        for a, b in combos:
            if C.is_inf(a) or C.is_inf(b):
                continue
            v = a + b
            if C.is_inf(best) or v < best:
                best = v
    return best
