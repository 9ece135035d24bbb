"""Service-curve catalog for a single FIFO server.

A :class:`ServerSpec` couples the service curve with the physical line
rate: delay bounds that exploit the packetized transmission ("once a packet
starts, it is sent at line rate") need both.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from .curves import (
    Breakpoint,
    Curve,
    InvalidCurveError,
    RatLike,
    add,
    compose,
    delay,
    identity,
    is_c_lipschitz,
    max_with_zero,
    min_plus_convolve,
    pointwise_min,
    affine,
    constant,
    rat,
    staircase,
)


@dataclass(frozen=True)
class ServerSpec:
    """A FIFO server: guaranteed service curve plus line rate."""

    beta: Curve
    line_rate: Fraction
    transmit_at_line_rate: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "line_rate", rat(self.line_rate))
        if self.line_rate <= 0:
            raise InvalidCurveError("line rate must be > 0")
        if self.beta.value_at(Fraction(0)) != 0:
            raise InvalidCurveError("a service curve must vanish at 0")
        if self.transmit_at_line_rate:
            r = self.beta.eventual_rate()
            if r > self.line_rate:
                warnings.warn(
                    f"service curve long-run rate {r} exceeds the line rate "
                    f"{self.line_rate}; the line-rate transmission model is "
                    "inconsistent with this guarantee", stacklevel=2)


def rate_latency(rate: RatLike, latency: RatLike) -> Curve:
    """``rate * [t - latency]+``: full rate after an initial vacation."""
    r, t = rat(rate), rat(latency)
    if r <= 0 or t < 0:
        raise InvalidCurveError("rate-latency needs rate > 0 and latency >= 0")
    return delay(affine(r), t)


def drr_service_curve(n: int, quantum: RatLike, line_rate: RatLike,
                      eps: RatLike) -> Curve:
    """Service curve guaranteed to one of ``n`` deficit-round-robin queues.

    ``quantum`` is the per-round credit (bits), ``line_rate`` the shared
    link rate, and ``eps`` the overshoot margin (bits).  The curve is the
    composition of a per-round staircase ramp with an affine front, plus a
    capped linear correction term.
    """
    q, c, e = rat(quantum), rat(line_rate), rat(eps)
    if not isinstance(n, int) or n < 2:
        raise InvalidCurveError("deficit round robin needs an integer n >= 2")
    if q <= 0 or c <= 0 or not 0 < e <= q:
        raise InvalidCurveError(
            "deficit round robin needs quantum > 0, line rate > 0 and "
            "0 < eps <= quantum")
    # per-round guarantee: serve one quantum at unit rate, then pause for
    # the round of the other n-1 queues before the next quantum
    round_ramp = min_plus_convolve(identity(), staircase(q, (n - 1) * q))
    front = rate_latency(c, ((n - 1) * (4 * q - e) - e) / c)
    cap = pointwise_min(rate_latency(c, 2 * (n - 1) * (2 * q - e) / c),
                        constant(e))
    return add(compose(round_ramp, front), cap)


def fifo_residual_curve(rate: RatLike, theta: RatLike) -> Curve:
    """Residual guarantee ``0`` up to ``theta`` then ``rate * t`` — note the
    jump at ``theta``, so this curve is not line-rate Lipschitz."""
    r, th = rat(rate), rat(theta)
    if r <= 0 or th <= 0:
        raise InvalidCurveError("residual curve needs rate > 0 and theta > 0")
    bps = (Breakpoint(Fraction(0), Fraction(0), Fraction(0), Fraction(0)),
           Breakpoint(th, Fraction(0), r * th, r))
    return Curve(bps, th + 1, Fraction(1), r)
