"""Traffic-regulation families, conversions between them, and conformance.

Three constraint families are supported:

* bit-level arrival curves ``alpha``: the bits arriving in any window of
  length ``t`` are at most ``alpha(t)``;
* spacing regulations ``g``: the time between packets ``m`` and ``n`` is at
  least ``g`` of the bits of packets ``m .. n-1``;
* packet-count arrival curves ``alpha_pkt``: the packets arriving in any
  window of length ``t`` number at most ``alpha_pkt(t)``.

Each family can be converted to the others; conversions are exact but may
weaken the constraint (documented per function).  Conformance checkers test
a recorded arrival sequence against a constraint and report the earliest
violating packet pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .curves import (
    Breakpoint,
    Curve,
    InvalidCurveError,
    RatLike,
    add_const,
    affine,
    arg_affine,
    delay,
    is_inf,
    lower_pseudo_inverse,
    rat,
    scale,
    staircase,
)


class RegulationError(Exception):
    """A constraint object violates its family's invariants."""


# ---------------------------------------------------------------------- #
# curve predicates shared by the family invariants


def is_left_continuous(curve: Curve) -> bool:
    """True when the curve has no jump except possibly at 0."""
    end = curve.window_end
    for x in curve.breakpoint_positions(end):
        if x > 0 and not _values_eq(curve.value_at(x), curve.left_limit_at(x)):
            return False
    return _values_eq(curve.value_at(end), curve.left_limit_at(end))


def _values_eq(a, b) -> bool:
    if is_inf(a) or is_inf(b):
        return is_inf(a) and is_inf(b)
    return a == b


def _is_integer_staircase(curve: Curve) -> bool:
    """Piecewise-constant with integer point/right values and increment."""
    if curve.increment != int(curve.increment):
        return False
    for bp in curve.breakpoints:
        if bp.slope != 0:
            return False
        for v in (bp.value, bp.right_value):
            if not is_inf(v) and v != int(v):
                return False
    return True


def _check_sub_additive(curve: Curve) -> Optional[tuple[Fraction, Fraction]]:
    """Finite sub-additivity check; returns a violating ``(s, t)`` or None.

    Samples all pairs of breakpoint positions across two periodic windows.
    This rejects every violation expressible at breakpoints; it is a
    validation filter, not a proof for arbitrary curves.
    """
    horizon = curve.window_end + curve.period
    xs = [x for x in curve.breakpoint_positions(horizon) if x <= horizon]
    if len(xs) > 80:
        xs = xs[:80]
    for s in xs:
        fs = curve.value_at(s)
        fs_r = curve.right_limit_at(s)
        if is_inf(fs):
            continue
        for t in xs:
            ft = curve.value_at(t)
            if is_inf(ft):
                continue
            if curve.value_at(s + t) > fs + ft:
                return (s, t)
            if not is_inf(fs_r) and not is_inf(curve.right_limit_at(t)):
                if curve.right_limit_at(s + t) > fs_r + curve.right_limit_at(t):
                    return (s, t)
    return None


# ---------------------------------------------------------------------- #
# the three families


@dataclass(frozen=True)
class BitArrivalCurve:
    """Upper envelope on bits arriving in any time window."""

    curve: Curve

    def __post_init__(self) -> None:
        if self.curve.value_at(Fraction(0)) != 0:
            raise RegulationError("a bit arrival curve must vanish at 0")
        if not is_left_continuous(self.curve):
            raise RegulationError("a bit arrival curve must be left-continuous")

    def max_first_packet(self):
        """Right limit at 0: an upper bound on any single packet's size."""
        return self.curve.right_limit_at(Fraction(0))


@dataclass(frozen=True)
class GRegulation:
    """Lower bound on packet spacing as a function of intervening bits."""

    curve: Curve

    def __post_init__(self) -> None:
        if self.curve.value_at(Fraction(0)) != 0:
            raise RegulationError("a spacing regulation must vanish at 0")


@dataclass(frozen=True)
class PacketArrivalCurve:
    """Upper envelope on packet counts in any time window."""

    curve: Curve

    def __post_init__(self) -> None:
        if self.curve.value_at(Fraction(0)) != 0:
            raise RegulationError("a packet arrival curve must vanish at 0")
        if self.curve.right_limit_at(Fraction(0)) < 1:
            raise RegulationError(
                "a packet arrival curve must allow at least one packet "
                "in every open window (right limit at 0 >= 1)")
        if not _is_integer_staircase(self.curve):
            raise RegulationError("a packet arrival curve must be an "
                                  "integer-valued staircase")
        if not is_left_continuous(self.curve):
            raise RegulationError("a packet arrival curve must be left-continuous")
        witness = _check_sub_additive(self.curve)
        if witness is not None:
            raise RegulationError(
                f"packet arrival curve is not sub-additive: value at "
                f"{witness[0]} + {witness[1]} exceeds the sum of the parts")


Constraint = "BitArrivalCurve | GRegulation | PacketArrivalCurve"


@dataclass(frozen=True)
class FlowSpec:
    """A named flow: its regulation constraint and packet-length range."""

    name: str
    constraint: object  # BitArrivalCurve | GRegulation | PacketArrivalCurve
    lmin: Fraction
    lmax: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lmin", rat(self.lmin))
        object.__setattr__(self, "lmax", rat(self.lmax))
        if not 0 < self.lmin <= self.lmax:
            raise RegulationError(
                f"flow {self.name!r}: need 0 < lmin <= lmax, "
                f"got {self.lmin} and {self.lmax}")
        if not isinstance(self.constraint,
                          (BitArrivalCurve, GRegulation, PacketArrivalCurve)):
            raise RegulationError(
                f"flow {self.name!r}: unknown constraint type "
                f"{type(self.constraint).__name__}")
        if isinstance(self.constraint, BitArrivalCurve):
            if self.constraint.max_first_packet() < self.lmax:
                raise RegulationError(
                    f"flow {self.name!r}: the arrival curve admits at most "
                    f"{self.constraint.max_first_packet()} bits in an "
                    f"instant, below lmax = {self.lmax}")


# ---------------------------------------------------------------------- #
# canonical constructors


def token_bucket(rate: RatLike, burst: RatLike) -> BitArrivalCurve:
    """``rate * t + burst`` for t > 0, with 0 at t = 0."""
    r, b = rat(rate), rat(burst)
    if r <= 0 or b <= 0:
        raise RegulationError("token bucket needs rate > 0 and burst > 0")
    return BitArrivalCurve(affine(r, b))


def staircase_bits(burst: RatLike, width: RatLike) -> BitArrivalCurve:
    """``burst * ceil(t / width)``: at most `burst` bits per sliding window."""
    b, tau = rat(burst), rat(width)
    if b <= 0 or tau <= 0:
        raise RegulationError("staircase needs burst > 0 and width > 0")
    return BitArrivalCurve(staircase(b, tau))


def lrq(rate: RatLike) -> GRegulation:
    """Length-rate quotient: spacing at least previous length / rate."""
    r = rat(rate)
    if r <= 0:
        raise RegulationError("length-rate quotient needs rate > 0")
    return GRegulation(affine(Fraction(1) / r))


def shifted_rate(rate: RatLike, shift: RatLike) -> GRegulation:
    """Spacing at least ``[bits - shift]+ / rate``; shift 0 is :func:`lrq`."""
    r, d = rat(rate), rat(shift)
    if r <= 0 or d < 0:
        raise RegulationError("shifted-rate regulation needs rate > 0 and shift >= 0")
    return GRegulation(delay(affine(Fraction(1) / r), d))


def sliding_interval(width: RatLike, count: int) -> PacketArrivalCurve:
    """At most ``count`` packets in any sliding window of ``width``."""
    tau = rat(width)
    if tau <= 0 or not isinstance(count, int) or count < 1:
        raise RegulationError("sliding interval needs width > 0 and integer count >= 1")
    return PacketArrivalCurve(staircase(Fraction(count), tau))


def fixed_interval(width: RatLike, count: int) -> PacketArrivalCurve:
    """Envelope implied by at most ``count`` packets per aligned window.

    The envelope is ``count * ceil(t / width) + count`` for t > 0: it admits
    every sequence conforming to the aligned-window rule, but also admits
    ``2 * count`` packets in a single burst, so it is strictly weaker than
    the rule itself.  Use :func:`conforms_fixed_interval` to test the rule
    directly.
    """
    tau = rat(width)
    if tau <= 0 or not isinstance(count, int) or count < 1:
        raise RegulationError("fixed interval needs width > 0 and integer count >= 1")
    k = Fraction(count)
    bps = (Breakpoint(Fraction(0), Fraction(0), 2 * k, Fraction(0)),
           Breakpoint(tau, 2 * k, 3 * k, Fraction(0)))
    return PacketArrivalCurve(Curve(bps, tau, tau, k))


def token_bucket_packets(rate: RatLike, burst: RatLike) -> PacketArrivalCurve:
    """At most ``ceil(rate * t + burst - 1)`` packets in any window t > 0."""
    rho, b = rat(rate), rat(burst)
    if rho <= 0 or b < 1:
        raise RegulationError("packet token bucket needs rate > 0 and burst >= 1")
    v0 = Fraction((b - 1).__floor__() + 1)  # count right after 0
    t1 = (v0 - b + 1) / rho                 # first jump past v0
    period = Fraction(1) / rho
    bps = (Breakpoint(Fraction(0), Fraction(0), v0, Fraction(0)),
           Breakpoint(t1, v0, v0 + 1, Fraction(0)))
    return PacketArrivalCurve(Curve(bps, t1, period, Fraction(1)))


def packet_rate_burst(lam: RatLike, nu: RatLike) -> PacketArrivalCurve:
    """The (rate, excess-burst) form: equivalent to a packet token bucket
    with burst ``nu + 1``."""
    return token_bucket_packets(lam, rat(nu) + 1)


# ---------------------------------------------------------------------- #
# conversions


def bit_to_g(alpha: BitArrivalCurve, lmin: RatLike) -> GRegulation:
    """Spacing regulation implied by a bit arrival curve.

    ``g(x)`` is the least time in which ``x`` intervening bits plus one
    minimum-size packet may arrive: the lower pseudo-inverse of the arrival
    curve evaluated at ``x + lmin``.
    """
    lm = rat(lmin)
    if lm <= 0:
        raise RegulationError("conversion needs lmin > 0")
    inv = lower_pseudo_inverse(alpha.curve)
    return GRegulation(arg_affine(inv, Fraction(1), lm))


def g_to_bit(g: GRegulation, lmax: RatLike) -> BitArrivalCurve:
    """Bit arrival curve implied by a spacing regulation.

    In a window of length t, packets spaced by ``g`` carry at most
    ``g_inverse(t)`` bits before the last packet, plus one maximum-size
    packet: ``alpha(t) = g_inverse(t) + lmax`` for t > 0.
    """
    lm = rat(lmax)
    if lm <= 0:
        raise RegulationError("conversion needs lmax > 0")
    inv = lower_pseudo_inverse(g.curve)
    shifted = add_const(inv, lm)
    return BitArrivalCurve(_zero_at_origin(shifted))


def pkt_to_g(apkt: PacketArrivalCurve, lmax: RatLike) -> GRegulation:
    """Spacing regulation implied by a packet arrival curve.

    ``x`` intervening bits are at least ``x / lmax`` packets; with the last
    packet that makes ``x / lmax + 1`` packets, which need at least the
    inverse envelope time to arrive.
    """
    lm = rat(lmax)
    if lm <= 0:
        raise RegulationError("conversion needs lmax > 0")
    inv = lower_pseudo_inverse(apkt.curve)
    return GRegulation(arg_affine(inv, Fraction(1) / lm, Fraction(1)))


def pkt_to_bit(apkt: PacketArrivalCurve, lmax: RatLike) -> BitArrivalCurve:
    """Bit arrival curve implied by a packet arrival curve: every packet
    counted at its maximum size."""
    lm = rat(lmax)
    if lm <= 0:
        raise RegulationError("conversion needs lmax > 0")
    return BitArrivalCurve(scale(apkt.curve, lm))


def _zero_at_origin(curve: Curve) -> Curve:
    """Force value 0 at t = 0, keeping the right limit (a jump at 0)."""
    t0 = curve.t0
    if t0 == 0:
        # the origin must not be part of the repeated window once modified
        t0 = curve.period
    end = t0 + curve.period
    bps = [bp for bp in curve.unrolled(end) if bp.x < end]
    first = bps[0]
    rv = first.right_value if first.right_value >= first.value else first.value
    bps[0] = Breakpoint(Fraction(0), Fraction(0), rv, first.slope)
    return Curve(tuple(bps), t0, curve.period, curve.increment)


# ---------------------------------------------------------------------- #
# conformance checking


@dataclass(frozen=True)
class Violation:
    """Earliest packet pair breaking a constraint, with the two sides."""

    first: int   # 1-based index m
    second: int  # 1-based index n
    observed: object
    allowed: object

    def __str__(self) -> str:
        return (f"packets {self.first}..{self.second}: observed "
                f"{self.observed}, allowed {self.allowed}")


def _validate_arrivals(arrivals: Sequence[tuple], flow: Optional[FlowSpec]) -> None:
    prev = None
    for i, (a, l) in enumerate(arrivals):
        if not isinstance(a, Fraction) or not isinstance(l, Fraction):
            raise RegulationError(f"arrival {i + 1}: times and lengths must be Fractions")
        if prev is not None and a < prev:
            raise RegulationError(f"arrival {i + 1}: times must be sorted")
        if flow is not None and not flow.lmin <= l <= flow.lmax:
            raise RegulationError(
                f"arrival {i + 1}: length {l} outside [{flow.lmin}, {flow.lmax}]")
        prev = a


def conforms(arrivals: Sequence[tuple], constraint, flow: Optional[FlowSpec] = None,
             ) -> Optional[Violation]:
    """Check ``(time, length)`` arrivals against a constraint.

    Returns None when conformant, else the earliest :class:`Violation`
    (ordered by second index, then first).  ``flow`` adds length-range
    validation.
    """
    _validate_arrivals(arrivals, flow)
    if isinstance(constraint, BitArrivalCurve):
        return _conforms_bits(arrivals, constraint.curve)
    if isinstance(constraint, GRegulation):
        return _conforms_spacing(arrivals, constraint.curve)
    if isinstance(constraint, PacketArrivalCurve):
        return _conforms_packets(arrivals, constraint.curve)
    raise RegulationError(f"unknown constraint type {type(constraint).__name__}")


def _conforms_bits(arrivals, curve) -> Optional[Violation]:
    n = len(arrivals)
    prefix = [Fraction(0)]
    for _, l in arrivals:
        prefix.append(prefix[-1] + l)
    for j in range(n):
        for i in range(j + 1):
            total = prefix[j + 1] - prefix[i]
            allowed = curve.right_limit_at(arrivals[j][0] - arrivals[i][0])
            if not is_inf(allowed) and total > allowed:
                return Violation(i + 1, j + 1, total, allowed)
    return None


def _conforms_spacing(arrivals, curve) -> Optional[Violation]:
    n = len(arrivals)
    prefix = [Fraction(0)]
    for _, l in arrivals:
        prefix.append(prefix[-1] + l)
    for j in range(n):
        for i in range(j + 1):
            between = prefix[j] - prefix[i]  # packets i .. j-1 (1-based i..j)
            need = curve.value_at(between)
            gap = arrivals[j][0] - arrivals[i][0]
            if is_inf(need) or gap < need:
                return Violation(i + 1, j + 1, gap, need)
    return None


def _conforms_packets(arrivals, curve) -> Optional[Violation]:
    n = len(arrivals)
    # fast path: a pure staircase bounds every window below one width by its
    # step, and sub-additivity extends that to all longer windows
    if (len(curve.breakpoints) == 1 and curve.t0 == 0
            and curve.breakpoints[0].right_value == curve.increment):
        k, tau = curve.increment, curve.period
        start = 0
        for j in range(n):
            while arrivals[j][0] - arrivals[start][0] >= tau:
                start += 1
            if j - start + 1 > k:
                return Violation(start + 1, j + 1, j - start + 1, k)
        return None
    for j in range(n):
        for i in range(j + 1):
            allowed = curve.right_limit_at(arrivals[j][0] - arrivals[i][0])
            if not is_inf(allowed) and j - i + 1 > allowed:
                return Violation(i + 1, j + 1, j - i + 1, allowed)
    return None


def conforms_fixed_interval(arrivals: Sequence[tuple], width: RatLike, count: int,
                            offset: Optional[RatLike] = None) -> bool:
    """Direct test of the aligned-window rule: at most ``count`` packets in
    each window ``[offset + i*width, offset + (i+1)*width)``.

    With no ``offset`` given, searches all alignments: feasibility only
    changes when a window boundary crosses an arrival time, so candidate
    offsets are the arrival times reduced modulo ``width`` (and points just
    after them), intersected with ``[0, first arrival]``.
    """
    tau = rat(width)
    if tau <= 0 or count < 1:
        raise RegulationError("aligned-window rule needs width > 0 and count >= 1")
    _validate_arrivals(arrivals, None)
    if not arrivals:
        return True
    times = [a for a, _ in arrivals]

    def feasible(theta: Fraction) -> bool:
        if theta > times[0]:
            return False
        buckets: dict[int, int] = {}
        for a in times:
            i = int((a - theta) // tau)
            buckets[i] = buckets.get(i, 0) + 1
            if buckets[i] > count:
                return False
        return True

    if offset is not None:
        return feasible(rat(offset))
    cands = {Fraction(0), times[0]}
    for a in times:
        base = a - (a // tau) * tau
        for c in (base, a):
            while c > times[0]:
                c -= tau
            if c >= 0:
                cands.add(c)
    ordered = sorted(cands)
    # feasibility is constant between consecutive candidates; test each
    # candidate and a midpoint of each gap
    probes = list(ordered)
    probes.extend((ordered[i] + ordered[i + 1]) / 2 for i in range(len(ordered) - 1))
    return any(feasible(theta) for theta in probes)
