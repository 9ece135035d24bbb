"""Worst-case FIFO delay bounds for regulated flows.

A single FIFO system serves the aggregate of several flows with a service
curve ``beta`` and transmits packets at the line rate ``c``.  Each bound has
the shape ``h(w, beta) + tail`` where ``h`` is the horizontal deviation, ``w``
is an arrival bound tailored to the flow of interest's constraint family, and
``tail`` accounts for serializing the packet of interest at line rate:

* :func:`delay_bound_classic` -- ``h(alpha, beta)`` for the total bit-level
  arrival curve, with no line-rate refinement;
* :func:`delay_bound_ag` -- flow of interest spacing-regulated, competing
  traffic bounded by an aggregate bit-level curve;
* :func:`delay_bound_pkt` -- every flow packet-count constrained;
* :func:`delay_bound_g` -- every flow spacing-regulated;
* :func:`delay_bound_bit` -- both sides bit-level constrained;
* :func:`per_flow_sweep` -- exact supremum of the per-packet bit-level bound
  over packet lengths, for service curves that are not line-rate Lipschitz.

All computations are exact over rationals.  An unstable system (arrival rate
exceeding service rate) yields value ``+inf`` with a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .curves import (
    Curve,
    RatLike,
    Value,
    add,
    add_const,
    constant,
    curve_eq,
    horizontal_deviation,
    is_c_lipschitz,
    is_inf,
    lower_pseudo_inverse,
    rat,
    right_limit,
    scale,
    sub_const_clamped,
    upper_pseudo_inverse,
    zero,
)
from .regulation import (
    BitArrivalCurve,
    FlowSpec,
    GRegulation,
    PacketArrivalCurve,
    RegulationError,
    bit_to_g,
    g_to_bit,
    pkt_to_bit,
    pkt_to_g,
)
from .service import ServerSpec


class BoundError(Exception):
    """A bound was requested outside its validity conditions."""


@dataclass(frozen=True)
class DelayBound:
    """A computed worst-case delay with its derivation context.

    ``value`` is in seconds (or ``+inf`` when the system is unstable);
    ``w_curve`` is the arrival bound handed to the horizontal deviation;
    ``per_packet`` optionally maps candidate packet lengths to their bound;
    ``attained_at`` is the packet length attaining a sweep's maximum.
    """

    value: Value
    method: str
    w_curve: Optional[Curve] = None
    per_packet: Optional[dict] = None
    attained_at: Optional[Fraction] = None
    diagnostic: Optional[str] = None

    def __post_init__(self) -> None:
        if not is_inf(self.value) and self.value < 0:
            raise BoundError("delay bound cannot be negative")


def queuing_delay_bound(w: Curve, beta: Curve) -> Value:
    """Bound on the time from arrival to start of service: ``h(w, beta)``."""
    return horizontal_deviation(w, beta)


def _bounded(w: Curve, server: ServerSpec, tail: Fraction, method: str) -> DelayBound:
    dev = horizontal_deviation(w, server.beta)
    if is_inf(dev):
        return DelayBound(
            value=dev, method=method, w_curve=w,
            diagnostic="unstable: arrival rate {} exceeds or saturates service "
                       "rate {}".format(w.eventual_rate(), server.beta.eventual_rate()))
    return DelayBound(value=dev + tail, method=method, w_curve=w)


def _require_line_rate(server: ServerSpec, method: str) -> None:
    if not server.transmit_at_line_rate:
        raise BoundError(
            f"{method} bound needs packets transmitted at line rate")


def delay_bound_ag(g: GRegulation, alpha_agg: BitArrivalCurve,
                   server: ServerSpec, l: RatLike) -> DelayBound:
    """Flow of interest spacing-regulated by ``g``, competitors by ``alpha_agg``.

    Bound for a packet of length ``l``: ``h(g_inv + alpha_agg_right, beta)
    + l/c`` where ``g_inv`` is the upper pseudo-inverse of ``g`` and
    ``alpha_agg_right`` the right-limit of the aggregate competing curve.
    Passing ``l = lmax`` of the flow gives the per-flow bound.
    """
    _require_line_rate(server, "spacing+aggregate")
    l = rat(l)
    if l < 0:
        raise BoundError("packet length must be nonnegative")
    w = add(upper_pseudo_inverse(g.curve), right_limit(alpha_agg.curve))
    return _bounded(w, server, l / server.line_rate, "ag")


def _pkt_direct_w(flows: Sequence[tuple[PacketArrivalCurve, RatLike]],
                  f: int) -> Curve:
    """``sum_i lmax_i * right-limit(apkt_i) - lmax_f``, clamped at zero."""
    total: Optional[Curve] = None
    for apkt, lmax in flows:
        term = scale(right_limit(apkt.curve), rat(lmax))
        total = term if total is None else add(total, term)
    assert total is not None
    return sub_const_clamped(total, rat(flows[f][1]))


def delay_bound_pkt(flows: Sequence[tuple[PacketArrivalCurve, RatLike]],
                    f: int, server: ServerSpec,
                    l: Optional[RatLike] = None) -> DelayBound:
    """Every flow packet-count constrained; bound for flow ``f``.

    Computed by converting flow ``f`` to a spacing regulation and the other
    flows to bit-level curves, then applying :func:`delay_bound_ag`.  The
    direct arrival bound ``sum_i lmax_i * apkt_i_right - lmax_f`` is built
    independently and asserted equal (they may differ only in the point value
    at 0, which cannot affect the deviation).

    ``l`` is the length of the packet of interest; omitted, the per-flow
    bound uses ``lmax_f``.
    """
    _require_line_rate(server, "packet-level")
    if not 0 <= f < len(flows):
        raise BoundError("flow index out of range")
    lmax_f = rat(flows[f][1])
    tail_len = lmax_f if l is None else rat(l)
    if not 0 <= tail_len <= lmax_f:
        raise BoundError("packet length must lie in [0, lmax]")
    g_f = pkt_to_g(flows[f][0], lmax_f)
    agg: Curve = zero()
    for i, (apkt, lmax) in enumerate(flows):
        if i != f:
            agg = add(agg, pkt_to_bit(apkt, rat(lmax)).curve)
    inner = delay_bound_ag(g_f, BitArrivalCurve(agg), server, tail_len)
    w_direct = _pkt_direct_w(flows, f)
    assert inner.w_curve is not None
    if not curve_eq(right_limit(w_direct), right_limit(inner.w_curve)):
        raise BoundError(
            "internal: direct and conversion-based arrival bounds disagree")
    return DelayBound(value=inner.value, method="pkt", w_curve=w_direct,
                      diagnostic=inner.diagnostic)


def delay_bound_g(flows: Sequence[tuple[GRegulation, RatLike]],
                  f: int, server: ServerSpec,
                  l: Optional[RatLike] = None) -> DelayBound:
    """Every flow spacing-regulated; bound for flow ``f``.

    ``w = sum_i g_i_inv + sum_{i != f} lmax_i`` and the bound is
    ``h(w, beta) + l/c`` (per-flow: ``l = lmax_f``).
    """
    _require_line_rate(server, "spacing-regulated")
    if not 0 <= f < len(flows):
        raise BoundError("flow index out of range")
    lmax_f = rat(flows[f][1])
    tail_len = lmax_f if l is None else rat(l)
    if not 0 <= tail_len <= lmax_f:
        raise BoundError("packet length must lie in [0, lmax]")
    w: Optional[Curve] = None
    others = Fraction(0)
    for i, (g, lmax) in enumerate(flows):
        inv = upper_pseudo_inverse(g.curve)
        w = inv if w is None else add(w, inv)
        if i != f:
            others += rat(lmax)
    assert w is not None
    if others:
        w = add_const(w, others)
    return _bounded(w, server, tail_len / server.line_rate, "g")


def delay_bound_bit(alpha1: BitArrivalCurve, alpha2: BitArrivalCurve,
                    lmin1: RatLike, server: ServerSpec,
                    l: Optional[RatLike] = None) -> DelayBound:
    """Flow of interest bounded by ``alpha1``, competitors by ``alpha2``.

    Per-packet (``l`` given): ``h(alpha1_right + alpha2_right - l, beta)
    + l/c``.  Per-flow (``l`` omitted): ``h(alpha1 + alpha2 - lmin1, beta)
    + lmin1/c`` on the left-continuous curves directly, valid only when the
    service curve is line-rate Lipschitz; otherwise use
    :func:`per_flow_sweep`.
    """
    _require_line_rate(server, "bit-level")
    lmin1 = rat(lmin1)
    if l is not None:
        l = rat(l)
        if l < lmin1:
            raise BoundError("packet length below the flow's minimum")
        w = sub_const_clamped(
            add(right_limit(alpha1.curve), right_limit(alpha2.curve)), l)
        return _bounded(w, server, l / server.line_rate, "bit")
    if not is_c_lipschitz(server.beta, server.line_rate):
        raise BoundError(
            "per-flow bit-level bound needs a line-rate Lipschitz service "
            "curve; use per_flow_sweep instead")
    w = sub_const_clamped(add(alpha1.curve, alpha2.curve), lmin1)
    return _bounded(w, server, lmin1 / server.line_rate, "bit")


def delay_bound_classic(alpha_total: BitArrivalCurve, beta: Curve) -> DelayBound:
    """Plain horizontal deviation of the total arrival curve and ``beta``."""
    w = alpha_total.curve
    dev = horizontal_deviation(w, beta)
    if is_inf(dev):
        return DelayBound(
            value=dev, method="classic", w_curve=w,
            diagnostic="unstable: arrival rate {} exceeds or saturates service "
                       "rate {}".format(w.eventual_rate(), beta.eventual_rate()))
    return DelayBound(value=dev, method="classic", w_curve=w)


def per_flow_sweep(alpha1: BitArrivalCurve, alpha2: BitArrivalCurve,
                   server: ServerSpec, lmin: RatLike,
                   lmax: RatLike) -> DelayBound:
    """Maximize the per-packet bit-level bound over lengths in [lmin, lmax].

    The bound ``l -> h(W - l, beta) + l/c`` (``W`` the summed right-limit
    curves) is piecewise affine in ``l``: its kinks can only occur where a
    segment-endpoint value of ``W`` minus ``l`` crosses a kink of the
    service-curve inverse.  The sweep evaluates the exact bound at every such
    candidate plus the interval endpoints -- never by sampling.
    """
    _require_line_rate(server, "length sweep")
    lmin, lmax = rat(lmin), rat(lmax)
    if not 0 <= lmin <= lmax:
        raise BoundError("need 0 <= lmin <= lmax")
    w_full = add(right_limit(alpha1.curve), right_limit(alpha2.curve))
    inv = lower_pseudo_inverse(server.beta)
    # horizon: past the widest shifted curve's certified window the deviation
    # objective repeats, so later crossings induce no new kink in l
    probe = horizontal_deviation(sub_const_clamped(w_full, lmin), server.beta)
    if is_inf(probe):
        return DelayBound(
            value=probe, method="sweep", w_curve=w_full,
            diagnostic="unstable: arrival rate {} exceeds or saturates service "
                       "rate {}".format(w_full.eventual_rate(),
                                        server.beta.eventual_rate()))
    end = w_full.window_end
    w_values: set[Fraction] = set()
    for x in w_full.breakpoint_positions(end):
        for v in (w_full.value_at(x), w_full.right_limit_at(x)):
            if not is_inf(v):
                w_values.add(v)
    cap = max(w_values) if w_values else Fraction(0)
    inv_kinks = [x for x in inv.breakpoint_positions(min(cap, inv.window_end))]
    candidates = {lmin, lmax}
    for v in w_values:
        for x in inv_kinks:
            cand = v - x
            if lmin < cand < lmax:
                candidates.add(cand)
    best: Optional[Value] = None
    best_l: Optional[Fraction] = None
    table: dict = {}
    for cand in sorted(candidates):
        dev = horizontal_deviation(sub_const_clamped(w_full, cand), server.beta)
        val = dev if is_inf(dev) else dev + cand / server.line_rate
        table[cand] = val
        if best is None or is_inf(val) or (not is_inf(best) and val > best):
            best, best_l = val, cand
    return DelayBound(value=best, method="sweep", w_curve=w_full,
                      per_packet=table, attained_at=best_l)


# ---------------------------------------------------------------------- #
# cross-method comparison


@dataclass(frozen=True)
class ComparisonReport:
    """Bounds for one flow computed by every applicable method.

    ``bounds`` maps method name to :class:`DelayBound`; ``improvements``
    maps method name to the percent reduction relative to the classic bound.
    """

    flow: int
    bounds: dict
    improvements: dict


def _as_bit(spec: FlowSpec) -> BitArrivalCurve:
    c = spec.constraint
    if isinstance(c, BitArrivalCurve):
        return c
    if isinstance(c, GRegulation):
        return g_to_bit(c, spec.lmax)
    return pkt_to_bit(c, spec.lmax)


def _as_g(spec: FlowSpec) -> GRegulation:
    c = spec.constraint
    if isinstance(c, GRegulation):
        return c
    if isinstance(c, BitArrivalCurve):
        return bit_to_g(c, spec.lmin)
    return pkt_to_g(c, spec.lmax)


def _vle(a: Value, b: Value) -> bool:
    if is_inf(b):
        return True
    return not is_inf(a) and a <= b


def compare_approaches(flows: Sequence[FlowSpec], f: int,
                       server: ServerSpec) -> ComparisonReport:
    """Compute every applicable bound for flow ``f`` and check their order.

    Always reports ``classic`` (total bit-level curve) and ``bit`` (native or
    converted bit-level curves; falls back to the length sweep on
    non-Lipschitz service).  Reports ``g`` when every flow has or can adopt a
    spacing regulation and ``pkt`` when every flow is natively packet-count
    constrained.  Asserts the native-beats-converted orderings.
    """
    if not 0 <= f < len(flows):
        raise BoundError("flow index out of range")
    foi = flows[f]
    bits = [_as_bit(s) for s in flows]
    total = bits[0].curve
    for b in bits[1:]:
        total = add(total, b.curve)
    report: dict = {}
    report["classic"] = delay_bound_classic(BitArrivalCurve(total), server.beta)

    others = zero()
    for i, b in enumerate(bits):
        if i != f:
            others = add(others, b.curve)
    lipschitz = is_c_lipschitz(server.beta, server.line_rate)
    if lipschitz:
        report["bit"] = delay_bound_bit(bits[f], BitArrivalCurve(others),
                                        foi.lmin, server)
    else:
        report["bit"] = per_flow_sweep(bits[f], BitArrivalCurve(others),
                                       server, foi.lmin, foi.lmax)

    gflows = [(_as_g(s), s.lmax) for s in flows]
    report["g"] = delay_bound_g(gflows, f, server)

    if all(isinstance(s.constraint, PacketArrivalCurve) for s in flows):
        pflows = [(s.constraint, s.lmax) for s in flows]
        report["pkt"] = delay_bound_pkt(pflows, f, server)
        # packet-level beats the converted bit-level bound
        if not _vle(report["pkt"].value, report["bit"].value):
            raise BoundError("ordering violated: pkt > bit")

    # native constraints beat the bounds through converted constraints;
    # this holds when every flow shares the native family (a mixed hop
    # converts someone in either direction, so neither order is guaranteed)
    if all(isinstance(s.constraint, BitArrivalCurve) for s in flows):
        if not _vle(report["bit"].value, report["g"].value):
            raise BoundError("ordering violated: bit > g on bit-native flows")
    if all(isinstance(s.constraint, GRegulation) for s in flows):
        if not _vle(report["g"].value, report["bit"].value):
            raise BoundError("ordering violated: g > bit on g-native flows")
    # with a line-rate Lipschitz service the bit-level refinement beats
    # classic (and, transitively, so does the packet-level bound)
    if lipschitz and not _vle(report["bit"].value, report["classic"].value):
        raise BoundError("ordering violated: bit > classic")

    classic = report["classic"].value
    improvements: dict = {}
    if not is_inf(classic) and classic > 0:
        for name, db in report.items():
            if name != "classic" and not is_inf(db.value):
                improvements[name] = float(100 * (classic - db.value) / classic)
    return ComparisonReport(flow=f, bounds=report, improvements=improvements)
