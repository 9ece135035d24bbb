"""Worst-case trace construction and delay measurement.

The packet-level delay bound is certified tight by simulation: every flow
emits a *greedy* packet sequence (packet ``i`` arrives the instant its
packet-count curve first allows it), the FIFO server is as lazy as its
service curve permits, and packets are serialized at line rate.  The last
packet of the flow of interest then experiences exactly the computed bound.

For fixed-interval constraints a greedy source of the equivalent
packet-count curve would violate the constraint itself (it sends ``2K``
packets inside one interval), so the trace uses an ``eps``-shifted curve and
starts the simulation late enough that the shifted greedy sequence conforms;
the measured delay then lands within ``eps`` below the bound.

All event times are exact rationals; there is no time discretization.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .curves import (
    Breakpoint,
    Curve,
    HorizonError,
    RatLike,
    add,
    horizontal_deviation_attained,
    is_c_lipschitz,
    is_inf,
    lower_pseudo_inverse,
    min_plus_convolve,
    rat,
    right_limit,
    scale,
    sub_const_clamped,
)
from .regulation import PacketArrivalCurve, sliding_interval
from .service import ServerSpec


class TraceError(Exception):
    """A trace cannot be built under the requested conditions."""


@dataclass(frozen=True)
class PacketEvent:
    """One packet: arrival, length, start of service, and departure."""

    flow: int
    arrival: Fraction
    length: Fraction
    start: Fraction
    departure: Fraction

    @property
    def delay(self) -> Fraction:
        return self.departure - self.arrival


@dataclass(frozen=True)
class Trace:
    """A complete simulation trace of one FIFO busy scenario.

    ``fluid_output`` is the laziest output permitted by the service curve;
    actual departures serialize each packet at line rate from its start of
    service.  ``foi`` is the flow whose worst packet the trace exhibits.
    """

    packets: tuple[PacketEvent, ...]
    server: ServerSpec
    foi: int
    input_curve: Optional[Curve] = None
    fluid_output: Optional[Curve] = None


def greedy_arrivals(apkt: PacketArrivalCurve, count: int,
                    offset: RatLike = 0) -> list[Fraction]:
    """Arrival times of a greedy source: packet ``i`` at ``offset + inv(i)``.

    ``inv`` is the lower pseudo-inverse of the packet-count curve, so each
    packet arrives the first instant the constraint permits it.
    """
    offset = rat(offset)
    if offset < 0:
        raise TraceError("offset must be nonnegative")
    if count < 1:
        raise TraceError("need at least one packet")
    inv = lower_pseudo_inverse(apkt.curve)
    out = []
    for i in range(1, count + 1):
        t = inv.value_at(Fraction(i))
        if is_inf(t):
            raise TraceError(f"constraint never admits packet {i}")
        out.append(offset + t)
    return out


def _input_curve(events: Sequence[tuple[Fraction, Fraction]]) -> Curve:
    """Left-continuous cumulative bits from (arrival, length) pairs."""
    bps: list[Breakpoint] = []
    cum = Fraction(0)
    i = 0
    events = sorted(events, key=lambda e: e[0])
    while i < len(events):
        t = events[i][0]
        batch = Fraction(0)
        while i < len(events) and events[i][0] == t:
            batch += events[i][1]
            i += 1
        bps.append(Breakpoint(t, cum, cum + batch, Fraction(0)))
        cum += batch
    if not bps or bps[0].x > 0:
        bps.insert(0, Breakpoint(Fraction(0), Fraction(0), Fraction(0),
                                 Fraction(0)))
    return Curve(tuple(bps), bps[-1].x + 1, Fraction(1), Fraction(0))


def _run_fifo(arrivals: list[tuple[Fraction, Fraction, int]],
              server: ServerSpec, foi: int) -> Trace:
    """Serve time-sorted (arrival, length, flow) packets as lazily as allowed.

    The fluid output is the min-plus convolution of the cumulative input
    with the service curve; packet ``i`` starts service when the fluid
    output reaches the bits of all packets queued before it and departs one
    line-rate transmission later.
    """
    icurve = _input_curve([(a, l) for a, l, _ in arrivals])
    fluid = min_plus_convolve(icurve, server.beta)
    finv = lower_pseudo_inverse(fluid)
    packets = []
    cum = Fraction(0)
    prev_start: Optional[Fraction] = None
    for a, l, flow in arrivals:
        start = finv.value_at(cum)
        if is_inf(start):
            raise TraceError("service curve never delivers the backlog")
        cum += l
        end_fluid = finv.value_at(cum)
        depart = start + l / server.line_rate
        # line-rate serialization never outruns the fluid schedule
        if not is_inf(end_fluid) and end_fluid < depart:
            raise TraceError("fluid output is steeper than the line rate")
        if prev_start is not None and start < prev_start:
            raise TraceError("start of service went backwards")
        prev_start = start
        packets.append(PacketEvent(flow=flow, arrival=a, length=l,
                                   start=start, departure=depart))
    return Trace(packets=tuple(packets), server=server, foi=foi,
                 input_curve=icurve, fluid_output=fluid)


def _merge(per_flow: list[list[Fraction]], lmax: list[Fraction],
           foi: int) -> list[tuple[Fraction, Fraction, int]]:
    """Interleave per-flow arrivals; at equal instants the flow of interest
    queues last, other ties break by flow id."""
    events = []
    for u, times in enumerate(per_flow):
        rank = 1 if u == foi else 0
        for t in times:
            events.append((t, rank, u))
    events.sort()
    return [(t, lmax[u], u) for t, _, u in events]


def _build_greedy_trace(flows: Sequence[tuple[PacketArrivalCurve, Fraction]],
                        f: int, server: ServerSpec,
                        start_shift: Fraction) -> Trace:
    """Greedy maximum-length sources aimed at the critical instant of flow
    ``f``; all sequences are delayed by ``start_shift``."""
    if not 0 <= f < len(flows):
        raise TraceError("flow index out of range")
    if not server.transmit_at_line_rate:
        raise TraceError("trace needs line-rate packet transmission")
    if not is_c_lipschitz(server.beta, server.line_rate):
        raise TraceError("trace construction needs a service curve that is "
                         "Lipschitz at the line rate")
    lmaxes = [lm for _, lm in flows]
    w_plus: Optional[Curve] = None
    for (apkt, _), lm in zip(flows, lmaxes):
        term = scale(right_limit(apkt.curve), lm)
        w_plus = term if w_plus is None else add(w_plus, term)
    assert w_plus is not None
    shifted = sub_const_clamped(w_plus, lmaxes[f])
    try:
        _, t_crit = horizontal_deviation_attained(shifted, server.beta)
    except HorizonError as exc:
        raise TraceError(f"no critical instant: {exc}") from exc
    counts = []
    for apkt, _ in flows:
        n_u = apkt.curve.right_limit_at(t_crit)
        if is_inf(n_u):
            raise TraceError("infinite packet count at the critical instant")
        counts.append(int(n_u))
    inv_f = lower_pseudo_inverse(flows[f][0].curve)
    gamma = t_crit - inv_f.value_at(Fraction(counts[f]))
    if gamma < 0:
        raise TraceError("internal: negative greedy offset")
    per_flow = []
    for u, (apkt, _) in enumerate(flows):
        offset = start_shift + (gamma if u == f else Fraction(0))
        per_flow.append(greedy_arrivals(apkt, counts[u], offset))
    return _run_fifo(_merge(per_flow, lmaxes, f), server, f)


def build_tightness_trace(flows: Sequence[tuple[PacketArrivalCurve, RatLike]],
                          f: int, server: ServerSpec) -> Trace:
    """Trace in which the last packet of flow ``f`` meets its delay bound.

    Every flow sends maximum-length packets greedily; flow ``f`` is offset
    so that its last packet arrives exactly at the critical instant (the
    smallest maximizer of the delay objective).
    """
    pflows = [(apkt, rat(lm)) for apkt, lm in flows]
    return _build_greedy_trace(pflows, f, server, Fraction(0))


def _eps_shifted_curve(width: Fraction, count: int,
                       eps: Fraction) -> PacketArrivalCurve:
    """``count * ceil(max(t - eps, 0) / width) + count`` for ``t > 0``.

    A greedy source of this curve, started at least ``width - eps`` late,
    satisfies the aligned-window (fixed-interval) constraint while staying
    within ``eps`` of the unshifted curve's greedy timing.
    """
    k = Fraction(count)
    bps = (Breakpoint(Fraction(0), Fraction(0), k, Fraction(0)),
           Breakpoint(eps, k, 2 * k, Fraction(0)))
    return PacketArrivalCurve(Curve(bps, eps, width, k))


def build_tsn_tightness_trace(
        flows: Sequence[tuple[str, RatLike, int, RatLike]],
        f: int, server: ServerSpec, eps: Optional[RatLike] = None) -> Trace:
    """Tightness trace for interval-regulated flows.

    ``flows`` holds ``(kind, width, count, lmax)`` with kind ``"sliding"``
    or ``"fixed"``.  Sliding flows use their exact packet-count curve; fixed
    flows use the ``eps``-shifted curve and the whole simulation starts at
    ``max width - eps`` so their greedy sequences respect aligned windows.
    The measured delay of flow ``f`` lies within ``[bound - eps, bound]``.
    ``eps`` defaults to the smallest width divided by 1000.
    """
    if not flows:
        raise TraceError("need at least one flow")
    widths = [rat(w) for _, w, _, _ in flows]
    min_width = min(widths)
    eps = min_width / 1000 if eps is None else rat(eps)
    if not 0 < eps < min_width:
        raise TraceError("eps must lie strictly between 0 and the smallest "
                         "interval width")
    curves = []
    for (kind, _, count, _), width in zip(flows, widths):
        if kind == "sliding":
            curves.append(sliding_interval(width, count))
        elif kind == "fixed":
            curves.append(_eps_shifted_curve(width, count, eps))
        else:
            raise TraceError(f"unknown interval kind {kind!r}")
    pflows = [(c, rat(lm)) for c, (_, _, _, lm) in zip(curves, flows)]
    if any(kind == "fixed" for kind, _, _, _ in flows):
        start_shift = max(widths) - eps
    else:
        start_shift = Fraction(0)
    return _build_greedy_trace(pflows, f, server, start_shift)


def measure_delays(trace: Trace) -> dict:
    """Maximum response time ``D_n - A_n`` per flow id."""
    out: dict = {}
    for p in trace.packets:
        d = p.delay
        if p.flow not in out or d > out[p.flow]:
            out[p.flow] = d
    return out


def _output_value(trace: Trace, t: Fraction) -> Fraction:
    """Cumulative bits transmitted by time ``t`` (line-rate serialization)."""
    c = trace.server.line_rate
    total = Fraction(0)
    for p in trace.packets:
        if t >= p.departure:
            total += p.length
        elif t > p.start:
            total += c * (t - p.start)
    return total


def verify_service_curve(trace: Trace, beta: Curve) -> bool:
    """Check the transmitted output never falls below the lazy fluid output.

    Compares the packetized output against the min-plus convolution of the
    cumulative input with ``beta`` at every event time and curve breakpoint
    (value and right limit), which suffices for piecewise-linear functions.
    """
    if not trace.packets:
        return True
    icurve = trace.input_curve
    if icurve is None:
        icurve = _input_curve([(p.arrival, p.length) for p in trace.packets])
    fluid = min_plus_convolve(icurve, beta)
    horizon = max(p.departure for p in trace.packets) + 1
    points = {Fraction(0), horizon}
    for p in trace.packets:
        points.update((p.arrival, p.start, p.departure))
    points.update(x for x in fluid.breakpoint_positions(horizon))
    ordered = sorted(points)
    # also probe segment midpoints: both sides are linear between events
    for a, b in zip(ordered, ordered[1:]):
        points.add((a + b) / 2)
    for t in sorted(points):
        if t < 0 or t > horizon:
            continue
        need = fluid.value_at(t)
        if not is_inf(need) and _output_value(trace, t) < need:
            return False
    return True


def export_csv(trace: Trace) -> str:
    """Render the trace as CSV (exact rationals as strings)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["flow", "n", "A_n", "Q_n", "D_n", "l_n", "delay"])
    for n, p in enumerate(trace.packets, start=1):
        writer.writerow([p.flow, n, str(p.arrival), str(p.start),
                         str(p.departure), str(p.length), str(p.delay)])
    return buf.getvalue()
