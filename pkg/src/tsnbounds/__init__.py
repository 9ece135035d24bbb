"""Exact worst-case FIFO delay bounds for regulated traffic.

All arithmetic is exact (``fractions.Fraction``); curves are piecewise
affine with pseudo-periodic tails.  The main entry points are:

- :mod:`tsnbounds.curves` — the curve algebra (pointwise ops, min-plus
  convolution, pseudo-inverses, horizontal deviation)
- :mod:`tsnbounds.regulation` — arrival constraints (bit-level curves,
  spacing regulations, packet-count curves), conversions, conformance
- :mod:`tsnbounds.service` — service curves (rate-latency, deficit round
  robin, FIFO residual) and the server description
- :mod:`tsnbounds.bounds` — the delay-bound calculators and comparisons
- :mod:`tsnbounds.trace` — greedy worst-case traces certifying tightness
- :mod:`tsnbounds.cli` — the ``tsnbounds`` command-line tool
"""

from .curves import Breakpoint, Curve, CurveError
from .regulation import (
    BitArrivalCurve,
    FlowSpec,
    GRegulation,
    PacketArrivalCurve,
    RegulationError,
)
from .service import ServerSpec
from .bounds import BoundError, ComparisonReport, DelayBound, compare_approaches
from .trace import Trace, TraceError, build_tightness_trace, measure_delays

__all__ = [
    "Breakpoint", "Curve", "CurveError",
    "BitArrivalCurve", "FlowSpec", "GRegulation", "PacketArrivalCurve",
    "RegulationError", "ServerSpec",
    "BoundError", "ComparisonReport", "DelayBound", "compare_approaches",
    "Trace", "TraceError", "build_tightness_trace", "measure_delays",
]
