"""Command-line interface: scenario files in, delay bounds and traces out.

Scenarios are JSON documents::

    {
      "server": {"kind": "rate-latency",
                 "params": {"rate": "500 Mbps", "latency": "12.5 us"},
                 "lineRate": "1 Gbps",
                 "transmitAtLineRate": true},
      "flows": [{"name": "f1",
                 "constraint": {"family": "packet",
                                "kind": "sliding-interval",
                                "params": {"width": "16 ms", "count": 1}},
                 "lmin": "64 B", "lmax": "1442 B"}],
      "analysis": {"flow": "f1", "methods": ["pkt"], "units": "us"}
    }

Quantities are numbers in base units (bits, seconds, bits per second) or
strings with a unit suffix (s/ms/us, bit/B/KB, bps/Kbps/Mbps/Gbps, decimal
multipliers).  All parsing is exact: decimal literals become rationals.

Subcommands: ``bound`` (native-constraint bound for one flow), ``compare``
(all applicable methods with improvement percentages), ``convert``
(constraint-family conversion), ``tightness`` (build the worst-case trace
and check it meets the bound), ``curve`` (tabulate a curve and its
pseudo-inverses).  Exit status is 0 only when every requested value is
finite and every check passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from typing import Optional, Sequence

from . import bounds as _bounds
from . import curves as _curves
from . import regulation as _reg
from . import service as _svc
from . import trace as _trace
from .curves import Breakpoint, Curve, is_inf
from .regulation import (
    BitArrivalCurve,
    FlowSpec,
    GRegulation,
    PacketArrivalCurve,
)
from .service import ServerSpec


class ScenarioError(Exception):
    """A scenario document violates the schema; the message names the path."""


TIME_UNITS = {"s": Fraction(1), "ms": Fraction(1, 10**3),
              "us": Fraction(1, 10**6)}
DATA_UNITS = {"bit": Fraction(1), "B": Fraction(8), "KB": Fraction(8000)}
RATE_UNITS = {"bps": Fraction(1), "Kbps": Fraction(10**3),
              "Mbps": Fraction(10**6), "Gbps": Fraction(10**9)}
ALL_UNITS = {**TIME_UNITS, **DATA_UNITS, **RATE_UNITS}


def parse_quantity(value, path: str = "value") -> Fraction:
    """Exact rational from a JSON number or a ``"<number> <unit>"`` string."""
    if isinstance(value, bool):
        raise ScenarioError(f"{path}: expected a quantity, got a boolean")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        # floats only appear when a caller bypassed exact JSON loading
        return Fraction(str(value))
    if isinstance(value, str):
        parts = value.split()
        try:
            if len(parts) == 1:
                return Fraction(parts[0])
            if len(parts) == 2 and parts[1] in ALL_UNITS:
                return Fraction(parts[0]) * ALL_UNITS[parts[1]]
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"{path}: bad number {parts[0]!r}") from exc
        raise ScenarioError(f"{path}: unknown unit in {value!r}")
    raise ScenarioError(f"{path}: expected a quantity, got {type(value).__name__}")


def _get(obj: dict, key: str, path: str):
    if key not in obj:
        raise ScenarioError(f"{path}: missing field {key!r}")
    return obj[key]


def _qty(obj: dict, key: str, path: str) -> Fraction:
    return parse_quantity(_get(obj, key, path), f"{path}.{key}")


def _int(obj: dict, key: str, path: str) -> int:
    v = _qty(obj, key, path)
    if v.denominator != 1:
        raise ScenarioError(f"{path}.{key}: expected an integer")
    return int(v)


def build_constraint(spec: dict, path: str = "constraint"):
    """Constraint object from ``{"family", "kind", "params"}``."""
    family = _get(spec, "family", path)
    kind = _get(spec, "kind", path)
    params = spec.get("params", {})
    try:
        if family == "bit":
            if kind == "token-bucket":
                return _reg.token_bucket(_qty(params, "rate", path),
                                         _qty(params, "burst", path))
            if kind == "staircase":
                return _reg.staircase_bits(_qty(params, "burst", path),
                                           _qty(params, "width", path))
        elif family == "g":
            if kind == "lrq":
                return _reg.lrq(_qty(params, "rate", path))
            if kind == "shifted-rate":
                return _reg.shifted_rate(_qty(params, "rate", path),
                                         _qty(params, "shift", path))
        elif family == "packet":
            if kind == "sliding-interval":
                return _reg.sliding_interval(_qty(params, "width", path),
                                             _int(params, "count", path))
            if kind == "fixed-interval":
                return _reg.fixed_interval(_qty(params, "width", path),
                                           _int(params, "count", path))
            if kind == "token-bucket":
                return _reg.token_bucket_packets(_qty(params, "rate", path),
                                                 _qty(params, "burst", path))
            if kind == "rate-burst":
                return _reg.packet_rate_burst(_qty(params, "rate", path),
                                              _int(params, "burst", path))
        else:
            raise ScenarioError(f"{path}.family: unknown family {family!r}")
    except (_curves.CurveError, _reg.RegulationError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    raise ScenarioError(f"{path}.kind: unknown kind {kind!r} for family "
                        f"{family!r}")


def build_server(spec: dict, path: str = "server") -> ServerSpec:
    """Server from ``{"kind", "params", "lineRate", "transmitAtLineRate"}``."""
    kind = _get(spec, "kind", path)
    params = spec.get("params", {})
    line_rate = _qty(spec, "lineRate", path)
    transmit = spec.get("transmitAtLineRate", True)
    if not isinstance(transmit, bool):
        raise ScenarioError(f"{path}.transmitAtLineRate: expected a boolean")
    try:
        if kind == "rate-latency":
            beta = _svc.rate_latency(_qty(params, "rate", path),
                                     _qty(params, "latency", path))
        elif kind == "constant-rate":
            beta = _curves.affine(_qty(params, "rate", path))
        elif kind == "explicit-breakpoints":
            bps = []
            for j, bp in enumerate(_get(params, "breakpoints", path)):
                if not isinstance(bp, list) or len(bp) != 4:
                    raise ScenarioError(
                        f"{path}.breakpoints[{j}]: expected "
                        "[x, value, right_value, slope]")
                bps.append(_curves.Breakpoint(*(
                    parse_quantity(v, f"{path}.breakpoints[{j}]")
                    for v in bp)))
            beta = Curve(tuple(bps), _qty(params, "t0", path),
                         _qty(params, "period", path),
                         _qty(params, "increment", path))
        elif kind == "drr":
            beta = _svc.drr_service_curve(_int(params, "queues", path),
                                          _qty(params, "quantum", path),
                                          line_rate,
                                          _qty(params, "eps", path))
        elif kind == "fifo-residual":
            beta = _svc.fifo_residual_curve(_qty(params, "rate", path),
                                            _qty(params, "theta", path))
        else:
            raise ScenarioError(f"{path}.kind: unknown server kind {kind!r}")
        return ServerSpec(beta=beta, line_rate=line_rate,
                          transmit_at_line_rate=transmit)
    except _curves.CurveError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


class Scenario:
    """A parsed scenario: built objects plus the normalized document."""

    def __init__(self, doc: dict):
        if not isinstance(doc, dict):
            raise ScenarioError("scenario: expected an object")
        self.servers: dict = {}
        if "servers" in doc:
            raw = doc["servers"]
            if not isinstance(raw, list) or not raw:
                raise ScenarioError("scenario.servers: need at least one")
            for i, srv in enumerate(raw):
                name = _get(srv, "name", f"servers[{i}]")
                if name in self.servers:
                    raise ScenarioError(f"servers[{i}]: duplicate {name!r}")
                self.servers[name] = build_server(srv, f"servers[{i}]")
        else:
            self.servers[None] = build_server(_get(doc, "server", "scenario"))
        raw_flows = _get(doc, "flows", "scenario")
        if not isinstance(raw_flows, list) or not raw_flows:
            raise ScenarioError("scenario.flows: need at least one flow")
        self.flows: list[FlowSpec] = []
        self.flow_server: list = []
        names = set()
        for i, fl in enumerate(raw_flows):
            path = f"flows[{i}]"
            name = _get(fl, "name", path)
            if name in names:
                raise ScenarioError(f"{path}.name: duplicate name {name!r}")
            names.add(name)
            constraint = build_constraint(_get(fl, "constraint", path),
                                          f"{path}.constraint")
            srv = fl.get("server")
            if srv not in self.servers:
                raise ScenarioError(f"{path}.server: unknown server {srv!r}")
            self.flow_server.append(srv)
            try:
                self.flows.append(FlowSpec(
                    name=name, constraint=constraint,
                    lmin=_qty(fl, "lmin", path), lmax=_qty(fl, "lmax", path)))
            except _reg.RegulationError as exc:
                raise ScenarioError(f"{path}: {exc}") from exc
        self.analysis = doc.get("analysis", {})
        if not isinstance(self.analysis, dict):
            raise ScenarioError("scenario.analysis: expected an object")
        self.doc = doc

    def flow_index(self, name: Optional[str]) -> int:
        if name is None:
            name = self.analysis.get("flow", self.flows[0].name)
        for i, fl in enumerate(self.flows):
            if fl.name == name:
                return i
        raise ScenarioError(f"unknown flow {name!r}")

    def hop(self, f: int) -> tuple[ServerSpec, list[FlowSpec], int, list[int]]:
        """The server of flow ``f``, its co-resident flows, and indices.

        Returns ``(server, flows, position of f in flows, original indices)``.
        """
        srv = self.flow_server[f]
        idx = [i for i, s in enumerate(self.flow_server) if s == srv]
        return (self.servers[srv], [self.flows[i] for i in idx],
                idx.index(f), idx)

    @property
    def units(self) -> str:
        return self.analysis.get("units", "us")

    @property
    def eps(self) -> Optional[Fraction]:
        if "eps" in self.analysis:
            return parse_quantity(self.analysis["eps"], "analysis.eps")
        return None


def _canonical_value(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    if isinstance(v, dict):
        return {k: _canonical_value(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_canonical_value(x) for x in v]
    if isinstance(v, str):
        try:
            return _canonical_value(parse_quantity(v))
        except ScenarioError:
            return v
    return v


def parse_scenario(text: str) -> Scenario:
    """Scenario from JSON text; decimal literals load as exact rationals."""
    try:
        doc = json.loads(text, parse_float=Fraction, parse_int=Fraction)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario: invalid JSON ({exc})") from exc
    return Scenario(doc)


def serialize_scenario(scenario: Scenario) -> str:
    """Canonical JSON: quantities reduced to base units, exact rationals."""
    return json.dumps(_canonical_value(scenario.doc), indent=2,
                      sort_keys=True)


def load_scenario(ref: str) -> Scenario:
    """Scenario from a file path or the name of a bundled example."""
    try:
        with open(ref, encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    except FileNotFoundError:
        pass
    pkg = resources.files(__package__) / "scenarios" / f"{ref}.json"
    try:
        return parse_scenario(pkg.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioError(f"no scenario file or bundled scenario {ref!r}")


def bundled_scenario_names() -> list[str]:
    base = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in base.iterdir()
                  if p.name.endswith(".json"))


# ---------------------------------------------------------------------- #
# formatting


def format_seconds(value, units: str, exact: bool) -> str:
    if is_inf(value):
        return "inf"
    if exact:
        return str(value)
    scale = TIME_UNITS.get(units)
    if scale is None:
        raise ScenarioError(f"unknown time unit {units!r}")
    return f"{float(value / scale):.2f} {units}"


def native_bound(scenario: Scenario, f: int) -> _bounds.DelayBound:
    """Bound via the method matching the flow's own constraint family."""
    server, flows, f, _ = scenario.hop(f)
    foi = flows[f]
    if isinstance(foi.constraint, PacketArrivalCurve) and all(
            isinstance(s.constraint, PacketArrivalCurve) for s in flows):
        return _bounds.delay_bound_pkt(
            [(s.constraint, s.lmax) for s in flows], f, server)
    if isinstance(foi.constraint, GRegulation):
        gflows = [(_bounds._as_g(s), s.lmax) for s in flows]
        return _bounds.delay_bound_g(gflows, f, server)
    alpha1 = _bounds._as_bit(foi)
    others = _curves.zero()
    for i, s in enumerate(flows):
        if i != f:
            others = _curves.add(others, _bounds._as_bit(s).curve)
    if _curves.is_c_lipschitz(server.beta, server.line_rate):
        return _bounds.delay_bound_bit(alpha1, BitArrivalCurve(others),
                                       foi.lmin, server)
    return _bounds.per_flow_sweep(alpha1, BitArrivalCurve(others), server,
                                  foi.lmin, foi.lmax)


# ---------------------------------------------------------------------- #
# subcommands


def cmd_bound(args) -> int:
    scenario = load_scenario(args.scenario)
    f = scenario.flow_index(args.flow)
    units = args.units or scenario.units
    db = native_bound(scenario, f)
    print(f"flow {scenario.flows[f].name}: method={db.method} "
          f"bound={format_seconds(db.value, units, args.exact)}")
    if is_inf(db.value):
        if db.diagnostic:
            print(db.diagnostic, file=sys.stderr)
        return 1
    return 0


def cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    f = scenario.flow_index(args.flow)
    units = args.units or scenario.units
    server, hop_flows, hop_f, _ = scenario.hop(f)
    report = _bounds.compare_approaches(hop_flows, hop_f, server)
    methods = scenario.analysis.get("methods")
    rows = []
    for name, db in report.bounds.items():
        if methods and name not in methods:
            continue
        gain = report.improvements.get(name)
        rows.append((name, format_seconds(db.value, units, args.exact),
                     "" if gain is None else f"{gain:.1f}%"))
    if args.csv:
        print("method,bound,improvement")
        for row in rows:
            print(",".join(row))
    else:
        width = max(len(r[0]) for r in rows)
        print(f"flow {scenario.flows[f].name}:")
        for name, val, gain in rows:
            suffix = f"  (-{gain})" if gain else ""
            print(f"  {name:<{width}}  {val}{suffix}")
    if any(is_inf(db.value) for db in report.bounds.values()):
        return 1
    return 0


def _print_curve(curve: Curve) -> None:
    print(f"t0={curve.t0} period={curve.period} increment={curve.increment}")
    print("x,value,right_value,slope")
    for bp in curve.breakpoints:
        print(f"{bp.x},{bp.value},{bp.right_value},{bp.slope}")


def cmd_convert(args) -> int:
    spec = json.loads(args.constraint, parse_float=Fraction,
                      parse_int=Fraction)
    constraint = build_constraint(spec)
    lmin = parse_quantity(args.lmin, "--lmin") if args.lmin else None
    lmax = parse_quantity(args.lmax, "--lmax") if args.lmax else None
    target = args.to
    if target == "g":
        if isinstance(constraint, BitArrivalCurve):
            if lmin is None:
                raise ScenarioError("bit -> g conversion needs --lmin")
            out = _reg.bit_to_g(constraint, lmin)
        elif isinstance(constraint, PacketArrivalCurve):
            if lmax is None:
                raise ScenarioError("packet -> g conversion needs --lmax")
            out = _reg.pkt_to_g(constraint, lmax)
        else:
            raise ScenarioError("constraint is already a spacing regulation")
    elif target == "bit":
        if isinstance(constraint, GRegulation):
            if lmax is None:
                raise ScenarioError("g -> bit conversion needs --lmax")
            out = _reg.g_to_bit(constraint, lmax)
        elif isinstance(constraint, PacketArrivalCurve):
            if lmax is None:
                raise ScenarioError("packet -> bit conversion needs --lmax")
            out = _reg.pkt_to_bit(constraint, lmax)
        else:
            raise ScenarioError("constraint is already a bit-level curve")
    else:
        raise ScenarioError(f"no conversion to family {target!r}")
    _print_curve(out.curve)
    return 0


def cmd_tightness(args) -> int:
    scenario = load_scenario(args.scenario)
    units = args.units or scenario.units
    server, flows, f, indices = scenario.hop(scenario.flow_index(args.flow))
    if not all(isinstance(s.constraint, PacketArrivalCurve) for s in flows):
        raise ScenarioError("tightness traces need packet-level constraints "
                            "for every flow on the hop")
    fixed = [i for i, orig in enumerate(indices)
             if _is_fixed_interval_doc(scenario, orig)]
    bound = _bounds.delay_bound_pkt(
        [(s.constraint, s.lmax) for s in flows], f, server)
    if is_inf(bound.value):
        print("bound is unbounded; no trace", file=sys.stderr)
        return 1
    eps = None
    if args.eps:
        eps = parse_quantity(args.eps, "--eps")
    elif scenario.eps is not None:
        eps = scenario.eps
    if fixed:
        tsn_flows = []
        for i, (s, orig) in enumerate(zip(flows, indices)):
            doc_kind = scenario.doc["flows"][orig]["constraint"]["kind"]
            if doc_kind not in ("sliding-interval", "fixed-interval"):
                raise ScenarioError(
                    "mixing fixed-interval flows with non-interval "
                    "constraints is not supported in tightness traces")
            kind = "fixed" if i in fixed else "sliding"
            params = scenario.doc["flows"][orig]["constraint"]["params"]
            width = parse_quantity(params["width"], "width")
            count = int(parse_quantity(params["count"], "count"))
            tsn_flows.append((kind, width, count, s.lmax))
        tr = _trace.build_tsn_tightness_trace(tsn_flows, f, server, eps)
        if eps is None:
            eps = min(w for _, w, _, _ in tsn_flows) / 1000
    else:
        tr = _trace.build_tightness_trace(
            [(s.constraint, s.lmax) for s in flows], f, server)
    measured = _trace.measure_delays(tr)[f]
    if args.csv:
        print(_trace.export_csv(tr), end="")
    print(f"bound    = {format_seconds(bound.value, units, args.exact)}")
    print(f"measured = {format_seconds(measured, units, args.exact)}")
    if fixed:
        ok = bound.value - eps <= measured <= bound.value
        print("TIGHT within eps: measured in [bound - eps, bound]"
              if ok else "MISMATCH: measured outside [bound - eps, bound]")
    else:
        ok = measured == bound.value
        print("TIGHT: measured == bound" if ok
              else "MISMATCH: measured != bound")
    return 0 if ok else 1


def _is_fixed_interval_doc(scenario: Scenario, i: int) -> bool:
    spec = scenario.doc["flows"][i].get("constraint", {})
    return spec.get("kind") == "fixed-interval"


def cmd_curve(args) -> int:
    spec = json.loads(args.spec, parse_float=Fraction, parse_int=Fraction)
    if "family" in spec:
        curve = build_constraint(spec).curve
    else:
        curve = build_server(spec).beta
    points = [parse_quantity(p.strip(), "--points")
              for p in args.points.split(",")]
    lower = _curves.lower_pseudo_inverse(curve)
    upper = _curves.upper_pseudo_inverse(curve)

    def show(v):
        return "inf" if is_inf(v) else str(v)

    print("x,value,left,right,inv_lower,inv_upper")
    for x in points:
        print(",".join([str(x), show(curve.value_at(x)),
                        show(curve.left_limit_at(x) if x > 0 else curve.value_at(x)),
                        show(curve.right_limit_at(x)),
                        show(lower.value_at(x)), show(upper.value_at(x))]))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tsnbounds",
        description="Worst-case FIFO delay bounds for regulated flows")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="scenario file or bundled name "
                                f"({', '.join(bundled_scenario_names())})")
            p.add_argument("--flow", help="flow name (default: analysis.flow)")
        p.add_argument("--units", choices=sorted(TIME_UNITS),
                       help="time unit for display (default us)")
        p.add_argument("--exact", action="store_true",
                       help="print exact rationals in seconds")
        p.add_argument("--csv", action="store_true",
                       help="machine-readable CSV output")

    p = sub.add_parser("bound", help="native-constraint delay bound")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("compare", help="all applicable bounds and improvements")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convert", help="convert a constraint between families")
    p.add_argument("--constraint", required=True,
                   help="JSON constraint {family, kind, params}")
    p.add_argument("--to", required=True, choices=["bit", "g"],
                   help="target family")
    p.add_argument("--lmin", help="minimum packet length")
    p.add_argument("--lmax", help="maximum packet length")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("tightness", help="build and check a worst-case trace")
    common(p)
    p.add_argument("--eps", help="shift for fixed-interval flows")
    p.set_defaults(func=cmd_tightness)

    p = sub.add_parser("curve", help="tabulate a curve and its inverses")
    p.add_argument("--spec", required=True,
                   help="JSON constraint or server description")
    p.add_argument("--points", required=True,
                   help="comma-separated evaluation points")
    p.set_defaults(func=cmd_curve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, _bounds.BoundError, _trace.TraceError,
            _reg.RegulationError, _curves.CurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
