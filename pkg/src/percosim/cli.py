"""Batch front end: run scenarios, sweep seeds, dump routes, and drive the codec.

Exit codes: 0 on success, 1 on scenario failure (nothing routed, delivered, or
recovered; undecodable packet files), 2 on malformed configs or inputs.
Identical invocations produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    ConstraintViolationError,
    FormatError,
    InsufficientPacketsError,
    NotFoundError,
    ParameterError,
    PercosimError,
    RoutingError,
    TransportError,
)
from .fountain import (
    DecoderState,
    RobustSolitonParams,
    SourceBlock,
    Status,
    encode_packet,
    pack_packet,
    unpack_stream,
)
from .routing import run_routing_phase
from .scenarios import (
    Metrics,
    SimConfig,
    aggregate,
    build_graph,
    load_config,
    run_scenario,
)
from .sim import Simulation


def _write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _metrics_csv(rows: list[Metrics], summary: dict | None = None) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(Metrics.CSV_FIELDS)
    for row in rows:
        writer.writerow(row.csv_row())
    if summary:
        # aggregate rows keep the schema; the seed column names the statistic
        for stat in ("mean", "min", "max", "count"):
            cells = [rows[0].scenario if rows else "", stat]
            for name in Metrics.CSV_FIELDS[2:]:
                entry = summary.get(name)
                cells.append("" if entry is None else format(entry[stat], ".10g"))
            writer.writerow(cells)
    return buf.getvalue().encode()


def _metrics_json(rows: list[Metrics], summary: dict | None = None, single: bool = False) -> bytes:
    if single:
        doc: object = rows[0].to_json()
    else:
        doc = {"rows": [r.to_json() for r in rows]}
        if summary is not None:
            doc["aggregate"] = summary
    return (json.dumps(doc, indent=2) + "\n").encode()


def _scenario_failed(metrics: Metrics) -> bool:
    if metrics.flows > 0 and metrics.routing_successes == 0:
        return True
    if metrics.transfers > 0 and metrics.deliveries == 0:
        return True
    if metrics.storage_recovery_rate == 0.0:
        return True
    return False


def _parse_seeds(text: str) -> range:
    match = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", text)
    if not match:
        raise ConfigError("--seeds", f"expected A..B, got {text!r}")
    lo, hi = int(match.group(1)), int(match.group(2))
    if hi < lo:
        raise ConfigError("--seeds", f"empty seed range {text!r}")
    return range(lo, hi + 1)


def _sweep_rows(config: SimConfig, seeds: range) -> list[Metrics]:
    return [run_scenario(config.with_seed(seed)) for seed in seeds]


# ---- codec configs: {"code": {...}, "input": path, "frame_id", "packets", "length"}


def _load_codec_config(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")
    return doc


def _codec_params(doc: dict) -> tuple[int, int, RobustSolitonParams]:
    code = doc.get("code") or {}
    if not isinstance(code, dict):
        raise ConfigError("code", "expected an object")
    k = code.get("k")
    m = code.get("m")
    if not isinstance(k, int) or not isinstance(m, int) or k < 1 or m < 1:
        raise ConfigError("code", "k and m must be positive integers")
    try:
        soliton = RobustSolitonParams(c=float(code.get("c", 0.03)), delta=float(code.get("delta", 0.5)))
    except ParameterError as exc:
        raise ConfigError("code", str(exc)) from None
    return k, m, soliton


def _cmd_encode(args) -> int:
    doc = _load_codec_config(args.config)
    k, m, soliton = _codec_params(doc)
    input_name = doc.get("input")
    if not isinstance(input_name, str):
        raise ConfigError("input", "required path is missing")
    input_path = Path(args.config).parent / input_name
    if not input_path.exists():
        raise ConfigError("input", f"input file {input_path} does not exist")
    data = input_path.read_bytes()
    if len(data) > k * m:
        raise ConfigError("code", f"input is {len(data)} bytes but the block holds k*m = {k * m}")
    frame_id = doc.get("frame_id", 0)
    count = doc.get("packets", math.ceil(1.5 * k))
    if not isinstance(count, int) or count < 1:
        raise ConfigError("packets", "must be a positive integer")
    block = SourceBlock.from_bytes(k, m, data)
    out = bytearray()
    for index in range(count):
        out += pack_packet(encode_packet(block, index, soliton, frame_id), k, m)
    _write_bytes(args.out, bytes(out))
    print(f"wrote {count} packets ({len(out)} bytes) to {args.out}")
    return 0


def _cmd_decode(args) -> int:
    doc = _load_codec_config(args.config)
    input_name = doc.get("input")
    if not isinstance(input_name, str):
        raise ConfigError("input", "required path is missing")
    input_path = Path(args.config).parent / input_name
    if not input_path.exists():
        raise ConfigError("input", f"input file {input_path} does not exist")
    code = doc.get("code") or {}
    soliton = RobustSolitonParams(c=float(code.get("c", 0.03)), delta=float(code.get("delta", 0.5)))
    packets, k, m = unpack_stream(input_path.read_bytes())
    decoder = DecoderState(k, m, soliton, packets[0].frame_id)
    status = Status.NEED_MORE
    for packet in packets:
        status = decoder.push(packet)
        if status is Status.COMPLETE:
            break
    if status is not Status.COMPLETE:
        raise InsufficientPacketsError(
            f"{len(packets)} packets recovered only "
            f"{len(decoder.recovered)}/{k} source packets"
        )
    data = decoder.block().to_bytes()
    length = doc.get("length")
    if length is not None:
        if not isinstance(length, int) or not 0 <= length <= k * m:
            raise ConfigError("length", f"must lie in [0, k*m] = [0, {k * m}]")
        data = data[:length]
    _write_bytes(args.out, data)
    print(f"wrote {len(data)} bytes to {args.out}")
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config, seed=args.seed)
    metrics = run_scenario(config)
    if args.format == "csv":
        payload = _metrics_csv([metrics])
    else:
        payload = _metrics_json([metrics], single=True)
    _write_bytes(args.out, payload)
    print(f"wrote {args.out}")
    return 1 if _scenario_failed(metrics) else 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config, seed=0)
    seeds = _parse_seeds(args.seeds)
    rows = _sweep_rows(config, seeds)
    summary = aggregate(rows)
    if args.format == "csv":
        payload = _metrics_csv(rows, summary)
    else:
        payload = _metrics_json(rows, summary)
    _write_bytes(args.out, payload)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_route_dump(args) -> int:
    config = load_config(args.config, seed=args.seed)
    sim = Simulation(build_graph(config), config.link, seed=config.seed)
    sim.apply_timeline(config.timeline)
    source = config.traffic.source
    dest = config.traffic.dest
    if config.scenario == "relay":
        source = 0 if source is None else source
        dest = (config.relay.earth + config.relay.moon + 1) if dest is None else dest
    if source is None or dest is None:
        nodes = sorted(sim.graph.nodes)
        if len(nodes) < 2:
            raise ConfigError("traffic", "graph too small to pick endpoints")
        source = nodes[0] if source is None else source
        dest = nodes[-1] if dest is None else dest
    route = run_routing_phase(sim, source, dest, config.routing)
    text = json.dumps(route.to_json(), indent=2) + "\n"
    if args.out:
        _write_bytes(args.out, text.encode())
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    from .report import render_figures  # matplotlib import deferred until needed

    config = load_config(args.config, seed=0)
    seeds = _parse_seeds(args.seeds)
    rows = _sweep_rows(config, seeds)
    summary = aggregate(rows)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    basename = config.scenario
    if args.format == "csv":
        table = out_dir / f"{basename}_metrics.csv"
        _write_bytes(table, _metrics_csv(rows, summary))
    else:
        table = out_dir / f"{basename}_metrics.json"
        _write_bytes(table, _metrics_json(rows, summary))
    figures = render_figures(rows, out_dir, basename)
    for path in [table, *figures]:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percosim",
        description="Probe-reinforced multipath routing and fountain-coded transport, simulated.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds: bool = False, out_required: bool = True, fmt: bool = False):
        p.add_argument("--config", required=True, help="JSON config document")
        if seeds:
            p.add_argument("--seeds", required=True, help="inclusive seed range A..B")
        else:
            p.add_argument("--seed", type=int, default=None, help="run seed (overrides the config)")
        if out_required:
            p.add_argument("--out", required=True, help="output path")
        else:
            p.add_argument("--out", default=None, help="output path (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="csv")

    common(sub.add_parser("run", help="run one scenario and write its metrics"), fmt=True)
    common(sub.add_parser("sweep", help="run a seed range and aggregate"), seeds=True, fmt=True)
    common(sub.add_parser("report", help="sweep plus figures rendered beside the table"),
           seeds=True, fmt=True)
    common(sub.add_parser("encode", help="fountain-code a file into wire packets"))
    common(sub.add_parser("decode", help="decode a wire packet file"))
    common(sub.add_parser("route-dump", help="run only route discovery and dump the route JSON"),
           out_required=False)
    return parser


_HANDLERS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "route-dump": _cmd_route_dump,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, FormatError, ConstraintViolationError, ParameterError, NotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RoutingError, TransportError, InsufficientPacketsError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    except PercosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
