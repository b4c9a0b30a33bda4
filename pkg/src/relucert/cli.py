"""Command-line front end: verify, infer, box, support, compare, sweep, and
cells2d subcommands with a fixed exit-code contract and reproducible run
manifests.

Exit codes: 0 success (verify: property holds), 1 property violated,
2 input/precondition/range errors, 3 resource limit, 4 internal error.
Every error prints a one-line JSON object to standard error."""

from __future__ import annotations

import argparse
import json
import re
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import DEFAULT_NODE_CAP, DEFAULT_TOLERANCES
from .errors import (
    DegenerateRegion,
    EmptyRegion,
    InternalError,
    NumericalError,
    ParseError,
    PreconditionError,
    RangeError,
    RelucertError,
    ResourceLimit,
)
from .geometry import EMPTY_BOX_JSON, max_box_sum, max_box_volume
from .harness import (
    compare,
    load_dataset,
    sweep_epsilon,
    training_support,
    write_aggregate_csv,
    write_compare_csv,
    write_sweep_csv,
)
from .infer import (
    DominanceProperty,
    RegionCertificate,
    get_convex_region_baseline,
    infer_region_interpolant,
    region_polytope,
)
from .model import forward, load_network
from .pattern import ActivationPattern
from .verify import HOLDS, LinearProperty, check_implies
from .viz import emit_svg, enumerate_cells

FORMAT_VERSIONS = {"network": 1, "certificate": 1, "box": 1, "compare-csv": 1}

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3
EXIT_INTERNAL = 4


class _CliError(ParseError):
    """Flag-level misuse detected before any module runs."""


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        # let values like "-2,2,-2,2" (negative numbers in comma lists) pass
        # as arguments instead of being read as option strings
        self._negative_number_matcher = re.compile(
            r"^-\d+(\.\d+)?(,-?\d+(\.\d+)?)*$")

    def error(self, message):  # route argparse failures through the JSON path
        raise _CliError(message)


def _version_string() -> str:
    fmts = ", ".join(f"{k} {v}" for k, v in sorted(FORMAT_VERSIONS.items()))
    return f"relucert {__version__} (formats: {fmts})"


# ---------------------------------------------------------------------------
# input parsing helpers


def _load_json_file(path: str):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e


def parse_pattern_arg(text: str, net) -> ActivationPattern:
    """'@file' (JSON list of status lists), a key like '10-x', or inline
    statuses like 'on,off|dc'."""
    try:
        if text.startswith("@"):
            return ActivationPattern.of(_load_json_file(text[1:]))
        if any(s in text for s in ("on", "off", "dc")):
            return ActivationPattern.of(
                tuple(tuple(s.strip() for s in part.split(","))
                      for part in text.split("|")))
        return ActivationPattern.from_key(text)
    except (ValueError, KeyError, TypeError) as e:
        raise ParseError(f"bad pattern {text!r}: {e}") from e


def _check_pattern_shape(pattern: ActivationPattern, net):
    if pattern.shape != tuple(net.hidden_sizes):
        raise ParseError(
            f"pattern shape {pattern.shape} does not match network hidden "
            f"sizes {tuple(net.hidden_sizes)}")


def parse_property_arg(text: str, net) -> LinearProperty:
    """'dominance:<target>[:r1,r2]' or '@file' holding either a dominance
    spec {target, rivals} or explicit clauses."""
    if text.startswith("@"):
        obj = _load_json_file(text[1:])
        if isinstance(obj, dict) and "clauses" in obj:
            try:
                return LinearProperty.from_json(obj)
            except (KeyError, ValueError, TypeError) as e:
                raise ParseError(f"bad property file: {e}") from e
        if isinstance(obj, dict) and "target" in obj:
            return DominanceProperty.from_json(obj).to_linear(net)
        raise ParseError("property file needs 'clauses' or 'target'/'rivals'")
    if text.startswith("dominance:"):
        parts = text.split(":")
        try:
            target = int(parts[1])
            rivals = (tuple(int(v) for v in parts[2].split(","))
                      if len(parts) > 2 and parts[2] else None)
        except (ValueError, IndexError) as e:
            raise ParseError(f"bad dominance spec {text!r}") from e
        return DominanceProperty.for_net(net, target, rivals).to_linear(net)
    raise ParseError(f"bad property {text!r}: expected 'dominance:...' or '@file'")


def parse_dominance_arg(target, rivals_text, net, x0) -> DominanceProperty:
    if target is None:
        target = int(np.argmax(forward(net, x0).logits))
    rivals = None
    if rivals_text:
        try:
            rivals = tuple(int(v) for v in rivals_text.split(","))
        except ValueError as e:
            raise ParseError(f"bad rivals {rivals_text!r}") from e
    return DominanceProperty.for_net(net, int(target), rivals)


def _parse_floats(text: str, flag: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise ParseError(f"bad {flag} {text!r}: expected comma-separated numbers") from e


def resolve_seed(args, net):
    """--seed-vector 'a,b' or --seed-index N (requires --data/--label);
    returns (x0, dataset-or-None)."""
    has_vec = getattr(args, "seed_vector", None) is not None
    has_idx = getattr(args, "seed_index", None) is not None
    if has_vec == has_idx:
        raise _CliError("give exactly one of --seed-vector and --seed-index")
    if has_vec:
        x0 = np.array(_parse_floats(args.seed_vector, "--seed-vector"))
        if len(x0) != net.input_dim:
            raise ParseError(
                f"seed vector has {len(x0)} entries, network expects {net.input_dim}")
        return x0, None
    if not getattr(args, "data", None) or not getattr(args, "label", None):
        raise _CliError("--seed-index requires --data and --label")
    data = load_dataset(args.data, args.label, net.input_box)
    if not 0 <= args.seed_index < data.num_rows:
        raise RangeError(
            f"seed index {args.seed_index} outside dataset of {data.num_rows} rows")
    return data.features[args.seed_index], data


def _load_cert(path: str) -> RegionCertificate:
    obj = _load_json_file(path)
    try:
        return RegionCertificate.from_json(obj)
    except (KeyError, ValueError, TypeError) as e:
        raise ParseError(f"bad certificate file {path}: {e}") from e


def _check_cert_net(cert: RegionCertificate, net):
    if cert.net_sha256 and net.source_sha256 and cert.net_sha256 != net.source_sha256:
        raise PreconditionError(
            "certificate was produced for a different network (sha256 mismatch)")


# ---------------------------------------------------------------------------
# output helpers


def _manifest(args, net_sha: str, data_sha: str | None) -> dict:
    return {
        "command": ["relucert", *args.raw_argv],
        "net_sha256": net_sha,
        "dataset_sha256": data_sha,
        "tolerances": {
            "tau_lp": DEFAULT_TOLERANCES.tau_lp,
            "tau_cx": DEFAULT_TOLERANCES.tau_cx,
            "delta_strict": DEFAULT_TOLERANCES.delta_strict,
        },
        "node_cap": args.node_cap,
        "timestamp": (None if args.deterministic
                      else datetime.now(timezone.utc).isoformat()),
        "version": __version__,
    }


def _write_manifest(out_path: str, manifest: dict):
    with open(out_path + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _emit_json(obj, args, net_sha="", data_sha=None):
    text = json.dumps(obj, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as f:
            f.write(text)
        _write_manifest(args.out, _manifest(args, net_sha, data_sha))
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    net = load_network(args.net)
    pattern = parse_pattern_arg(args.pattern, net)
    _check_pattern_shape(pattern, net)
    prop = parse_property_arg(args.property, net)
    result = check_implies(net, pattern, prop, node_cap=args.node_cap)
    obj = result.to_json()
    if args.deterministic:
        obj["stats"]["ms"] = 0.0
    _emit_json(obj, args, net.source_sha256)
    return EXIT_OK if result.status == HOLDS else EXIT_VIOLATED


def cmd_infer(args) -> int:
    net = load_network(args.net)
    x0, data = resolve_seed(args, net)
    prop = parse_dominance_arg(args.target, args.rivals, net, x0)
    if args.mode == "baseline":
        if args.logit_factor is not None:
            raise _CliError("--logit-factor only applies to --mode interpolant")
        cert = get_convex_region_baseline(net, prop, x0,
                                          node_cap=args.node_cap)
    else:
        if args.logit_factor is None:
            raise _CliError("--mode interpolant requires --logit-factor")
        cert = infer_region_interpolant(net, x0, prop, args.logit_factor,
                                        node_cap=args.node_cap)
    _emit_json(cert.to_json(), args, net.source_sha256,
               data.source_sha256 if data else None)
    return EXIT_OK


def cmd_box(args) -> int:
    net = load_network(args.net)
    cert = _load_cert(args.region)
    _check_cert_net(cert, net)
    poly = region_polytope(net, cert)
    try:
        if args.objective == "sum":
            box = max_box_sum(poly, net.input_box, cert.delta_strict)
        else:
            box = max_box_volume(poly, net.input_box, cert.delta_strict)
        obj = box.to_json()
    except EmptyRegion:
        obj = dict(EMPTY_BOX_JSON)
    _emit_json(obj, args, net.source_sha256)
    return EXIT_OK


def cmd_support(args) -> int:
    net = load_network(args.net)
    cert = _load_cert(args.region)
    _check_cert_net(cert, net)
    data = load_dataset(args.data, args.label, net.input_box)
    n = training_support(net, cert, data)
    _emit_json({"support": n, "rows": data.num_rows}, args,
               net.source_sha256, data.source_sha256)
    return EXIT_OK


def cmd_compare(args) -> int:
    net = load_network(args.net)
    data = load_dataset(args.data, args.label, net.input_box)
    factors = _parse_floats(args.logit_factors, "--logit-factors")
    rows = compare(net, data, factors, prop_rule=args.prop_rule,
                   node_cap=args.node_cap, deterministic=args.deterministic,
                   jobs=args.jobs)
    write_compare_csv(rows, args.out)
    manifest = _manifest(args, net.source_sha256, data.source_sha256)
    _write_manifest(args.out, manifest)
    best_path = args.out + ".best.csv"
    write_aggregate_csv(rows, best_path)
    _write_manifest(best_path, manifest)
    return EXIT_OK


def cmd_sweep(args) -> int:
    net = load_network(args.net)
    data = load_dataset(args.data, args.label, net.input_box)
    factors = _parse_floats(args.logit_factors, "--logit-factors")
    rows = sweep_epsilon(net, data, factors, prop_rule=args.prop_rule,
                         node_cap=args.node_cap,
                         deterministic=args.deterministic, jobs=args.jobs)
    write_sweep_csv(rows, args.out)
    _write_manifest(args.out, _manifest(args, net.source_sha256,
                                        data.source_sha256))
    return EXIT_OK


def cmd_cells2d(args) -> int:
    net = load_network(args.net)
    if args.bounds:
        vals = _parse_floats(args.bounds, "--bounds")
        if len(vals) != 4:
            raise ParseError("--bounds needs xmin,xmax,ymin,ymax")
        bounds = tuple(vals)
    else:
        bounds = (net.input_box[0][0], net.input_box[0][1],
                  net.input_box[1][0], net.input_box[1][1])
    pair = (0, 1)
    if args.class_pair:
        vals = _parse_floats(args.class_pair, "--class-pair")
        if len(vals) != 2 or any(v != int(v) for v in vals):
            raise ParseError("--class-pair needs two class indices")
        pair = (int(vals[0]), int(vals[1]))
    cellmap = enumerate_cells(net, bounds, pair)
    overlays = []
    for path in args.overlay or []:
        cert = _load_cert(path)
        _check_cert_net(cert, net)
        try:
            box = max_box_volume(region_polytope(net, cert), net.input_box,
                                 cert.delta_strict)
        except (EmptyRegion, DegenerateRegion):
            box = None
        overlays.append((cert, box))
    emit_svg(cellmap, overlays, args.out, net=net)
    _write_manifest(args.out, _manifest(args, net.source_sha256, None))
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring


def _add_common(p):
    p.add_argument("--net", required=True, help="network JSON file")
    p.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="zero timings and timestamps for bit-identical outputs")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers across seeds (compare/sweep)")


def build_parser() -> _Parser:
    parser = _Parser(prog="relucert",
                     description="Certified dominance regions for feedforward "
                                 "classifiers with piecewise-linear activations")
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("verify", help="decide whether a pattern implies a property")
    _add_common(p)
    p.add_argument("--pattern", required=True,
                   help="'on,off|dc', a key like '10-x', or @file")
    p.add_argument("--property", required=True,
                   help="'dominance:<target>[:rivals]' or @file")
    p.add_argument("--out", help="write the result JSON here instead of stdout")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("infer", help="produce a certified region for a seed")
    _add_common(p)
    p.add_argument("--mode", choices=("baseline", "interpolant"), required=True)
    p.add_argument("--logit-factor", type=float)
    p.add_argument("--seed-vector", help="comma-separated input coordinates")
    p.add_argument("--seed-index", type=int, help="row in --data")
    p.add_argument("--data", help="CSV dataset (for --seed-index)")
    p.add_argument("--label", help="label column name in --data")
    p.add_argument("--target", type=int, help="target class (default: predicted)")
    p.add_argument("--rivals", help="comma-separated rival classes")
    p.add_argument("--out", help="write the certificate JSON here")
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("box", help="largest axis-aligned box inside a region")
    _add_common(p)
    p.add_argument("--region", required=True, help="certificate JSON file")
    p.add_argument("--objective", choices=("sum", "logvol"), default="logvol")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_box)

    p = sub.add_parser("support", help="count dataset rows inside a region")
    _add_common(p)
    p.add_argument("--region", required=True, help="certificate JSON file")
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_support)

    p = sub.add_parser("compare", help="baseline vs interpolant over all seeds")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--logit-factors", required=True, help="e.g. 0.1,0.5,0.9")
    p.add_argument("--prop-rule", choices=("predicted", "label"),
                   default="predicted")
    p.add_argument("--out", required=True,
                   help="per-seed CSV; best-per-seed CSV lands at <out>.best.csv")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="average metrics per logit factor")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--logit-factors", required=True)
    p.add_argument("--prop-rule", choices=("predicted", "label"),
                   default="predicted")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("cells2d", help="cell-decomposition figure for 2-D inputs")
    _add_common(p)
    p.add_argument("--bounds", help="xmin,xmax,ymin,ymax (default: input box)")
    p.add_argument("--class-pair", help="classes for the separator, e.g. 0,1")
    p.add_argument("--overlay", action="append",
                   help="certificate JSON to draw (repeatable)")
    p.add_argument("--out", required=True, help="SVG output path")
    p.set_defaults(fn=cmd_cells2d)

    return parser


def _error_exit_code(e: RelucertError) -> int:
    if isinstance(e, ResourceLimit):
        return EXIT_LIMIT
    if isinstance(e, (InternalError, NumericalError)):
        return EXIT_INTERNAL
    return EXIT_INPUT


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.raw_argv = argv
        return args.fn(args)
    except RelucertError as e:
        sys.stderr.write(json.dumps(
            {"error": type(e).__name__, "message": str(e)}) + "\n")
        return _error_exit_code(e)
    except OSError as e:
        sys.stderr.write(json.dumps(
            {"error": "IoError", "message": str(e)}) + "\n")
        return EXIT_INPUT


def run():  # console-script entry point
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
