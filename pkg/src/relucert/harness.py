"""Experiment harness: dataset ingestion, seed selection (one representative
per realized activation pattern), training-support metric, baseline-versus-
interpolant comparison, and logit-factor sweeps with CSV emission."""

from __future__ import annotations

import csv
import hashlib
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import model
from .config import DEFAULT_NODE_CAP, DEFAULT_TOLERANCES, Tolerances
from .errors import (
    DegenerateRegion,
    DimensionError,
    EmptyDataset,
    EmptyRegion,
    InternalError,
    NonNumericError,
    ParseError,
    RangeError,
    RelucertError,
)
from .geometry import log_volume, max_box_volume, sample_region
from .infer import (
    DominanceProperty,
    RegionCertificate,
    get_convex_region_baseline,
    infer_region_interpolant,
    region_polytope,
)
from .model import Network

COMPARE_COLUMNS = [
    "seed_idx", "pattern_key", "mode_baseline", "support_baseline",
    "logvol_baseline", "lf", "support_interp", "logvol_interp",
    "n_constrained_baseline", "n_constrained_interp", "ms_baseline",
    "ms_interp", "error",
]

AGGREGATE_COLUMNS = [
    "seed_idx", "pattern_key", "mode_baseline", "support_baseline",
    "logvol_baseline", "best_lf", "support_interp_best", "logvol_interp_best",
]

SWEEP_COLUMNS = ["lf", "avg_support", "avg_logvol", "n_ok"]

SOUNDNESS_SAMPLES = 200  # per-certificate spot check inside compare/sweep


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray         # (n, d), already scaled into input_box
    labels: np.ndarray           # (n,) integer class indices
    feature_names: tuple[str, ...]
    scaling: tuple[tuple[float, float], ...]  # raw (min, max) per feature
    source_sha256: str = ""

    @property
    def num_rows(self) -> int:
        return len(self.features)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SeedSet:
    entries: tuple[tuple[str, int], ...]  # (pattern key, representative row)
    tied_rows: int = 0


def load_dataset(path: str, label_column: str, input_box=None) -> Dataset:
    """CSV with a header row; every non-label column is a numeric feature.
    Features are min-max scaled into input_box (default unit box); a constant
    column maps to its dimension's midpoint."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ParseError(f"cannot read dataset {path}: {e}") from e
    sha = hashlib.sha256(raw).hexdigest()
    try:
        reader = csv.reader(io.StringIO(raw.decode("utf-8")))
        rows = list(reader)
    except (UnicodeDecodeError, csv.Error) as e:
        raise ParseError(f"dataset {path} is not parseable CSV: {e}") from e
    if not rows:
        raise ParseError(f"dataset {path} has no header row")
    header = rows[0]
    if label_column not in header:
        raise ParseError(f"label column {label_column!r} not in header {header}")
    label_idx = header.index(label_column)
    feature_names = tuple(h for k, h in enumerate(header) if k != label_idx)
    body = [r for r in rows[1:] if r]
    if not body:
        raise EmptyDataset(f"dataset {path} has no data rows")

    feats = np.zeros((len(body), len(feature_names)))
    labels = np.zeros(len(body), dtype=int)
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"row {r + 1} has {len(row)} cells, expected {len(header)}")
        c = 0
        for k, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError as e:
                raise NonNumericError(
                    f"row {r + 1}, column {header[k]!r}: {cell!r} is not numeric") from e
            if k == label_idx:
                if v != int(v) or v < 0:
                    raise NonNumericError(
                        f"row {r + 1}: label {cell!r} is not a class index")
                labels[r] = int(v)
            else:
                feats[r, c] = v
                c += 1

    d = feats.shape[1]
    if input_box is None:
        input_box = np.array([[0.0, 1.0]] * d)
    else:
        input_box = np.asarray(input_box, dtype=float)
        if input_box.shape != (d, 2):
            raise DimensionError(f"input_box must be ({d}, 2)")
    mins = feats.min(axis=0)
    maxs = feats.max(axis=0)
    scaled = np.empty_like(feats)
    for j in range(d):
        lo, hi = input_box[j]
        if maxs[j] > mins[j]:
            scaled[:, j] = lo + (feats[:, j] - mins[j]) / (maxs[j] - mins[j]) * (hi - lo)
        else:
            scaled[:, j] = (lo + hi) / 2.0
    scaled.setflags(write=False)
    labels.setflags(write=False)
    return Dataset(scaled, labels, feature_names,
                   tuple((float(a), float(b)) for a, b in zip(mins, maxs)), sha)


def dataset_from_arrays(features, labels, feature_names=None) -> Dataset:
    """Wrap pre-scaled arrays (already inside the network's input box)."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(features.shape[1]))
    scaling = tuple((float(a), float(b))
                    for a, b in zip(features.min(axis=0), features.max(axis=0)))
    return Dataset(features, labels, tuple(feature_names), scaling)


def realized_seeds(net: Network, data: Dataset) -> SeedSet:
    """First dataset row for each distinct complete pattern; rows whose top two
    logits tie are skipped (they cannot seed a strict dominance property)."""
    if data.num_features != net.input_dim:
        raise DimensionError(
            f"dataset has {data.num_features} features, net expects {net.input_dim}")
    seen: dict[str, int] = {}
    order: list[str] = []
    tied = 0
    for r in range(data.num_rows):
        x = data.features[r]
        logits = model.forward(net, x).logits
        top = np.sort(logits)[-2:]
        if top[0] == top[1]:
            tied += 1
            continue
        key = model.pattern_of(net, x).key()
        if key not in seen:
            seen[key] = r
            order.append(key)
    return SeedSet(tuple((k, seen[k]) for k in order), tied)


def training_support(net: Network, cert: RegionCertificate, data: Dataset) -> int:
    """Rows satisfying every region row; lt rows are strict, exactly as the
    halfspace semantics state."""
    if data.num_features != net.input_dim:
        raise DimensionError("dataset feature count does not match the network")
    poly = region_polytope(net, cert)
    return int(poly.contains_batch(data.features).sum())


def _soundness_spot_check(net, cert, rng_seed: int, tol: Tolerances):
    """Sampled region points must satisfy the certified dominance property."""
    poly = region_polytope(net, cert)
    rng = np.random.default_rng(rng_seed)
    try:
        xs = sample_region(poly, SOUNDNESS_SAMPLES, rng, tol.delta_strict)
    except EmptyRegion as e:  # a certificate region contains its seed
        raise InternalError(f"certificate region empty in soundness check: {e}") from e
    logits = model.forward_batch(net, xs)
    t = cert.prop.target
    for j in cert.prop.rivals:
        if not np.all(logits[:, t] > logits[:, j]):
            raise InternalError(
                f"soundness violation: sampled point loses to rival {j}")


@dataclass
class ComparisonRow:
    seed_idx: int
    pattern_key: str
    mode_baseline: str = ""
    support_baseline: int | None = None
    logvol_baseline: float | str | None = None
    lf: float | None = None
    support_interp: int | None = None
    logvol_interp: float | str | None = None
    n_constrained_baseline: int | None = None
    n_constrained_interp: int | None = None
    ms_baseline: float = 0.0
    ms_interp: float = 0.0
    error: str = ""

    def as_record(self) -> list:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)
        return [cell(getattr(self, c)) for c in COMPARE_COLUMNS]


def _region_logvol(net, cert):
    try:
        box = max_box_volume(region_polytope(net, cert), net.input_box,
                             cert.delta_strict)
        return log_volume(box), ""
    except EmptyRegion:
        return "empty", ""
    except DegenerateRegion as e:
        return "degenerate", f"DegenerateRegion: {e}"


def _seed_target(net, data, row: int, prop_rule: str) -> int:
    if prop_rule == "label":
        return int(data.labels[row])
    if prop_rule == "predicted":
        return int(np.argmax(model.forward(net, data.features[row]).logits))
    raise RangeError(f"unknown prop rule {prop_rule!r}")


def _compare_one(net, data, seed_idx, key, row, logit_factors, prop_rule,
                 tol, node_cap, deterministic):
    x0 = data.features[row]
    rows = []
    base = ComparisonRow(seed_idx=seed_idx, pattern_key=key)
    errors = []
    cert_b = None
    try:
        target = _seed_target(net, data, row, prop_rule)
        prop = DominanceProperty.for_net(net, target)
        t0 = time.perf_counter()
        cert_b = get_convex_region_baseline(net, prop, x0, tol, node_cap)
        base.ms_baseline = 0.0 if deterministic else (time.perf_counter() - t0) * 1e3
        _soundness_spot_check(net, cert_b, 100_000 + seed_idx, tol)
        base.mode_baseline = cert_b.mode
        base.support_baseline = training_support(net, cert_b, data)
        base.n_constrained_baseline = cert_b.pattern.num_constrained
        lv, err = _region_logvol(net, cert_b)
        base.logvol_baseline = lv
        if err:
            errors.append(err)
    except RelucertError as e:
        errors.append(f"baseline {type(e).__name__}: {e}")

    for lf in logit_factors:
        r = ComparisonRow(
            seed_idx=seed_idx, pattern_key=key, lf=float(lf),
            mode_baseline=base.mode_baseline,
            support_baseline=base.support_baseline,
            logvol_baseline=base.logvol_baseline,
            n_constrained_baseline=base.n_constrained_baseline,
            ms_baseline=base.ms_baseline)
        err_i = list(errors)
        try:
            target = _seed_target(net, data, row, prop_rule)
            prop = DominanceProperty.for_net(net, target)
            t0 = time.perf_counter()
            cert_i = infer_region_interpolant(net, x0, prop, float(lf), tol, node_cap)
            r.ms_interp = 0.0 if deterministic else (time.perf_counter() - t0) * 1e3
            _soundness_spot_check(net, cert_i, 200_000 + seed_idx, tol)
            r.support_interp = training_support(net, cert_i, data)
            r.n_constrained_interp = cert_i.pattern.num_constrained
            lv, err = _region_logvol(net, cert_i)
            r.logvol_interp = lv
            if err:
                err_i.append(err)
        except RelucertError as e:
            err_i.append(f"interpolant {type(e).__name__}: {e}")
        r.error = "; ".join(err_i)
        rows.append(r)
    return rows


def compare(net: Network, data: Dataset, logit_factors,
            prop_rule: str = "predicted",
            tol: Tolerances = DEFAULT_TOLERANCES,
            node_cap: int = DEFAULT_NODE_CAP,
            deterministic: bool = True,
            jobs: int = 1) -> list[ComparisonRow]:
    """Baseline once and interpolant per logit factor, for every realized
    seed; one output row per (seed, logit factor). Per-seed failures land in
    the error column and the run continues."""
    factors = [float(v) for v in logit_factors]
    for lf in factors:
        if not 0.0 < lf < 1.0:
            raise RangeError(f"logit factor {lf} outside (0,1)")
    seeds = realized_seeds(net, data)
    tasks = [(i, key, row) for i, (key, row) in enumerate(seeds.entries)]

    def work(t):
        i, key, row = t
        return _compare_one(net, data, i, key, row, factors, prop_rule,
                            tol, node_cap, deterministic)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(work, tasks))
    else:
        chunks = [work(t) for t in tasks]
    return [r for chunk in chunks for r in chunk]


def write_compare_csv(rows: list[ComparisonRow], path: str):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(COMPARE_COLUMNS)
        for r in rows:
            w.writerow(r.as_record())


def aggregate_rows(rows: list[ComparisonRow]) -> list[list]:
    """Best-per-seed interpolant run: maximize support, then log-volume, then
    prefer the smaller factor."""
    by_seed: dict[int, list[ComparisonRow]] = {}
    for r in rows:
        by_seed.setdefault(r.seed_idx, []).append(r)
    out = []
    for seed_idx in sorted(by_seed):
        group = by_seed[seed_idx]
        ok = [r for r in group if r.support_interp is not None]
        first = group[0]

        def cell(v):
            if v is None:
                return ""
            return repr(v) if isinstance(v, float) else str(v)
        if ok:
            def rank(r):
                lv = r.logvol_interp if isinstance(r.logvol_interp, float) else -np.inf
                return (r.support_interp, lv, -r.lf)
            best = max(ok, key=rank)
            out.append([str(seed_idx), first.pattern_key, first.mode_baseline,
                        cell(first.support_baseline), cell(first.logvol_baseline),
                        cell(best.lf), cell(best.support_interp),
                        cell(best.logvol_interp)])
        else:
            out.append([str(seed_idx), first.pattern_key, first.mode_baseline,
                        cell(first.support_baseline), cell(first.logvol_baseline),
                        "", "", ""])
    return out


def write_aggregate_csv(rows: list[ComparisonRow], path: str):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(AGGREGATE_COLUMNS)
        for rec in aggregate_rows(rows):
            w.writerow(rec)


@dataclass
class SweepRow:
    lf: float
    avg_support: float
    avg_logvol: float
    n_ok: int


def sweep_epsilon(net: Network, data: Dataset, logit_factors,
                  prop_rule: str = "predicted",
                  tol: Tolerances = DEFAULT_TOLERANCES,
                  node_cap: int = DEFAULT_NODE_CAP,
                  deterministic: bool = True,
                  jobs: int = 1) -> list[SweepRow]:
    """Average interpolant support and log-volume across seeds, one row per
    logit factor. Factors must be strictly increasing inside (0,1)."""
    factors = [float(v) for v in logit_factors]
    if factors != sorted(set(factors)):
        raise RangeError("logit factors must be strictly increasing")
    for lf in factors:
        if not 0.0 < lf < 1.0:
            raise RangeError(f"logit factor {lf} outside (0,1)")
    rows = compare(net, data, factors, prop_rule, tol, node_cap, deterministic,
                   jobs)
    out = []
    for lf in factors:
        here = [r for r in rows if r.lf == lf and r.support_interp is not None]
        supports = [r.support_interp for r in here]
        logvols = [r.logvol_interp for r in here if isinstance(r.logvol_interp, float)]
        out.append(SweepRow(
            lf,
            float(np.mean(supports)) if supports else float("nan"),
            float(np.mean(logvols)) if logvols else float("nan"),
            len(here)))
    return out


def write_sweep_csv(rows: list[SweepRow], path: str):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([repr(r.lf), repr(r.avg_support), repr(r.avg_logvol),
                        str(r.n_ok)])
