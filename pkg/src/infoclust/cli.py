"""Command-line pipeline: simulate | transfer | graph | cluster | pipeline.

Every subcommand reads an optional ``key=value`` config file (``--config``);
command-line flags override it. Failures print one machine-readable line
``error_code=<CODE>`` followed by a human message, and exit with status 1.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import (embedding_kmeans, hierarchical_cluster, spectral_clustering,
                         symmetrize_affinity, symmetrize_distance)
from .errors import DataError, InfoclustError
from .influence import SENTINEL, build_influence_graph, export_graph, import_graph
from .infotransfer import TransferMatrix, data_digest, model_transfer_matrix, transfer_matrix
from .koopman import standardize
from .simulate import (TimeSeries, make_oscillator_network, make_three_state, oscillator_groups,
                       simulate_linear, write_csv)

SYSTEMS = ("three-state", "oscillator")
METHODS = ("spectral", "kmeans", "hierarchical")


class CLIError(InfoclustError):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@dataclass
class PipelineConfig:
    data: str | None = None
    system: str | None = None
    steps: int = 1000
    seed: int = 0
    groups: str | None = None
    lam: float = 0.05
    noise_var: float | None = None
    beta: float = 1.0
    threshold: float = 0.0
    sentinel: float = SENTINEL
    method: str = "spectral"
    k: int = 2
    tol: float = 1e-8
    out: str = "out"
    standardize: bool = False
    mode: str = "data"

    def validate(self, need_source=True):
        if need_source and (self.data is None) == (self.system is None):
            raise CLIError("CONFIG_INVALID", "give exactly one of data= or system=")
        if self.system is not None and self.system not in SYSTEMS:
            raise CLIError("CONFIG_INVALID", f"system must be one of {SYSTEMS}")
        if self.method not in METHODS:
            raise CLIError("CONFIG_INVALID", f"method must be one of {METHODS}")
        if self.mode not in ("data", "model"):
            raise CLIError("CONFIG_INVALID", "mode must be 'data' or 'model'")
        if self.mode == "model" and self.system is None:
            raise CLIError("CONFIG_INVALID", "mode=model needs a builtin system")
        checks = [
            (self.steps >= 1, "steps must be >= 1"),
            (self.lam >= 0, "lambda must be >= 0"),
            (self.noise_var is None or self.noise_var > 0, "noise_var must be > 0"),
            (self.beta > 0, "beta must be > 0"),
            (self.threshold >= 0, "threshold must be >= 0"),
            (self.sentinel > 1, "sentinel must exceed 1 (the largest finite distance)"),
            (self.k >= 1, "k must be >= 1"),
            (self.tol > 0, "tol must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise CLIError("CONFIG_INVALID", msg)
        return self

    def digest(self) -> str:
        """Hash of every setting except the output directory."""
        doc = {k: v for k, v in asdict(self).items() if k != "out"}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


# config-file key -> dataclass field
_KEYS = {f.name: f.name for f in fields(PipelineConfig)}
_KEYS.update({"lambda": "lam", "noise-var": "noise_var"})
_KEYS.pop("lam")


def _coerce(name, raw):
    if raw is None:
        return None
    if name in ("steps", "seed", "k"):
        return int(raw)
    if name in ("lam", "beta", "threshold", "sentinel", "tol"):
        return float(raw)
    if name == "noise_var":
        return None if str(raw).lower() in ("", "none") else float(raw)
    if name == "standardize":
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    return str(raw)


def read_config(path) -> dict:
    """Parse a ``key=value`` file; ``#`` starts a comment. Unknown keys are rejected."""
    p = Path(path)
    if not p.is_file():
        raise CLIError("CONFIG_NOT_FOUND", f"config file {path} does not exist")
    values = {}
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError("CONFIG_INVALID", f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        name = _KEYS.get(key.replace("_", "-")) or _KEYS.get(key)
        if name is None:
            raise CLIError("CONFIG_INVALID", f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[name] = _coerce(name, raw)
        except ValueError:
            raise CLIError("CONFIG_INVALID", f"{path}:{lineno}: bad value for {key}: {raw!r}") \
                from None
    return values


def ingest_csv(path) -> TimeSeries:
    """Read a header row of variable names followed by one row per time step.

    Lines starting with ``#`` are skipped. Non-numeric, NaN/Inf or ragged
    rows raise :class:`DataError` naming the data row (1-based) and file line.
    """
    p = Path(path)
    if not p.is_file():
        raise CLIError("DATA_NOT_FOUND", f"data file {path} does not exist")
    header, rows = None, []
    with p.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [h.strip() for h in rec]
                continue
            row_no = len(rows) + 1
            if len(rec) != len(header):
                raise DataError(f"row {row_no} (line {lineno}): expected {len(header)} "
                                f"fields, got {len(rec)}")
            try:
                vals = [float(v) for v in rec]
            except ValueError as err:
                raise DataError(f"row {row_no} (line {lineno}): {err}") from None
            for name, v in zip(header, vals):
                if not math.isfinite(v):
                    raise DataError(f"row {row_no} (line {lineno}), column {name!r}: "
                                    f"non-finite value {v}")
            rows.append(vals)
    if header is None:
        raise DataError(f"{path}: missing header row")
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 time steps, got {len(rows)}")
    return TimeSeries(np.array(rows).T, header, meta={"source": str(p)})


def read_groups(path, ts: TimeSeries) -> list:
    """JSON object mapping group label to a list of variable names."""
    p = Path(path)
    if not p.is_file():
        raise CLIError("GROUPS_NOT_FOUND", f"groups file {path} does not exist")
    try:
        doc = json.loads(p.read_text())
        return [(str(lbl), tuple(ts.index_of(names))) for lbl, names in doc.items()]
    except (json.JSONDecodeError, AttributeError, KeyError, TypeError) as err:
        raise CLIError("GROUPS_INVALID", f"{path}: {err}") from None


def _builtin(cfg):
    if cfg.system == "three-state":
        return make_three_state()
    return make_oscillator_network()


def _default_groups(ts, cfg):
    if cfg.system == "oscillator":
        return oscillator_groups(make_oscillator_network())
    return [(name, (i,)) for i, name in enumerate(ts.names)]


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class _Writer:
    def __init__(self, out):
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = {}

    def __call__(self, name, text):
        (self.dir / name).write_text(text)
        self.written[name] = _sha(text)


# -- stages --------------------------------------------------------------------

def load_series(cfg, write=None) -> TimeSeries:
    tag = f"config_digest={cfg.digest()}"
    if cfg.data is not None:
        ts = ingest_csv(cfg.data)
    else:
        ts = simulate_linear(_builtin(cfg), steps=cfg.steps, seed=cfg.seed)
        if write is not None:
            write("timeseries.csv", write_csv(ts, comment=tag))
    return standardize(ts) if cfg.standardize else ts


def compute_transfers(cfg, ts) -> TransferMatrix:
    groups = read_groups(cfg.groups, ts) if cfg.groups else _default_groups(ts, cfg)
    if cfg.mode == "model":
        tm = model_transfer_matrix(_builtin(cfg), groups, tol=cfg.tol)
        tm.provenance["data_digest"] = data_digest(ts)
    else:
        tm = transfer_matrix(ts, groups, cfg.lam, cfg.noise_var, tol=cfg.tol, seed=cfg.seed)
    tm.provenance["config_digest"] = cfg.digest()
    return tm


def write_graph(cfg, tm, write):
    g = build_influence_graph(tm, cfg.beta, cfg.threshold, cfg.sentinel)
    tag = f"config_digest={cfg.digest()}"
    write("influence_graph.json", export_graph(g, "structured", tag))
    write("influence_graph.dot", export_graph(g, "dot", tag))
    write("influence_edges.csv", export_graph(g, "edge-csv", tag))
    return g


def cluster_graph(cfg, g, write):
    tag = f"config_digest={cfg.digest()}"
    if cfg.method == "hierarchical":
        dendro = hierarchical_cluster(symmetrize_distance(g), g.nodes)
        write("dendrogram.json", dendro.to_json(tag))
        write("dendrogram.nwk", dendro.to_newick(tag))
        labels = dendro.cut(cfg.k)
    else:
        W = symmetrize_affinity(g)
        fn = spectral_clustering if cfg.method == "spectral" else embedding_kmeans
        labels = fn(W, cfg.k, cfg.seed)
        labels.method = cfg.method
    labels.nodes = list(g.nodes)
    write("labels.csv", labels.to_csv(tag))
    return labels


def write_manifest(cfg, write, input_digest, command):
    manifest = {
        "tool": "infoclust",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in asdict(cfg).items() if k != "out"},
        "config_digest": cfg.digest(),
        "input_digest": input_digest,
        "seed": cfg.seed,
        "artifacts": dict(sorted(write.written.items())),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    write("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Simulate or ingest, compute transfers, build the graph, cluster, write artifacts."""
    cfg.validate()
    write = _Writer(cfg.out)
    ts = load_series(cfg, write)
    tm = compute_transfers(cfg, ts)
    write("transfer_matrix.json", tm.to_json() + "\n")
    g = write_graph(cfg, tm, write)
    labels = cluster_graph(cfg, g, write)
    write_manifest(cfg, write, data_digest(ts), "pipeline")
    return {"transfer": tm, "graph": g, "labels": labels, "dir": write.dir}


# -- argument parsing ------------------------------------------------------------

def _add(p, *names):
    options = {
        "data": dict(help="input CSV (header of variable names, one row per time step)"),
        "system": dict(choices=SYSTEMS, help="builtin benchmark system"),
        "steps": dict(type=int, help="simulated time steps (builtin systems)"),
        "seed": dict(type=int, help="random seed"),
        "groups": dict(help="JSON file mapping group label to variable names"),
        "lambda": dict(type=float, dest="lam", help="ridge regularization weight"),
        "noise-var": dict(type=float, dest="noise_var", help="noise variance (default: lambda)"),
        "beta": dict(type=float, help="influence-distance temperature"),
        "threshold": dict(type=float, help="|T| below this is treated as zero"),
        "sentinel": dict(type=float, help="distance used for absent edges"),
        "method": dict(choices=METHODS, help="clustering method"),
        "k": dict(type=int, help="number of clusters"),
        "tol": dict(type=float, help="steady-state tolerance on successive transfers"),
        "mode": dict(choices=("data", "model"),
                     help="transfers from data (default) or from the builtin model"),
        "out": dict(help="output directory"),
    }
    for name in names:
        if name == "standardize":
            p.add_argument("--standardize", action="store_const", const=True, default=None,
                           help="z-score every variable before fitting")
            continue
        kw = dict(options[name])
        kw.setdefault("dest", name.replace("-", "_"))
        p.add_argument(f"--{name}", default=None, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infoclust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = ("out",)
    cmds = {
        "simulate": ("system", "steps", "seed"),
        "transfer": ("data", "groups", "lambda", "noise-var", "tol", "standardize", "seed"),
        "graph": ("beta", "threshold", "sentinel"),
        "cluster": ("method", "k", "seed"),
        "pipeline": ("data", "system", "steps", "seed", "groups", "lambda", "noise-var", "beta",
                     "threshold", "sentinel", "method", "k", "tol", "standardize", "mode"),
    }
    for name, opts in cmds.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file; flags override it")
        if name == "graph":
            p.add_argument("--transfer", required=True, help="transfer_matrix.json")
        if name == "cluster":
            p.add_argument("--graph", required=True, help="influence_graph.json")
        _add(p, *(opts + common))
    return parser


def config_from_args(args) -> PipelineConfig:
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for f in fields(PipelineConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        return PipelineConfig(**values)
    except TypeError as err:
        raise CLIError("CONFIG_INVALID", str(err)) from None


def _read_text(path, code):
    p = Path(path)
    if not p.is_file():
        raise CLIError(code, f"{path} does not exist")
    return p.read_text()


def _dispatch(args):
    cfg = config_from_args(args)
    if args.command == "pipeline":
        run_pipeline(cfg)
        return
    write = _Writer(cfg.out)
    if args.command == "simulate":
        if cfg.system is None:
            raise CLIError("CONFIG_INVALID", "simulate needs --system")
        cfg.validate()
        ts = load_series(cfg, write)
        write_manifest(cfg, write, data_digest(ts), "simulate")
    elif args.command == "transfer":
        if cfg.data is None:
            raise CLIError("CONFIG_INVALID", "transfer needs --data")
        cfg.validate()
        ts = load_series(cfg)
        tm = compute_transfers(cfg, ts)
        write("transfer_matrix.json", tm.to_json() + "\n")
        write_manifest(cfg, write, data_digest(ts), "transfer")
    elif args.command == "graph":
        cfg.validate(need_source=False)
        text = _read_text(args.transfer, "DATA_NOT_FOUND")
        write_graph(cfg, TransferMatrix.from_json(text), write)
        write_manifest(cfg, write, _sha(text), "graph")
    elif args.command == "cluster":
        cfg.validate(need_source=False)
        text = _read_text(args.graph, "DATA_NOT_FOUND")
        cluster_graph(cfg, import_graph(text), write)
        write_manifest(cfg, write, _sha(text), "cluster")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except InfoclustError as err:
        print(f"error_code={err.code}", file=sys.stderr)
        print(f"infoclust {args.command}: {err}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, IndexError, json.JSONDecodeError) as err:
        print("error_code=INPUT_INVALID", file=sys.stderr)
        print(f"infoclust {args.command}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
