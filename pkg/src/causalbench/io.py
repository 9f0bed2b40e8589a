"""CSV datasets, manifests, and the simulated benchmark dataset."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .counterfactual import FactorReplacement
from .gbn import ClampSpec, GbnModel, random_gbn, sample_interventional, sample_observational
from .graphs import save_graph
from .stats import Dataset


class DataError(ValueError):
    """Malformed input files."""


def read_csv(path) -> Dataset:
    """Read a header-plus-numeric-body CSV file into a Dataset."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        seen = {}
        for k, h in enumerate(header):
            if h in seen:
                raise DataError(f"{path}:1: duplicate column {h!r} (columns {seen[h] + 1} and {k + 1})")
            seen[h] = k
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for k, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DataError(f"{path}:{line}: non-numeric value {cell.strip()!r} in column {header[k]!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(header, np.array(rows, dtype=float))


def write_csv(data: Dataset, path) -> None:
    """Write a Dataset; ``repr`` keeps every float bit-exact on re-reading."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.columns)
        for row in data.values:
            w.writerow([repr(float(v)) for v in row])


@dataclass
class InterventionEntry:
    node: str
    value: float
    path: str


@dataclass
class Manifest:
    """Observational file, knockout files per node, and optional truth/model/query files.

    Relative paths resolve against ``base_dir``.
    """

    observational: str
    interventions: list = field(default_factory=list)
    truth: str | None = None
    model: str | None = None
    counterfactual: str | None = None
    base_dir: Path = field(default=Path("."), compare=False)

    def resolve(self, rel) -> Path | None:
        return None if rel is None else Path(self.base_dir) / rel

    def to_json(self) -> dict:
        doc = {
            "observational": self.observational,
            "interventions": [{"node": e.node, "value": e.value, "path": e.path} for e in self.interventions],
        }
        for key in ("truth", "model", "counterfactual"):
            if getattr(self, key) is not None:
                doc[key] = getattr(self, key)
        return doc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: cannot read manifest ({exc})") from exc
        man = cls(
            doc["observational"],
            [InterventionEntry(e["node"], float(e["value"]), e["path"]) for e in doc.get("interventions", [])],
            doc.get("truth"),
            doc.get("model"),
            doc.get("counterfactual"),
            path.parent,
        )
        man.validate()
        return man

    def validate(self) -> None:
        files = [self.observational] + [e.path for e in self.interventions]
        files += [f for f in (self.truth, self.model, self.counterfactual) if f is not None]
        for f in files:
            if not self.resolve(f).exists():
                raise DataError(f"manifest references missing file {f}")
        header = _header(self.resolve(self.observational))
        for e in self.interventions:
            if _header(self.resolve(e.path)) != header:
                raise DataError(f"{e.path}: header differs from {self.observational}")
            if e.node not in header:
                raise DataError(f"{e.path}: intervened node {e.node!r} is not a column")


def _header(path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [h.strip() for h in next(csv.reader(fh), [])]


def pick_counterfactual_replacement(model: GbnModel, shift_in_sd: float = 1.0) -> FactorReplacement | None:
    """Choose an incoming-edge-weight change for the counterfactual benchmark.

    The intervened node has at least one parent and the most children (lowest
    index on ties); the edge from its strongest parent is changed so that the
    node's mean moves by ``shift_in_sd`` of its noise standard deviation.
    """
    from .gbn import joint_gaussian

    candidates = [v for v in range(model.m) if model.dag.parents(v) and model.dag.children(v)]
    if not candidates:
        return None
    node = max(candidates, key=lambda v: (len(model.dag.children(v)), -v))
    parent = max(sorted(model.dag.parents(node)), key=lambda p: abs(model.weights[p, node]))
    mean, _ = joint_gaussian(model)
    w = model.weights[parent, node]
    delta = shift_in_sd * model.noise_sd[node] / abs(mean[parent])
    return FactorReplacement(node, {parent: float(w + math.copysign(delta, w))})


def simulate_benchmark_dataset(seed: int, out_dir, num_nodes: int = 10, edge_probability: float = 0.3,
                               n_obs: int = 10_000, n_int: int = 1_000, n_counterfactual: int | None = None,
                               shift_in_sd: float = 1.0) -> Manifest:
    """Materialize the simulated benchmark: model, truth, observational and knockout CSVs.

    Also writes a counterfactual query (an incoming-weight change and data sampled
    under it) when the graph has a node with both parents and children.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(seed).spawn(3 + num_nodes)
    model = random_gbn(num_nodes, edge_probability, np.random.default_rng(seeds[0]))
    model.save(out / "model.json")
    save_graph(model.dag, out / "truth.json")
    obs = sample_observational(model, n_obs, np.random.default_rng(seeds[1]))
    write_csv(obs, out / "observational.csv")
    entries = []
    for v in range(num_nodes):
        data = sample_interventional(model, ClampSpec(v, 0.0), n_int, np.random.default_rng(seeds[3 + v]))
        fname = f"knockout_{model.names[v]}.csv"
        write_csv(data, out / fname)
        entries.append(InterventionEntry(model.names[v], 0.0, fname))
    cf_name = None
    repl = pick_counterfactual_replacement(model, shift_in_sd)
    if repl is not None:
        cf_model = repl.to_model(model)
        cf_data = sample_observational(cf_model, n_counterfactual or n_obs, np.random.default_rng(seeds[2]))
        write_csv(cf_data, out / "counterfactual_int.csv")
        cf_name = "counterfactual.json"
        doc = {
            "intervene": model.names[repl.node],
            "new_weights": {model.names[p]: w for p, w in repl.new_weights.items()},
            "targets": [model.names[t] for t in sorted(model.dag.children(repl.node))],
            "obs": "observational.csv",
            "int": "counterfactual_int.csv",
            "model": "model.json",
        }
        (out / cf_name).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    man = Manifest("observational.csv", entries, "truth.json", "model.json", cf_name, out)
    man.save(out / "manifest.json")
    return man
