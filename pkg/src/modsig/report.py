"""Versioned report documents and their serialisation.

Reports are JSON objects. Floats are written with 17 significant digits,
so parsing restores them exactly; p-values below 1e-300 are written as the
string ``"<1e-300"``, NaN as ``null`` and infinities as the ``Infinity``
literals Python's json module reads back. Output is deterministic: keys
keep insertion order and no wall-clock data is written unless asked for.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .edge_models import EdgeModel
from .graph import Graph, degree_quartiles
from .modtest import ModularityReport

__all__ = ["SCHEMA_VERSION", "P_FLOOR", "ReportDocument", "dumps", "format_p", "graph_block", "model_block", "covariate_block"]

SCHEMA_VERSION = "1.0"
P_FLOOR = 1e-300
P_FLOOR_TEXT = "<1e-300"


def format_p(p: float | None):
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return None
    return P_FLOOR_TEXT if p < P_FLOOR else float(p)


def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "null"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        text = format(obj, ".17g")
        if "e" not in text and "." not in text:
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


@dataclass
class ReportDocument:
    graph: dict
    model: dict | None = None
    tests: list = field(default_factory=list)
    diagnostics: dict | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)
    timestamps: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "graph": self.graph,
            "model": self.model,
            "tests": self.tests,
            "diagnostics": self.diagnostics,
            "seed": self.seed,
            "extra": self.extra,
            "timestamps": self.timestamps,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> ReportDocument:
        return cls(
            graph=d["graph"],
            model=d.get("model"),
            tests=d.get("tests", []),
            diagnostics=d.get("diagnostics"),
            seed=d.get("seed"),
            extra=d.get("extra", {}),
            timestamps=d.get("timestamps", {}),
            schema_version=d.get("schema_version", SCHEMA_VERSION),
        )

    @classmethod
    def from_json(cls, text: str) -> ReportDocument:
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """One summary row per tested covariate."""
        cols = ["covariate", "K", "n", "q_hat", "b_hat", "s_hat", "z", "p_normal", "p_bootstrap"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for t in self.tests:
            w.writerow([_csv_cell(t.get(c)) for c in cols])
        return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def graph_block(g: Graph) -> dict:
    q = degree_quartiles(g) if g.n else (math.nan,) * 3
    return {
        "n": g.n,
        "m": g.m,
        "total_weight": g.total_weight,
        "degree_quartiles": [float(x) for x in q],
    }


def model_block(m: EdgeModel, log_likelihood: float | None = None, deviance: float | None = None) -> dict:
    return {
        "family": m.family.value,
        "r": m.r,
        "omega": m.omega,
        "log_likelihood": _num(log_likelihood),
        "deviance": _num(deviance),
    }


def covariate_block(rep: ModularityReport, bonferroni: int | None = None) -> dict:
    block = {
        "covariate": rep.covariate_name,
        "K": rep.K,
        "n": rep.n,
        "dropped_nodes": rep.dropped_nodes,
        "q_hat": float(rep.q_hat),
        "b_hat": float(rep.b_hat),
        "s_hat": float(rep.s_hat),
        "z": float(rep.z),
        "p_normal": format_p(rep.p_normal),
        "p_bootstrap": format_p(rep.p_bootstrap),
    }
    if rep.bootstrap is not None:
        block["bootstrap"] = {k: (_num(v) if isinstance(v, float) else v) for k, v in rep.bootstrap.to_dict().items()}
    if bonferroni:
        # correction chosen by this tool, not part of the test itself
        block["p_adjustment"] = {
            "method": "bonferroni (applied by modsig)",
            "factor": int(bonferroni),
            "p_normal": format_p(min(1.0, rep.p_normal * bonferroni)),
            "p_bootstrap": None if rep.p_bootstrap is None else format_p(min(1.0, rep.p_bootstrap * bonferroni)),
        }
    return block
