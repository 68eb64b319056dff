"""Reading edge lists, a minimal GML subset and covariate tables."""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import GraphError, ParseError
from .graph import CommunityAssignment, Graph, build_graph
from .nullmodel import ModsigWarning

__all__ = [
    "CovariateTable",
    "read_edge_list",
    "write_edge_list",
    "read_gml",
    "parse_gml",
    "read_covariate_table",
    "read_covariates",
]


def read_edge_list(path, *, drop_self_loops: bool = False) -> Graph:
    """Read ``u<TAB>v[<TAB>weight]`` lines; ``#`` comments and blank lines are skipped."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3) or not parts[0] or not parts[1]:
                raise ParseError(f"expected 'u<TAB>v[<TAB>weight]', got {line!r}", lineno)
            u, v = parts[0], parts[1]
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise ParseError(f"weight {parts[2]!r} is not a number", lineno) from None
            if not math.isfinite(w) or w < 0:
                raise ParseError(f"weight must be finite and non-negative, got {parts[2]!r}", lineno)
            if u == v and not drop_self_loops:
                raise ParseError(f"self-loop on node {u!r}", lineno)
            records.append((u, v, w))
    return build_graph(records, drop_self_loops=drop_self_loops)


def _fmt_weight(w: float) -> str:
    return str(int(w)) if w == int(w) else repr(float(w))


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        for u, v, w in g.edge_records():
            fh.write(f"{u}\t{v}\t{_fmt_weight(w)}\n")


@dataclass
class CovariateTable:
    """Categorical node attributes keyed by node label."""

    labels: list[str]
    columns: dict[str, list[str | None]] = field(default_factory=dict)

    def __post_init__(self):
        self._row = {lab: k for k, lab in enumerate(self.labels)}

    def values_for(self, g: Graph, column: str) -> list[str | None]:
        """Column value per graph node, ``None`` where the node has no value."""
        if column not in self.columns:
            raise GraphError(f"no covariate column {column!r}; have {sorted(self.columns)}")
        col = self.columns[column]
        out = []
        for lab in g.labels:
            k = self._row.get(lab)
            out.append(None if k is None else col[k])
        return out

    def assignment(self, g: Graph, column: str, *, drop_missing: bool = False):
        """``(graph, assignment, missing_labels)`` for ``column``.

        Strictly, a graph node without a value is an error. With
        ``drop_missing`` the graph is restricted to the induced subgraph on
        nodes that have one.
        """
        values = self.values_for(g, column)
        missing = [lab for lab, v in zip(g.labels, values) if v is None]
        if missing and not drop_missing:
            raise GraphError(f"node {missing[0]!r} has no value for covariate {column!r} ({len(missing)} missing)")
        if missing:
            warnings.warn(
                f"dropping {len(missing)} node(s) without a {column!r} value", ModsigWarning, stacklevel=2
            )
            keep = [i for i, v in enumerate(values) if v is not None]
            g = g.induced(keep)
            values = [values[i] for i in keep]
        return g, CommunityAssignment.from_values(values), missing


def read_covariate_table(path) -> CovariateTable:
    """CSV with a header row; the first column holds node labels. Empty cells are missing."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("covariate file is empty", 1) from None
        if len(header) < 2:
            raise ParseError("covariate header needs a label column and at least one covariate", 1)
        names = header[1:]
        labels: list[str] = []
        cols: dict[str, list[str | None]] = {name: [] for name in names}
        seen = set()
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            if row[0] in seen:
                raise ParseError(f"duplicate node label {row[0]!r}", lineno)
            seen.add(row[0])
            labels.append(row[0])
            for name, cell in zip(names, row[1:]):
                cols[name].append(cell if cell != "" else None)
    return CovariateTable(labels, cols)


def read_covariates(path, column: str, g: Graph) -> CommunityAssignment:
    """Groups of ``g``'s nodes by the categorical ``column`` of a covariate CSV (strict)."""
    return read_covariate_table(path).assignment(g, column)[1]


# --- GML -------------------------------------------------------------------

_TOKEN = re.compile(
    r'\s*(?:(?P<open>\[)|(?P<close>\])|"(?P<str>[^"]*)"|(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(?![\w.])|(?P<key>[A-Za-z_][\w]*))'
)


def _tokens(text: str):
    pos, line = 0, 1
    n = len(text)
    while pos < n:
        ws = re.match(r"\s*", text[pos:])
        line += ws.group().count("\n")
        pos += ws.end()
        if pos >= n:
            break
        if text[pos] == "#":
            end = text.find("\n", pos)
            pos = n if end < 0 else end
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", line)
        line += m.group().count("\n")
        pos = m.end()
        kind = m.lastgroup
        yield kind, m.group(kind), line


def _parse_list(tokens, line_open: int | None):
    items = []
    for kind, value, line in tokens:
        if kind == "close":
            if line_open is None:
                raise ParseError("unmatched ']'", line)
            return items
        if kind != "key":
            raise ParseError(f"expected a key, got {value!r}", line)
        try:
            vkind, vvalue, vline = next(tokens)
        except StopIteration:
            raise ParseError(f"key {value!r} has no value", line) from None
        if vkind == "open":
            items.append((value, _parse_list(tokens, vline), line))
        elif vkind == "str":
            items.append((value, vvalue, line))
        elif vkind == "num":
            num = float(vvalue)
            items.append((value, int(num) if re.fullmatch(r"[-+]?\d+", vvalue) else num, line))
        else:
            raise ParseError(f"key {value!r} has no value", vline)
    if line_open is not None:
        raise ParseError("unterminated '[' block", line_open)
    return items


def parse_gml(text: str, *, drop_self_loops: bool = False) -> tuple[Graph, CovariateTable]:
    """Parse ``graph [ node [ id label ... ] edge [ source target value ] ]``.

    Scalar node attributes other than ``id`` and ``label`` become covariate
    columns. An edge ``value`` is its weight. Anything else is skipped with
    a warning.
    """
    top = _parse_list(_tokens(text), None)
    graphs = [v for k, v, _ in top if k == "graph"]
    if len(graphs) != 1 or not isinstance(graphs[0], list):
        raise ParseError("expected exactly one 'graph [ ... ]' block")
    skipped: set[str] = set()
    ids: dict[object, str] = {}
    attrs: dict[str, dict[str, str]] = {}
    order: list[str] = []
    edges = []
    for key, value, line in graphs[0]:
        if key == "node" and isinstance(value, list):
            fields = {}
            for k, v, ln in value:
                if isinstance(v, list):
                    skipped.add(f"node.{k}")
                else:
                    fields[k] = (v, ln)
            if "id" not in fields:
                raise ParseError("node without id", line)
            nid = fields.pop("id")[0]
            if nid in ids:
                raise ParseError(f"duplicate node id {nid!r}", line)
            label = str(fields.pop("label")[0]) if "label" in fields else str(nid)
            if label in attrs:
                raise ParseError(f"duplicate node label {label!r}", line)
            ids[nid] = label
            order.append(label)
            attrs[label] = {k: str(v) for k, (v, _) in fields.items()}
        elif key == "edge" and isinstance(value, list):
            fields = {k: (v, ln) for k, v, ln in value if not isinstance(v, list)}
            for k, v, _ in value:
                if isinstance(v, list) or k not in ("source", "target", "value"):
                    skipped.add(f"edge.{k}")
            for end in ("source", "target"):
                if end not in fields:
                    raise ParseError(f"edge without {end}", line)
            edges.append((fields["source"][0], fields["target"][0], fields.get("value", (1, line))[0], line))
        elif key == "directed" and value == 1:
            warnings.warn("directed GML graph read as undirected", ModsigWarning, stacklevel=2)
        else:
            skipped.add(key)
    records = []
    for src, dst, w, line in edges:
        for end in (src, dst):
            if end not in ids:
                raise ParseError(f"edge references unknown node id {end!r}", line)
        if not isinstance(w, (int, float)):
            raise ParseError(f"edge value {w!r} is not a number", line)
        if src == dst and not drop_self_loops:
            raise ParseError(f"self-loop on node id {src!r}", line)
        records.append((ids[src], ids[dst], float(w)))
    if skipped - {"directed"}:
        warnings.warn(f"GML keys skipped: {', '.join(sorted(skipped))}", ModsigWarning, stacklevel=2)
    g = build_graph(records, drop_self_loops=drop_self_loops, nodes=order)
    names = sorted({k for a in attrs.values() for k in a})
    table = CovariateTable(order, {name: [attrs[lab].get(name) for lab in order] for name in names})
    return g, table


def read_gml(path, *, drop_self_loops: bool = False) -> tuple[Graph, CovariateTable]:
    return parse_gml(Path(path).read_text(encoding="utf-8"), drop_self_loops=drop_self_loops)
