"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 model or data error, 4 degenerate
test (single group or all singletons).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
import warnings

from . import __version__
from .edge_models import CLT_FAMILIES, EdgeModel, Family
from .errors import DegenerateTestError, ModelError, ModsigError
from .fitting import compare_models, fit_edge_model, log_likelihood, r_at_cap, saturated_log_likelihood
from .graph import Graph
from .io import CovariateTable, read_covariate_table, read_edge_list, read_gml, write_edge_list
from .modtest import TestOptions, significance_test
from .nullmodel import ModsigWarning, check_assumptions, estimate_pi
from .report import ReportDocument, graph_block, model_block, covariate_block
from .sim import DEFAULT_REPLICATES, sample_graph

log = logging.getLogger("modsig")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 2, 3, 4

_CLT_CHOICES = [f.value for f in CLT_FAMILIES]
_ALL_CHOICES = [f.value for f in Family]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_input(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--edges", help="edge list, 'u<TAB>v[<TAB>weight]' per line")
    src.add_argument("--gml", help="GML file; node attributes become covariates")
    p.add_argument("--drop-self-loops", action="store_true", help="discard self-loops instead of failing")


def _add_covariates(p: argparse.ArgumentParser, required: bool):
    p.add_argument("--covariates", help="CSV with header; first column is the node label")
    p.add_argument("--column", action="append", required=required, help="covariate column (repeatable)")
    p.add_argument("--drop-missing", action="store_true", help="test on the subgraph of nodes with a value")


def _add_output(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--timestamp", action="store_true", help="record the wall-clock time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modsig", description="Significance of covariate-defined network modularity.")
    parser.add_argument("--version", action="version", version=f"modsig {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="normal-approximation test for each covariate")
    _add_input(p)
    _add_covariates(p, required=True)
    p.add_argument("--model", choices=_CLT_CHOICES, default="poisson")
    p.add_argument("--bootstrap", type=int, default=0, metavar="B", help="bootstrap replicates (0: none)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lenient", action="store_true", help="drop isolated nodes, clamp Bernoulli means")
    p.add_argument("--bonferroni", type=int, metavar="M", help="also report p-values multiplied by M")
    p.add_argument("--csv", help="write one summary row per covariate to this CSV file")
    _add_output(p)

    p = sub.add_parser("bootstrap", help="parametric bootstrap for each covariate")
    _add_input(p)
    _add_covariates(p, required=True)
    p.add_argument("--model", choices=_CLT_CHOICES, default="negbin")
    p.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES, metavar="B")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lenient", action="store_true")
    _add_output(p)

    p = sub.add_parser("fit", help="fit an edge model to the graph")
    _add_input(p)
    p.add_argument("--model", choices=_ALL_CHOICES, default="negbin")
    _add_output(p)

    p = sub.add_parser("compare-models", help="deviance table for the four count models")
    _add_input(p)
    _add_output(p)

    p = sub.add_parser("diagnose", help="assumption diagnostics")
    _add_input(p)
    _add_covariates(p, required=False)
    p.add_argument("--model", choices=_ALL_CHOICES, default="poisson")
    _add_output(p)

    p = sub.add_parser("simulate", help="sample a graph from the null fitted to another graph")
    p.add_argument("--pi-from", required=True, help="edge list whose degrees define the propensities")
    p.add_argument("--model", choices=_ALL_CHOICES, default="poisson")
    p.add_argument("--r", type=float, help="NB shape (fitted when omitted)")
    p.add_argument("--omega", type=float, help="zero-inflation mass (fitted when omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--out", required=True, help="output edge list")
    p.add_argument("--report", help="also write a JSON report here")
    return parser


def _load(args) -> tuple[Graph, CovariateTable | None]:
    if args.edges:
        g = read_edge_list(args.edges, drop_self_loops=args.drop_self_loops)
        table = None
    else:
        g, table = read_gml(args.gml, drop_self_loops=args.drop_self_loops)
    if getattr(args, "covariates", None):
        table = read_covariate_table(args.covariates)
    return g, table


def _model_fit_stats(g: Graph, m: EdgeModel):
    try:
        ll = log_likelihood(g, m)
    except ModsigError:
        return None, None
    dev = None
    if m.family is not Family.BERNOULLI:
        dev = 2.0 * (saturated_log_likelihood(g) - ll)
    return ll, dev


def _document(g: Graph, args, **kw) -> ReportDocument:
    doc = ReportDocument(graph=graph_block(g), **kw)
    if getattr(args, "timestamp", False):
        doc.timestamps["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return doc


def _tests(args, g: Graph, table: CovariateTable | None, bootstrap: int, bonferroni=None):
    if table is None:
        raise UsageError("covariates needed: pass --covariates or use --gml with node attributes")
    family = Family(args.model)
    base_model = None
    blocks, reports = [], []
    for column in args.column:
        gc, a, missing = table.assignment(g, column, drop_missing=args.drop_missing)
        reuse = not missing and not g.isolated().size
        if reuse and base_model is None:
            base_model = fit_edge_model(g, family)
        opts = TestOptions(
            strict=not args.lenient,
            bootstrap=bootstrap,
            seed=args.seed,
            workers=args.workers,
            model=base_model if reuse else None,
            covariate_name=column,
        )
        rep = significance_test(gc, a, family, opts)
        reports.append(rep)
        blocks.append(covariate_block(rep, bonferroni))
    return blocks, reports


def _cmd_test(args):
    g, table = _load(args)
    blocks, reports = _tests(args, g, table, args.bootstrap, args.bonferroni)
    m = reports[0].model
    ll, dev = _model_fit_stats(g, m)
    doc = _document(
        g, args, model=model_block(m, ll, dev), tests=blocks,
        diagnostics=reports[0].diagnostics.to_dict(), seed=args.seed,
    )
    if args.bootstrap:
        doc.extra["bootstrap_replicates"] = args.bootstrap
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(doc.to_csv())
    return doc


def _cmd_bootstrap(args):
    g, table = _load(args)
    args.drop_missing = getattr(args, "drop_missing", False)
    blocks, reports = _tests(args, g, table, args.replicates)
    m = reports[0].model
    ll, dev = _model_fit_stats(g, m)
    return _document(g, args, model=model_block(m, ll, dev), tests=blocks, seed=args.seed,
                     extra={"bootstrap_replicates": args.replicates})


def _cmd_fit(args):
    g, _ = _load(args)
    m = fit_edge_model(g, Family(args.model))
    ll, dev = _model_fit_stats(g, m)
    doc = _document(g, args, model=model_block(m, ll, dev))
    doc.extra["effectively_poisson"] = r_at_cap(m)
    return doc


def _cmd_compare(args):
    g, _ = _load(args)
    cmp = compare_models(g)
    rows = [
        {
            "family": r.family.value,
            "parameter_count": r.parameter_count,
            "log_likelihood": r.log_likelihood,
            "residual_deviance": r.residual_deviance,
            "r": r.model.r,
            "omega": r.model.omega,
        }
        for r in cmp.rows
    ]
    return _document(g, args, extra={"comparison": rows, "saturated_log_likelihood": cmp.saturated_log_likelihood})


def _cmd_diagnose(args):
    g, table = _load(args)
    m = fit_edge_model(g, Family(args.model))
    a = None
    if args.column:
        if table is None:
            raise UsageError("--column needs --covariates or --gml")
        g, a, _ = table.assignment(g, args.column[0], drop_missing=args.drop_missing)
    diag = check_assumptions(g, m, a)
    ll, dev = _model_fit_stats(g, m)
    return _document(g, args, model=model_block(m, ll, dev), diagnostics=diag.to_dict())


def _cmd_simulate(args):
    src = read_edge_list(args.pi_from)
    family = Family(args.model)
    p = estimate_pi(src, strict=not args.lenient)
    labels = list(src.labels) if p.kept is None else [src.labels[i] for i in p.kept]
    if family.has_shape and args.r is None or family.zero_inflated and args.omega is None:
        m = fit_edge_model(src if p.kept is None else src.induced(p.kept), family)
    else:
        m = EdgeModel(family, r=args.r if family.has_shape else None,
                      omega=args.omega if family.zero_inflated else None)
    g = sample_graph(p, m, args.seed, labels, strict=not args.lenient)
    write_edge_list(g, args.out)
    doc = ReportDocument(graph=graph_block(g), model=model_block(m), seed=args.seed)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(doc.to_json())
    return None


_COMMANDS = {
    "test": _cmd_test,
    "bootstrap": _cmd_bootstrap,
    "fit": _cmd_fit,
    "compare-models": _cmd_compare,
    "diagnose": _cmd_diagnose,
    "simulate": _cmd_simulate,
}


def run_command(argv=None) -> tuple[int, ReportDocument | None]:
    """Run one CLI invocation; returns ``(exit_code, report)``.

    Errors are reported as one line on stderr.
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE, None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ModsigWarning)
            doc = _COMMANDS[args.command](args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except UsageError as exc:
        print(f"modsig: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    except DegenerateTestError as exc:
        print(f"modsig: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE, None
    except (ModsigError, ModelError, OSError) as exc:
        print(f"modsig: {exc}", file=sys.stderr)
        return EXIT_DATA, None
    if doc is not None:
        text = doc.to_json()
        if getattr(args, "out", None) and args.command != "simulate":
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK, doc


def main(argv=None) -> int:
    return run_command(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
