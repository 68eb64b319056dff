import warnings

import pytest

from modsig import GraphError, ModsigWarning, ParseError
from modsig.io import parse_gml, read_covariate_table, read_covariates, read_edge_list, read_gml, write_edge_list


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_edge_list_aggregates(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "a\tb\na\tb\nb\tc\n"))
    assert g.to_dense()[0, 1] == 2 and g.to_dense()[1, 2] == 1


def test_edge_list_weights_and_comments(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "# header\n\na\tb\t2.5\n"))
    assert g.weights.tolist() == [2.5]


@pytest.mark.parametrize(
    "text, line",
    [("a\tb\na\ta\n", 2), ("a\tb\tx\n", 1), ("# c\na b\n", 2), ("a\tb\t-1\n", 1), ("a\tb\t1\t2\n", 1)],
)
def test_edge_list_errors_carry_line(tmp_path, text, line):
    with pytest.raises(ParseError, match=f"line {line}:") as info:
        read_edge_list(write(tmp_path, "e.tsv", text))
    assert info.value.line == line


def test_edge_list_drop_self_loops(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "a\ta\na\tb\n"), drop_self_loops=True)
    assert g.m == 1


def test_edge_list_round_trip(tmp_path):
    src = write(tmp_path, "e.tsv", "x\ty\t3\ny\tz\t0.25\nz\tx\n")
    g = read_edge_list(src)
    out = tmp_path / "out.tsv"
    write_edge_list(g, out)
    g2 = read_edge_list(out)
    assert g2.labels == g.labels and g2.edge_records() == g.edge_records()


def test_ingestion_deterministic(tmp_path):
    text = "c\ta\nb\tc\na\td\n"
    g1 = read_edge_list(write(tmp_path, "1.tsv", text))
    g2 = read_edge_list(write(tmp_path, "2.tsv", text))
    assert g1.labels == g2.labels == ("c", "a", "b", "d")
    assert g1.edge_records() == g2.edge_records()


CSV = "node,dept,gender\na,x,m\nb,x,f\nc,y,\n"


def test_covariates(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "a\tb\nb\tc\n"))
    a = read_covariates(write(tmp_path, "c.csv", CSV), "dept", g)
    assert a.K == 2 and a.group_of.tolist() == [0, 0, 1]


def test_covariate_one_value(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "a\tb\n"))
    assert read_covariates(write(tmp_path, "c.csv", CSV), "dept", g).K == 1


def test_covariate_missing_policies(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "a\tb\nb\tc\na\tc\n"))
    table = read_covariate_table(write(tmp_path, "c.csv", CSV))
    with pytest.raises(GraphError, match="'c'"):
        table.assignment(g, "gender")
    with pytest.warns(ModsigWarning):
        sub, a, missing = table.assignment(g, "gender", drop_missing=True)
    assert missing == ["c"] and sub.n == 2 and a.K == 2


def test_covariate_unknown_node_and_column(tmp_path):
    g = read_edge_list(write(tmp_path, "e.tsv", "a\tq\n"))
    table = read_covariate_table(write(tmp_path, "c.csv", CSV))
    with pytest.raises(GraphError, match="'q'"):
        table.assignment(g, "dept")
    with pytest.raises(GraphError, match="no covariate column"):
        table.assignment(g, "age")


def test_covariate_csv_errors(tmp_path):
    with pytest.raises(ParseError):
        read_covariate_table(write(tmp_path, "c.csv", "node,x\na,1\na,2\n"))
    with pytest.raises(ParseError, match="line 2"):
        read_covariate_table(write(tmp_path, "c.csv", "node,x\na,1,2\n"))
    with pytest.raises(ParseError):
        read_covariate_table(write(tmp_path, "c.csv", ""))


def test_covariate_quoted_fields(tmp_path):
    table = read_covariate_table(write(tmp_path, "c.csv", 'node,team\n"a,1","red, blue"\n'))
    assert table.labels == ["a,1"] and table.columns["team"] == ["red, blue"]


GML = """
graph [
  directed 0
  node [ id 1 label "A" value "l" ]
  node [ id 2 label "B" value "c" ]
  node [ id 3 label "C" value "l" ]
  edge [ source 1 target 2 ]
  edge [ source 2 target 3 value 2 ]
]
"""


def test_gml_basic():
    g, table = parse_gml(GML)
    assert g.labels == ("A", "B", "C")
    assert g.to_dense()[1, 2] == 2.0
    assert table.columns == {"value": ["l", "c", "l"]}


def test_gml_file(tmp_path):
    g, table = read_gml(write(tmp_path, "g.gml", GML))
    _, a, _ = table.assignment(g, "value")
    assert a.K == 2


def test_gml_skips_unknown_keys():
    text = GML.replace("directed 0", 'directed 0 Creator "x" graphics [ w 1 ]')
    with pytest.warns(ModsigWarning, match="skipped"):
        parse_gml(text)


@pytest.mark.parametrize(
    "text, msg",
    [
        ("graph [ node [ id 1 ] ", "unterminated"),
        ("graph [ node [ id 1 ] node [ id 1 ] ]", "duplicate node id"),
        ("graph [ node [ id 1 ] edge [ source 1 target 9 ] ]", "unknown node id"),
        ("graph [ node [ label \"x\" ] ]", "without id"),
        ("graph [ node [ id 1 ] node [ id 2 ] edge [ source 1 target 1 ] ]", "self-loop"),
    ],
)
def test_gml_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            parse_gml(text)


def test_gml_error_line_number():
    text = "graph [\n node [ id 1 ]\n edge [ source 1 target 5 ]\n]"
    with pytest.raises(ParseError) as info:
        parse_gml(text)
    assert info.value.line == 3
