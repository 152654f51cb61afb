import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_ctqw import ModelParseError, parse_model, write_model
from padic_ctqw.cli import main, parse_grid
from padic_ctqw.model import ModelSpec, parse_model_text

K2 = {"kind": "graph", "level": 1, "adjacency": [[0, 1], [1, 0]], "mass": 1.0}


@pytest.fixture
def k2_file(tmp_path):
    p = tmp_path / "k2.json"
    p.write_text(json.dumps(K2))
    return p


def write(tmp_path, doc, name="model.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2) if not isinstance(doc, str) else doc)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_k2(k2_file):
    spec = parse_model(k2_file)
    assert spec.kind == "graph" and spec.level == 1
    assert np.array_equal(spec.hamiltonian().matrix, [[1, -1], [-1, 1]])


def test_parse_edges_and_empty_graph(tmp_path):
    spec = parse_model(write(tmp_path, {"kind": "graph", "level": 2, "support": [0, 2, 3],
                                        "edges": [], "potential": [1, 2, 3]}))
    assert np.array_equal(spec.hamiltonian().matrix, np.diag([1.0, 2.0, 3.0]))
    spec = parse_model(write(tmp_path, {"kind": "graph", "level": 2, "support": [0, 2, 3], "edges": [[0, 3]]}))
    assert spec.adjacency.entries.tolist() == [[0, 0, 1], [0, 0, 0], [1, 0, 0]]


@pytest.mark.parametrize("doc, key", [
    ({"kind": "convolution", "level": 1, "profile": {"shells": [0.9], "deep": 0.9}}, "profile mass"),
    ({"kind": "graph", "level": 1, "adjacency": [[0, 1], [0, 0]]}, "'adjacency'"),
    ({"kind": "graph", "level": 1, "support": [0, 2], "edges": []}, "'support'"),
    ({"kind": "graph", "adjacency": [[0]]}, "'level'"),
    ({"kind": "lattice", "level": 1}, "'kind'"),
    ({"kind": "biweighted", "level": 1, "A": [[0, 1], [1, 0]]}, "'B'"),
    ({"kind": "biweighted", "level": 1, "A": [[0, 1], [1, 0]], "B": [[0, -1], [-1, 0]]}, "'B'"),
    ({"kind": "biweighted", "level": 1, "A": [[0, 1], [1, 0]], "B": [[0, 1], [1, 0]], "mass": 2}, "'mass'"),
    ({"kind": "graph", "level": 1, "adjacency": [[0, 1], [1, 0]], "potential": [1]}, "'potential'"),
    ({"kind": "graph", "level": 1, "adjacency": [[0, 1], [1, 0]], "mass": -1}, "'mass'"),
])
def test_parse_errors_name_the_key(tmp_path, doc, key):
    with pytest.raises(ModelParseError, match=key):
        parse_model(write(tmp_path, doc))


def test_parse_reports_lines(tmp_path):
    text = '{\n  "kind": "graph",\n  "level": 1,\n  "adjacency": [[0, 1], [0, 0]]\n}\n'
    with pytest.raises(ModelParseError, match=r"line 4.*\(0, 1\)"):
        parse_model(write(tmp_path, text))
    with pytest.raises(ModelParseError, match="line 2"):
        parse_model_text('{"kind": "graph",\n  "level": 1,,}')


def test_missing_file(tmp_path):
    with pytest.raises(ModelParseError):
        parse_model(tmp_path / "absent.json")


@st.composite
def model_docs(draw):
    kind = draw(st.sampled_from(["graph", "biweighted", "convolution"]))
    level = draw(st.integers(0, 3))
    finite = st.floats(0, 10, allow_nan=False, allow_infinity=False)
    if kind == "convolution":
        n = 2 ** level
        shells = draw(st.lists(st.integers(0, 4), min_size=level, max_size=level))
        # pick deep so that the mass is exactly 1 when representable
        rest = 1 - sum(v * 2.0 ** (-k - 1) for k, v in enumerate(shells))
        if rest < 0:
            shells, rest = [0] * level, 1.0
        doc = {"kind": kind, "level": level, "mass": draw(st.floats(0.1, 5)),
               "profile": {"shells": [float(v) for v in shells], "deep": rest * 2 ** level}}
        if draw(st.booleans()):
            doc["potential"] = draw(st.lists(finite, min_size=n, max_size=n))
        return doc
    support = sorted(draw(st.sets(st.integers(0, 2 ** level - 1), min_size=1)))
    n = len(support)
    doc = {"kind": kind, "level": level, "support": support}
    if kind == "graph":
        a = np.zeros((n, n), dtype=int)
        for i in range(n):
            for j in range(i, n):
                a[i, j] = a[j, i] = draw(st.integers(0, 1))
        doc["adjacency"] = a.tolist()
        doc["mass"] = draw(st.floats(0.1, 5))
        if draw(st.booleans()):
            doc["potential"] = draw(st.lists(finite, min_size=n, max_size=n))
    else:
        for key in ("A", "B"):
            m = np.zeros((n, n))
            for i in range(n):
                for j in range(i, n):
                    m[i, j] = m[j, i] = draw(finite)
            doc[key] = m.tolist()
    return doc


@settings(max_examples=100, deadline=None)
@given(doc=model_docs())
def test_round_trip(tmp_path_factory, doc):
    d = tmp_path_factory.mktemp("rt")
    spec = parse_model_text(json.dumps(doc))
    write_model(spec, d / "m.json")
    again = parse_model(d / "m.json")
    assert again == spec
    assert isinstance(again, ModelSpec)


def test_parse_grid():
    assert np.array_equal(parse_grid("0:1:4"), [0, 0.25, 0.5, 0.75, 1.0])
    assert np.array_equal(parse_grid("2.5"), [2.5])
    for bad in ("0:1:0", "0:1", "a:b:c"):
        with pytest.raises(Exception):
            parse_grid(bad)


def test_cli_transitions_k2(k2_file, tmp_path):
    out = tmp_path / "k2.csv"
    assert main(["transitions", "--config", str(k2_file), "--initial", "1", "--t", "0:3.2:64",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 65 * 2
    for row in rows:
        t = float(row["t"])
        assert row["from"] == "1"
        expected = np.sin(t) ** 2 if row["to"] == "0" else np.cos(t) ** 2
        assert abs(float(row["prob"]) - expected) <= 1e-12
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"t,from,to,prob\n")


def test_cli_output_is_deterministic(k2_file, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main(["evolve", "--config", str(k2_file), "--initial", "0", "--t", "0:2:5", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = read_csv(tmp_path / "run0.csv")
    assert rows[0].keys() == {"t", "index", "re", "im"}
    # 17 significant digits round-trip the binary64 values exactly
    t = 0.4
    amp = (1 + np.exp(-2j * t)) / 2
    row = next(r for r in rows if r["t"] == format(t, ".17g") and r["index"] == "0")
    assert abs(complex(float(row["re"]), float(row["im"])) - amp) <= 1e-12


def test_cli_scaling(k2_file, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["scaling", "--config", str(k2_file), "--levels", "1:5", "--t", "1.0", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["r"] for r in rows] == ["1", "2", "3", "4", "5"]
    assert all(float(r["deviation"]) <= 1e-9 for r in rows)
    res = [float(r["projection_residual"]) for r in rows]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_cli_vladimirov(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["vladimirov", "--alpha", "1", "--max-norm", "4", "--out", str(out)]) == 0
    rows = [(float(r["norm"]), float(r["value"])) for r in read_csv(out)]
    assert rows == [(1.0, pytest.approx(2 / 3, abs=1e-15)), (2.0, pytest.approx(-1 / 3, abs=1e-15)),
                    (4.0, pytest.approx(-1 / 12, abs=1e-15))]


def test_cli_born_matches_transitions(k2_file, tmp_path):
    born, trans = tmp_path / "b.csv", tmp_path / "t.csv"
    assert main(["born", "--config", str(k2_file), "--initial", "0", "--t", "0:2:4", "--out", str(born)]) == 0
    assert main(["transitions", "--config", str(k2_file), "--initial", "0", "--t", "0:2:4", "--out", str(trans)]) == 0
    for a, b in zip(read_csv(born), read_csv(trans)):
        assert (a["t"], a["to"]) == (b["t"], b["to"])
        assert abs(float(a["prob"]) - float(b["prob"])) <= 1e-9


def test_cli_heat(tmp_path):
    cfg = write(tmp_path, {"kind": "biweighted", "level": 1, "A": [[0, 1], [1, 0]], "B": [[0, 1], [1, 0]]})
    out = tmp_path / "h.csv"
    assert main(["heat", "--config", str(cfg), "--u0", "0.9,0.1", "--tau", "0:10:5",
                 "--check-substochastic", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0].keys() == {"t", "index", "value"}
    by_t = {}
    for r in rows:
        by_t.setdefault(r["t"], []).append(float(r["value"]))
    for vals in by_t.values():
        assert abs(sum(vals) - 1.0) <= 1e-9
    assert by_t["10"] == [pytest.approx(0.5, abs=1e-8)] * 2


def test_cli_heat_hypothesis_violation(tmp_path, capsys):
    cfg = write(tmp_path, {"kind": "biweighted", "level": 1, "A": [[0, 2], [2, 0]], "B": [[0, 1], [1, 0]]})
    assert main(["heat", "--config", str(cfg), "--tau", "1", "--check-substochastic"]) == 3
    assert "A <= B" in capsys.readouterr().err


def test_cli_errors(tmp_path, k2_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    bad = write(tmp_path, {"kind": "convolution", "level": 1, "profile": {"shells": [0.9], "deep": 0.9}})
    assert main(["evolve", "--config", str(bad), "--t", "1"]) == 1
    assert "profile mass" in capsys.readouterr().err
    assert main(["evolve", "--config", str(k2_file), "--t", "1", "--initial", "7"]) == 1


def test_cli_contract_violation_exit_code(k2_file, monkeypatch, capsys):
    from padic_ctqw import cli

    monkeypatch.setattr(cli, "CONTRACT_TOL", -1.0)
    assert main(["transitions", "--config", str(k2_file), "--t", "1"]) == 3
    assert "column sums" in capsys.readouterr().err
