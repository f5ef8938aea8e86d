"""End-to-end checks of the command line interface, run in-process."""

import json
import math

import pytest

from netrev import (IEStrategy, generalized_ie, generalized_ie_revenue,
                    generate, ie_revenue, load_network, save_network)
from netrev.cli import _TABLE_COLUMNS, main


@pytest.fixture()
def cycle4_file(tmp_path):
    path = tmp_path / "cycle4.txt"
    path.write_text(save_network(generate("cycle", 4)) + "\n")
    return str(path)


@pytest.fixture()
def ie_strategy_file(tmp_path):
    path = tmp_path / "ie.json"
    path.write_text(json.dumps(IEStrategy(frozenset({1, 3}), 0.5).to_json()))
    return str(path)


def run_json(argv, capsys):
    rc = main(argv)
    captured = capsys.readouterr()
    assert rc == 0, captured.err
    return json.loads(captured.out)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def test_gen_writes_loadable_network(tmp_path, capsys):
    out = tmp_path / "net.txt"
    rc = main(["gen", "--kind", "cycle", "--n", "5", "--output", str(out)])
    assert rc == 0
    assert capsys.readouterr().out == ""
    g = load_network(out.read_text())
    assert g.n == 5 and not g.directed
    assert g.W == pytest.approx(5.0)


def test_gen_streams_to_stdout(capsys):
    rc = main(["gen", "--kind", "path", "--n", "3"])
    assert rc == 0
    g = load_network(capsys.readouterr().out)
    assert g.n == 3 and g.num_edges == 2


def test_gen_gadget_kind(capsys):
    rc = main(["gen", "--kind", "three_path"])
    assert rc == 0
    g = load_network(capsys.readouterr().out)
    assert g.n == 4 and g.num_edges == 3


def test_gen_rejects_bad_size(capsys):
    rc = main(["gen", "--kind", "cycle", "--n", "0"])
    captured = capsys.readouterr()
    assert rc == 2
    assert captured.err.startswith("error:")


def test_gen_unknown_kind_is_a_usage_error(capsys):
    with pytest.raises(SystemExit):
        main(["gen", "--kind", "moebius", "--n", "4"])


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def test_eval_reports_closed_form(cycle4_file, ie_strategy_file, capsys):
    doc = run_json(["eval", "--input", cycle4_file,
                    "--strategy", ie_strategy_file], capsys)
    assert doc["family"] == "ie"
    assert doc["revenue"] == pytest.approx(1.0)
    assert doc["upper_bound"] == pytest.approx(1.0)
    assert doc["ratio"] == pytest.approx(1.0)
    assert doc["instance"]["n"] == 4
    assert sorted(doc["strategy"]["influence_set"]) == [1, 3]


def test_eval_rejects_malformed_strategy(cycle4_file, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = main(["eval", "--input", cycle4_file, "--strategy", str(bad)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "error:" in captured.err


def test_eval_rejects_unknown_strategy_document(cycle4_file, tmp_path, capsys):
    bad = tmp_path / "odd.json"
    bad.write_text(json.dumps({"family": "telepathy"}))
    rc = main(["eval", "--input", cycle4_file, "--strategy", str(bad)])
    assert rc == 2
    assert "unrecognized strategy" in capsys.readouterr().err


def test_eval_missing_input_file(tmp_path, ie_strategy_file, capsys):
    rc = main(["eval", "--input", str(tmp_path / "ghost.txt"),
               "--strategy", ie_strategy_file])
    assert rc == 2
    assert "cannot read" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# ie / gie
# ---------------------------------------------------------------------------

def test_ie_baseline_matches_library(cycle4_file, cycle4, capsys):
    doc = run_json(["ie", "--input", cycle4_file, "--mode", "baseline"],
                   capsys)
    expected = ie_revenue(cycle4, IEStrategy(frozenset(), 2.0 / 3.0))
    assert doc["revenue"] == pytest.approx(expected)
    assert doc["parameters"]["p"] == pytest.approx(2.0 / 3.0)


def test_ie_tuned_reports_ratio_bound(cycle4_file, capsys):
    doc = run_json(["ie", "--input", cycle4_file], capsys)
    assert doc["ratio_bound"] >= 0.686
    assert set(doc["parameters"]) == {"q", "p"}
    assert "sampled_revenue" in doc


def test_ie_bipartite_meets_upper_bound(cycle4_file, capsys):
    doc = run_json(["ie", "--input", cycle4_file, "--mode", "bipartite"],
                   capsys)
    assert doc["revenue"] == pytest.approx(doc["upper_bound"])
    assert doc["ratio"] == pytest.approx(1.0)


def test_gie_preset_matches_library(cycle4_file, cycle4, capsys):
    doc = run_json(["gie", "--input", cycle4_file], capsys)
    strategy = generalized_ie(cycle4, 6, mode="preset")
    expected = generalized_ie_revenue(cycle4, 6, strategy.q)
    assert doc["revenue"] == pytest.approx(expected)
    assert doc["parameters"] == {"K": 6, "mode": "preset"}


# ---------------------------------------------------------------------------
# sdp-ie
# ---------------------------------------------------------------------------

def test_sdp_ie_recovers_cycle_optimum(cycle4_file, capsys, monkeypatch):
    monkeypatch.delenv("NETREV_SEED", raising=False)
    doc = run_json(["sdp-ie", "--input", cycle4_file], capsys)
    assert doc["converged"] is True
    assert doc["revenue"] == pytest.approx(0.970416, abs=1e-6)
    assert doc["sdp_objective"] >= doc["revenue"] - 1e-9
    assert sorted(doc["strategy"]["influence_set"]) in ([1, 3], [0, 2])


def test_reports_deterministic_modulo_wall_time(cycle4_file, capsys):
    argv = ["sdp-ie", "--input", cycle4_file, "--seed", "5",
            "--trials", "40"]
    first = run_json(argv, capsys)
    second = run_json(argv, capsys)
    first.pop("wall_time_s")
    second.pop("wall_time_s")
    assert first == second


def test_seed_env_var_feeds_default(cycle4_file, capsys, monkeypatch):
    monkeypatch.setenv("NETREV_SEED", "7")
    doc = run_json(["ie", "--input", cycle4_file], capsys)
    assert doc["seed"] == 7
    monkeypatch.setenv("NETREV_SEED", "junk")
    doc = run_json(["ie", "--input", cycle4_file], capsys)
    assert doc["seed"] == 0
    monkeypatch.delenv("NETREV_SEED")
    doc = run_json(["ie", "--input", cycle4_file, "--seed", "11"], capsys)
    assert doc["seed"] == 11


# ---------------------------------------------------------------------------
# oracle / gadget-table
# ---------------------------------------------------------------------------

def test_oracle_best_ie(cycle4_file, capsys):
    doc = run_json(["oracle", "--input", cycle4_file,
                    "--pricing-prob", "0.5"], capsys)
    assert doc["best_value"] == pytest.approx(1.0)
    assert doc["best_witness"]["family"] == "ie"
    assert doc["method"] == "exhaustive"


def test_oracle_best_strategy(cycle4_file, capsys):
    doc = run_json(["oracle", "--input", cycle4_file,
                    "--mode", "best-strategy", "--seed", "0"], capsys)
    assert doc["best_value"] >= 1.0 - 1e-6
    assert doc["best_witness"]["family"] == "marketing"


def test_oracle_best_ordering_needs_prices(cycle4_file, capsys):
    rc = main(["oracle", "--input", cycle4_file, "--mode", "best-ordering"])
    assert rc == 2
    assert "prices" in capsys.readouterr().err


def test_oracle_best_ordering(cycle4_file, capsys):
    doc = run_json(["oracle", "--input", cycle4_file, "--mode",
                    "best-ordering", "--prices", "1,0.75,0.75,0.5"], capsys)
    assert doc["best_value"] > 0.0
    assert sorted(doc["best_witness"]["order"]) == [0, 1, 2, 3]


def test_gadget_table_three_path(capsys):
    doc = run_json(["gadget-table", "--kind", "three_path"], capsys)
    entries = doc["entries"]
    assert entries["free"]["best_value"] == pytest.approx(0.75, abs=1e-4)
    assert entries["1,1"]["best_value"] == pytest.approx(41 / 64, abs=1e-4)


# ---------------------------------------------------------------------------
# certify / simulate
# ---------------------------------------------------------------------------

def test_certify_directed_rounding_bound(capsys):
    doc = run_json(["certify", "--kind", "rounding_directed"], capsys)
    assert doc["min_value"] == pytest.approx(0.5528964, abs=1e-6)
    assert doc["argmin"]["y"] == pytest.approx((3 - math.sqrt(3)) / 2,
                                               abs=1e-6)
    assert doc["kind"] == "rounding_directed"


def test_simulate_agrees_with_closed_form(cycle4_file, ie_strategy_file,
                                          capsys):
    doc = run_json(["simulate", "--input", cycle4_file,
                    "--strategy", ie_strategy_file,
                    "--trials", "20000", "--seed", "3"], capsys)
    assert doc["closed_form"] == pytest.approx(1.0)
    assert doc["simulation"]["trials"] == 20000
    assert abs(doc["z_score"]) < 4.0


# ---------------------------------------------------------------------------
# table
# ---------------------------------------------------------------------------

def test_table_over_mini_corpus(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "cycle4.txt").write_text(save_network(generate("cycle", 4))
                                       + "\n")
    (corpus / "dag3.txt").write_text(save_network(generate("complete_dag", 3))
                                     + "\n")
    out = tmp_path / "table.json"
    csv_path = tmp_path / "table.csv"
    rc = main(["table", "--corpus", str(corpus), "--output", str(out),
               "--csv", str(csv_path), "--trials", "30", "--seed", "0"])
    assert rc == 0
    doc = json.loads(out.read_text())
    rows = doc["rows"]
    assert [row["instance"] for row in rows] == ["cycle4.txt", "dag3.txt"]
    for row in rows:
        for column in _TABLE_COLUMNS:
            assert column in row
        assert 0.0 <= row["baseline_ie_ratio"] <= 1.0
        assert 0.0 <= row["sdp_ie_ratio"] <= 1.0
        assert row["sdp_ie_vs_oracle"] >= 0.9
        assert row["sdp_converged"] is True
    header = csv_path.read_text().splitlines()[0]
    assert header.split(",") == list(_TABLE_COLUMNS)


def test_table_rejects_missing_corpus(tmp_path, capsys):
    rc = main(["table", "--corpus", str(tmp_path / "nope")])
    assert rc == 2
    assert "corpus directory" in capsys.readouterr().err
