"""Command-line harness: generators, runs, CSV, exit codes, determinism."""

import csv
import io
import json

import pytest

from cliquesim.cli import main
from cliquesim.graphs import connected_components, read_graph


def load(path):
    with open(path) as fh:
        return read_graph(fh)


def test_gen_gnp_zero_probability(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["gen", "--type", "gnp", "--n", "16", "--p", "0", "--seed", "1",
                 "--out", str(out)]) == 0
    g = load(out)
    assert g.n == 16 and g.m == 0


def test_gen_components_count(tmp_path):
    out = tmp_path / "g.txt"
    main(["gen", "--type", "components", "--n", "30", "--k", "3", "--seed", "2",
          "--out", str(out)])
    assert connected_components(load(out)).count == 3


def test_gen_weighted_clique_distinct(tmp_path):
    out = tmp_path / "g.txt"
    main(["gen", "--type", "weighted-clique", "--n", "8", "--seed", "3",
          "--out", str(out)])
    g = load(out)
    assert g.m == 28
    assert sorted(e.w for e in g.edges()) == list(range(1, 29))


def test_run_conn_three_components(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "components", "--n", "30", "--k", "3", "--seed", "5",
          "--out", str(graph)])
    capsys.readouterr()
    rc = main(["run", "--algo", "conn", "--graph", str(graph), "--seeds", "0,1"])
    blob = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert len(blob) == 2
    assert all(res["violations"] == [] for res in blob)


def test_run_mst_seed_sweep(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "weighted-clique", "--n", "32", "--seed", "7",
          "--out", str(graph)])
    capsys.readouterr()
    rc = main([
        "run", "--algo", "mst", "--graph", str(graph),
        "--seeds", ",".join(str(s) for s in range(10)),
    ])
    blob = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert len(blob) == 10
    for res in blob:
        assert res["violations"] == []
        assert "cluster_counts_by_phase" in res


def test_route_cost_sweep_affine(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "gnp", "--n", "32", "--p", "0.2", "--seed", "4",
          "--out", str(graph)])
    capsys.readouterr()
    rows = {}
    for rc_cost in (1, 2, 4):
        main(["run", "--algo", "conn", "--graph", str(graph), "--seeds", "0",
              "--route-cost", str(rc_cost)])
        res = json.loads(capsys.readouterr().out)[0]
        rows[rc_cost] = res
    assert (
        rows[1]["messages_total"]
        == rows[2]["messages_total"]
        == rows[4]["messages_total"]
    )
    p2 = {k: rows[k]["rounds_by_phase"]["phase2"] for k in rows}
    assert p2[2] - p2[1] == 3 and p2[4] - p2[2] == 6


def test_csv_schema(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "gnp", "--n", "16", "--p", "0.3", "--seed", "6",
          "--out", str(graph)])
    out_csv = tmp_path / "rows.csv"
    main(["run", "--algo", "conn", "--graph", str(graph), "--seeds", "0,1",
          "--csv-out", str(out_csv), "--metrics-out", str(tmp_path / "m.json")])
    with open(out_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and list(rows[0]) == [
        "n", "seed", "algo", "rounds_total", "phase", "rounds",
        "messages", "max_send", "max_recv", "pass",
    ]
    assert {r["phase"] for r in rows} == {"phase1", "phase2", "phase3"}


def test_metrics_json_fields_and_determinism(tmp_path):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "gnp", "--n", "24", "--p", "0.2", "--seed", "8",
          "--out", str(graph)])
    blobs = []
    for k in range(2):
        out = tmp_path / f"m{k}.json"
        main(["run", "--algo", "conn", "--graph", str(graph), "--seeds", "3",
              "--metrics-out", str(out)])
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    res = json.loads(blobs[0])[0]
    for field in ("rounds_total", "rounds_by_phase", "messages_total",
                  "max_send_per_round", "max_recv_per_round",
                  "primitive_calls", "violations"):
        assert field in res


def test_verify_conn(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "barbell", "--n", "24", "--seed", "1", "--out", str(graph)])
    capsys.readouterr()
    rc = main(["verify", "--algo", "conn", "--graph", str(graph), "--seed", "2"])
    blob = json.loads(capsys.readouterr().out)
    assert rc == 0 and blob["pass"]


def test_verify_sample(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "gnp", "--n", "16", "--p", "0.6", "--seed", "9",
          "--out", str(graph)])
    capsys.readouterr()
    main(["verify", "--algo", "sample-verify", "--graph", str(graph), "--seed", "0",
          "--c-sample", "0.5"])
    blob = json.loads(capsys.readouterr().out)
    assert blob["pass"]
    names = {c["name"] for c in blob["checks"]}
    assert {"cut_coverage", "intercomponent_bound", "charging_totality"} <= names


def test_verify_squaring_reports_divergence_family(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    main(["gen", "--type", "weighted-clique", "--n", "16", "--seed", "4",
          "--out", str(graph)])
    capsys.readouterr()
    main(["verify", "--algo", "ccmst-only", "--graph", str(graph), "--seed", "0",
          "--ccmst-strategy", "squaring"])
    blob = json.loads(capsys.readouterr().out)
    assert {c["name"] for c in blob["checks"]} >= {"tree_edges_in_mst"}
