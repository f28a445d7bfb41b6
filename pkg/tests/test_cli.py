import json
import math

import pytest

from src.ising_lab.cli.main import build_parser, main
from src.ising_lab.core.generators import cycle_graph, path_graph


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out) if out else None)


def test_tree_free_spins(capsys):
    code, doc = _run(capsys, ["tree", "--delta", "3", "--beta", "0", "--lambda", "2"])
    assert code == 0
    assert doc["result"]["eta_plus"] == pytest.approx(0.6)
    assert doc["result"]["eta_c"] == 0.0
    assert doc["manifest"]["command"] == "tree"
    assert doc["manifest"]["seed"] is None


def test_tree_with_depth(capsys):
    code, doc = _run(capsys, ["tree", "--delta", "3", "--beta", "2.0", "--depth", "60"])
    assert code == 0
    assert doc["result"]["eta_depth"] == pytest.approx(doc["result"]["eta_plus"], abs=1e-6)
    assert 0.5 < doc["result"]["q"] < 1.0


def test_tree_rejects_delta_two(capsys):
    code, doc = _run(capsys, ["tree", "--delta", "2", "--beta", "1.0"])
    assert code == 2
    assert doc is None


def test_exact_single_edge(capsys, k2, write_graph):
    path = write_graph(k2)
    code, doc = _run(capsys, ["exact", "--graph", str(path), "--beta", "0"])
    assert code == 0
    assert doc["result"]["Z"] == pytest.approx(4.0)
    code, doc = _run(capsys, ["exact", "--graph", str(path), "--beta", "1", "--k", "0"])
    assert code == 0
    assert doc["result"]["Z_fix"] == pytest.approx(2 * math.exp(-0.5))


def test_exact_over_capacity(capsys, write_graph):
    path = write_graph(path_graph(25))
    code, _ = _run(capsys, ["exact", "--graph", str(path), "--beta", "1"])
    assert code == 3


def test_missing_graph_file(capsys, tmp_path):
    code, _ = _run(capsys, ["exact", "--graph", str(tmp_path / "absent.json"), "--beta", "1"])
    assert code == 2


def test_sample_needs_seed(capsys, write_graph):
    path = write_graph(cycle_graph(8, delta_cap=3))
    code, _ = _run(capsys, ["sample", "--graph", str(path), "--beta", "0.5", "--eta", "0"])
    assert code == 2


def test_sample_hits_zero_magnetization(capsys, write_graph):
    path = write_graph(cycle_graph(8, delta_cap=3))
    code, doc = _run(capsys, ["sample", "--graph", str(path), "--beta", "0.5", "--eta", "0", "--seed", "7"])
    assert code == 0
    result = doc["result"]
    assert result["magnetization"] == 0
    assert sum(result["spins"]) == 0
    assert doc["manifest"]["seed"] == 7


def test_supercritical_zero_eta_is_refused(capsys, write_graph):
    path = write_graph(cycle_graph(8, delta_cap=3))
    code, _ = _run(capsys, ["sample", "--graph", str(path), "--beta", "2.0", "--eta", "0", "--seed", "1"])
    assert code == 4


def test_count_check(capsys, two_k2, write_graph):
    path = write_graph(two_k2)
    code, doc = _run(capsys, ["count", "--graph", str(path), "--beta", "1", "--k", "0", "--seed", "3", "--check"])
    assert code == 0
    result = doc["result"]
    assert result["sampler"] == "exact"
    assert abs(result["relative_error"]) <= 0.25
    # four configs with both edges broken, two with both satisfied
    assert result["log_exact"] == pytest.approx(math.log(4 * math.exp(-1.0) + 2 * math.e))


def test_same_seed_same_result_hash(capsys, triangle, write_graph):
    path = write_graph(triangle)
    argv = ["count", "--graph", str(path), "--beta", "0.8", "--k", "1", "--seed", "11"]
    _, first = _run(capsys, argv)
    _, second = _run(capsys, argv)
    assert first["manifest"]["result_sha256"] == second["manifest"]["result_sha256"]
    assert first["result"] == second["result"]


def test_kawasaki_csv(capsys, tmp_path, write_graph):
    path = write_graph(path_graph(6, delta_cap=3))
    csv_path = tmp_path / "trace.csv"
    code, doc = _run(capsys, ["kawasaki", "--graph", str(path), "--beta", "1", "--k", "2", "--seed", "5",
                              "--steps", "10", "--burn-in", "2", "--csv", str(csv_path)])
    assert code == 0
    assert doc["result"]["magnetization"] == 2
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "step,M,delta_sigma"
    assert len(lines) == 1 + 13


def test_graph_generator_writes_file(capsys, tmp_path):
    out = tmp_path / "path.json"
    code, doc = _run(capsys, ["graph", "--kind", "path", "--n", "4", "--delta", "3", "--graph-out", str(out)])
    assert code == 0
    assert doc["result"]["num_edges"] == 3
    assert json.loads(out.read_text())["n"] == 4


def test_out_file_matches_stdout(capsys, tmp_path):
    out = tmp_path / "tree.json"
    code, doc = _run(capsys, ["tree", "--delta", "3", "--beta", "1.5", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text()) == doc


def test_verify_extremal(capsys):
    code, doc = _run(capsys, ["verify", "extremal", "--delta", "3", "--nmax", "3"])
    assert code == 0
    assert doc["result"]["holds"] is True
    assert doc["manifest"]["command"] == "verify extremal"


def test_verify_balance(capsys, triangle, write_graph):
    path = write_graph(triangle)
    code, doc = _run(capsys, ["verify", "balance", "--graph", str(path), "--kind", "kawasaki_local",
                              "--beta", "1", "--k", "1"])
    assert code == 0
    assert doc["result"]["reversibility_error"] <= 1e-12
    assert doc["result"]["states"] == 3


def test_verify_schedule(capsys, write_graph):
    path = write_graph(cycle_graph(6, delta_cap=3))
    code, doc = _run(capsys, ["verify", "schedule", "--graph", str(path), "--beta", "1.5", "--k", "0"])
    assert code == 0
    assert doc["result"]["chebyshev_holds"] is True
    assert doc["result"]["telescoping_error"] <= 1e-9


def test_gadget_toy(capsys):
    code, doc = _run(capsys, ["gadget", "--delta", "3", "--n", "1", "--m", "2", "--m-prime", "2",
                              "--tree-depth", "0", "--match-size", "1", "--seed", "4",
                              "--set", "hardness.max_matching_attempts=1000"])
    assert code == 0
    assert doc["result"]["n_G"] == 6
    assert doc["result"]["degree_census"] == {"2": 4, "3": 2}


def test_gadget_degenerate_size(capsys):
    code, _ = _run(capsys, ["gadget", "--delta", "3", "--n", "4", "--seed", "1"])
    assert code == 2


def test_reduce_toy_with_oracle(capsys, write_graph):
    host = write_graph(path_graph(3, delta_cap=3), "host.json")
    code, doc = _run(capsys, ["reduce", "--host", str(host), "--gamma", "1/2", "--delta", "3", "--n", "1",
                              "--m", "2", "--m-prime", "2", "--tree-depth", "0", "--match-size", "1",
                              "--beta", "3", "--oracle", "--seed", "2",
                              "--set", "hardness.max_matching_attempts=1000", "--set", "hardness.C=2.0"])
    assert code == 0
    result = doc["result"]
    assert result["N"] == 18
    assert result["k"] == 0
    assert result["b"] == 1
    low, high = result["interval"]
    assert low < result["T"] < high


def test_bad_override(capsys):
    code, _ = _run(capsys, ["tree", "--delta", "3", "--beta", "1", "--set", "no_such_group.key=1"])
    assert code == 2


def test_parser_requires_magnetization_target():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["count", "--graph", "g.json", "--beta", "1"])


def test_graph_file_with_out_of_range_vertex(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"n": 3, "delta_cap": 3, "edges": [[0, 3]]}))
    code, doc = _run(capsys, ["exact", "--graph", str(path), "--beta", "1"])
    assert code == 2
    assert doc is None


def test_kawasaki_variant_comes_from_config(capsys, write_graph):
    path = write_graph(path_graph(6, delta_cap=3))
    argv = ["kawasaki", "--graph", str(path), "--beta", "1", "--k", "0", "--seed", "5", "--steps", "4", "--burn-in", "0"]
    code, doc = _run(capsys, argv)
    assert code == 0
    assert doc["result"]["variant"] == "local"
    code, doc = _run(capsys, argv + ["--set", "chains.variant=global"])
    assert code == 0
    assert doc["result"]["variant"] == "global"
