import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hashlab import cli, experiments as ex

SMALL_FAMS = ["multiply-shift", "mixed-tab"]


def run_cli(tmp_path, *args):
    out = tmp_path / "out"
    code = cli.main(["--out", str(out), *args])
    return code, out


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=500),
       st.integers(1, 60))
@settings(max_examples=100)
def test_histogram_conserves_counts(xs, bins):
    h = ex.histogram(np.array(xs), bins=bins)
    assert len(h) == bins
    assert sum(c for _, _, c in h) == len(xs)
    assert all(h[i][1] == h[i + 1][0] for i in range(bins - 1))


def test_family_stats_dict():
    s = ex.FamilyStats(np.array([0.5, 1.5]), 1.0, extra={"k": 3})
    d = s.to_dict()
    assert d["mean"] == 1.0 and d["mse"] == 0.25 and d["k"] == 3
    assert sum(b[2] for b in d["histogram"]) == 2


def test_clean_replaces_non_finite():
    assert ex._clean({"a": [float("inf"), 1.0], "b": float("nan")}) == {"a": [None, 1.0], "b": None}


def test_worker_count(monkeypatch):
    monkeypatch.setenv("HASHLAB_THREADS", "1")
    assert ex.worker_count() == 1
    monkeypatch.setenv("HASHLAB_THREADS", "3")
    assert ex.worker_count() <= 3


def test_fh_dimension_helpers():
    assert ex.fh_min_dimension(0.5, 0.05) == 277
    assert ex.fh_max_linf(0.5, 0.05, 277) > 0.01


def test_oph_synth_deterministic_and_json(tmp_path):
    args = ["oph-synth", "--n", "200", "--k", "32", "--reps", "100", "--families", ",".join(SMALL_FAMS)]
    code, out = run_cli(tmp_path, *args)
    assert code == 0
    first = {p.name: p.read_bytes() for p in out.iterdir() if "wallclock" not in p.name}
    code, out2 = run_cli(tmp_path / "again", *args)
    second = {p.name: p.read_bytes() for p in out2.iterdir() if "wallclock" not in p.name}
    assert first == second
    doc = json.loads(first["oph-synth.json"])
    assert set(doc["results"]) == set(SMALL_FAMS)
    for r in doc["results"].values():
        assert r["count"] == 100
        assert sum(b[2] for b in r["histogram"]) == 100
    assert "oph-synth_mixed-tab_hist.csv" in first
    assert first["oph-synth_mixed-tab_hist.csv"].startswith(b"bin_left,bin_right,count\n")


def test_seed_changes_output(tmp_path):
    base = ["oph-synth", "--n", "100", "--k", "16", "--reps", "100", "--families", "mixed-tab",
            "--format", "json"]
    run_cli(tmp_path / "a", "--seed", "1", *base)
    run_cli(tmp_path / "b", "--seed", "2", *base)
    a = json.loads((tmp_path / "a" / "out" / "oph-synth.json").read_text())
    b = json.loads((tmp_path / "b" / "out" / "oph-synth.json").read_text())
    assert a["results"] != b["results"]


def test_flags_after_subcommand(tmp_path):
    out = tmp_path / "o"
    code = cli.main(["gap-stats", "--n", "20", "--trials", "10", "--out", str(out),
                     "--seed", "4", "--format", "json", "-v"])
    assert code == 0
    assert (out / "gap-stats.json").exists()
    assert not (out / "gap-stats.csv").exists()


@pytest.mark.parametrize("args", [
    ["oph-synth", "--reps", "0"],
    ["oph-synth", "--reps", "99"],
    ["oph-synth", "--families", "sha1"],
    ["--seed", "-1", "gap-stats"],
    ["fh-synth", "--sign-mode", "combined", "--d-prime", "200", "--reps", "100"],
    ["lsh-eval", "--t0", "0", "--n-points", "10", "--n-queries", "2"],
    ["gap-stats", "--n", "2"],
    ["nonsense"],
])
def test_config_errors_exit_2(tmp_path, args):
    with pytest.raises(SystemExit) as err:
        code = cli.main(["--out", str(tmp_path), *args])
        raise SystemExit(code)
    assert err.value.code == 2


def test_runtime_errors_exit_1(tmp_path):
    assert cli.main(["--out", str(tmp_path), "fh-real", str(tmp_path / "missing.svm")]) == 1
    bad = tmp_path / "bad.svm"
    bad.write_text("1 1:1\n1 x:2\n")
    assert cli.main(["--out", str(tmp_path), "fh-real", str(bad)]) == 1
    empty = tmp_path / "empty.svm"
    empty.write_text("\n# nothing\n")
    assert cli.main(["--out", str(tmp_path), "fh-real", str(empty)]) == 1


def test_fh_real_on_small_file(tmp_path):
    rng = np.random.default_rng(0)
    lines = []
    for i in range(12):
        idx = np.sort(rng.choice(5000, size=30, replace=False)) + 1
        lines.append(f"{i % 2} " + " ".join(f"{j}:{rng.normal():.4f}" for j in idx))
    path = tmp_path / "data.svm"
    path.write_text("\n".join(lines) + "\n")
    code, out = run_cli(tmp_path, "fh-real", str(path), "--d-prime", "64", "--reps", "10",
                        "--families", "poly20")
    assert code == 0
    doc = json.loads((out / "fh-real.json").read_text())
    r = doc["results"]["poly20"]
    assert r["count"] == 120
    assert abs(r["mean"] - 1.0) < 0.2


def test_gap_stats_schema(tmp_path):
    code, out = run_cli(tmp_path, "gap-stats", "--n", "40", "--trials", "50", "--format", "both")
    assert code == 0
    doc = json.loads((out / "gap-stats.json").read_text())
    jsonschema.validate(doc, ex.GAP_REPORT_SCHEMA)
    assert [r["family"] for r in doc["results"]] == ["poly2", "poly20"]
    csv_lines = (out / "gap-stats.csv").read_text().splitlines()
    assert len(csv_lines) == 3


def test_bench_time_checksums_deterministic():
    a = ex.cmd_bench_time(20_000, ["multiply-shift", "poly2", "mixed-tab"], master=3, passes=2)
    b = ex.cmd_bench_time(20_000, ["multiply-shift", "poly2", "mixed-tab"], master=3, passes=2)
    for fam in a.results:
        assert a.results[fam]["checksum"] == b.results[fam]["checksum"]
        assert a.results[fam]["ns_per_key"] > 0
    assert len({r["checksum"] for r in a.results.values()}) == 3


def test_lsh_eval_minimal_index():
    r = ex.cmd_lsh_eval(1, 1, n_points=50, n=20, n_queries=5, families=["mixed-tab"], master=1)
    res = r.results["mixed-tab"]
    assert 0 <= res["retrieved_fraction"] <= 1
    assert len(r.records["mixed-tab"]) == 5


def test_lsh_eval_self_queries_full_recall():
    r = ex.cmd_lsh_eval(4, 2, n_points=40, n=30, t0=1.0, families=["poly2", "mixed-tab"],
                        master=2, queries_equal_corpus=True)
    for res in r.results.values():
        assert res["recall"] == 1.0
        assert res["partner_recall"] == 1.0


def test_lsh_eval_csv_records(tmp_path):
    code, out = run_cli(tmp_path, "lsh-eval", "--n-points", "30", "--n", "20", "--n-queries", "4",
                        "--families", "mixed-tab", "--format", "csv")
    assert code == 0
    lines = (out / "lsh-eval_mixed-tab_queries.csv").read_text().splitlines()
    assert lines[0] == "query_id,n_retrieved,n_relevant,recall,ratio"
    assert len(lines) == 5


def test_fh_tail_report():
    r = ex.cmd_fh_tail(support=1000, reps=100, master=4)
    d = r.to_dict()
    res = d["results"]["poly20"]
    assert d["config"]["d_prime"] == 277
    assert 0 <= res["failure_rate"] <= 1 and res["bound"] == pytest.approx(0.2)


def test_emit_report_rejects_format(tmp_path):
    r = ex.cmd_gap_stats(10, trials=5)
    with pytest.raises(ValueError):
        ex.emit_report(r, "xml", tmp_path)
