from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path


from siotsim import cli
from siotsim.experiment import read_result_csv


def run_cli(args) -> int:
    try:
        return cli.main([str(a) for a in args])
    except SystemExit as exc:
        return int(exc.code)


def iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat().replace("+00:00", "Z")


def write_trace_fixture(base: Path, users=("u1", "u2", "u3"), meet=True) -> dict:
    """Users check in 12 times at 12 distinct places; when `meet` is set,
    all of them meet near a Donut PoI every time."""
    lines = []
    for i in range(12):
        t = 10000.0 * i
        for k, user in enumerate(users):
            if meet:
                lat, lon = 10.0, 10.0
            else:
                lat, lon = 10.0 + k, 10.0 + k  # far apart, never co-located
            lines.append(f"{user}\t{iso(t)}\t{lat}\t{lon}\t{user}-pl{i}")
    checkins = base / "checkins.tsv"
    checkins.write_text("\n".join(lines) + "\n", encoding="utf-8")
    friendships = base / "friendships.tsv"
    pair_lines = [f"{users[0]}\t{users[1]}"] + [f"{u}\t{u}" for u in users[:1]]
    friendships.write_text("\n".join(pair_lines) + "\n", encoding="utf-8")
    poi = base / "poi.csv"
    poi.write_text("poi_id,lat,lon,keyword\npoi-1,10.0,10.0001,Donut\n",
                   encoding="utf-8")
    models = base / "models.csv"
    models.write_text("model_id,probability\nmm,1.0\n", encoding="utf-8")
    return {"checkins": checkins, "friendships": friendships,
            "poi": poi, "models": models}


def read_all(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


def test_ingest_writes_all_artifacts_and_is_deterministic(tmp_path):
    files = write_trace_fixture(tmp_path)
    out1, out2 = tmp_path / "ing1", tmp_path / "ing2"
    for out in (out1, out2):
        rc = run_cli(["ingest", "--checkins", files["checkins"],
                      "--friendships", files["friendships"],
                      "--poi", files["poi"], "--out", out])
        assert rc == 0
    for name in ("checkins.tsv", "friendships.tsv", "colocations.csv",
                 "home_points.csv", "profiles.csv"):
        assert (out1 / name).is_file()
    assert read_all(out1) == read_all(out2)
    profiles = (out1 / "profiles.csv").read_text(encoding="utf-8")
    # 12 meeting instants x 2 pairings per user near a Donut place:
    # interests 3 and 6 held by everyone
    assert "u1,3,24,1" in profiles
    assert "u1,6,24,1" in profiles


def test_ingest_missing_poi_is_usage_error(tmp_path, capsys):
    files = write_trace_fixture(tmp_path)
    rc = run_cli(["ingest", "--checkins", files["checkins"],
                  "--friendships", files["friendships"],
                  "--out", tmp_path / "out"])
    assert rc == 2
    assert "--poi" in capsys.readouterr().err


def test_ingest_nonexistent_file_is_usage_error(tmp_path, capsys):
    files = write_trace_fixture(tmp_path)
    rc = run_cli(["ingest", "--checkins", tmp_path / "nope.tsv",
                  "--friendships", files["friendships"],
                  "--poi", files["poi"], "--out", tmp_path / "out"])
    assert rc == 2
    assert "--checkins" in capsys.readouterr().err


def _ingest_and_build(tmp_path, meet=True):
    files = write_trace_fixture(tmp_path, meet=meet)
    ing = tmp_path / "ing"
    assert run_cli(["ingest", "--checkins", files["checkins"],
                    "--friendships", files["friendships"],
                    "--poi", files["poi"], "--out", ing]) == 0
    out = tmp_path / "graph"
    assert run_cli(["build-graph", "--ingest", ing, "--models", files["models"],
                    "--out", out, "--seed", 1]) == 0
    return out


def test_build_graph_por_count_and_stats_consistency(tmp_path):
    out = _ingest_and_build(tmp_path)
    stats = dict(line.split() for line in
                 (out / "stats.txt").read_text(encoding="utf-8").splitlines())
    assert stats["devices"] == "6"
    assert stats["POR"] == "15"  # C(6,2) with a single model
    assert stats["OOR"] == "3"
    assert stats["SOR"] == "3"   # 12 meetings per pair, threshold 3
    assert stats["C-IOR"] == "0"
    graph_lines = [ln for ln in
                   (out / "siot_graph.csv").read_text(encoding="utf-8").splitlines()
                   if ln]
    kind_total = sum(int(stats[k]) for k in ("POR", "C-LOR", "OOR", "SOR", "C-IOR"))
    assert len(graph_lines) == kind_total


def test_build_graph_without_meetings_has_no_sor(tmp_path):
    out = _ingest_and_build(tmp_path, meet=False)
    stats = dict(line.split() for line in
                 (out / "stats.txt").read_text(encoding="utf-8").splitlines())
    assert stats["SOR"] == "0"
    assert stats["C-LOR"] == "0"  # homes are far apart too


def test_synth_exports_exactly_requested_cross_edges(tmp_path):
    out = tmp_path / "scn"
    rc = run_cli(["synth", "--communities", 2, "--nodes", 10, "--intra-prob", 1.0,
                  "--cross", "POR=1", "--seed", 7, "--out", out])
    assert rc == 0
    lines = (out / "siot_graph.csv").read_text(encoding="utf-8").splitlines()
    cross = [ln for ln in lines if ln.split(",")[0][:3] != ln.split(",")[1][:3]]
    assert len(cross) == 1
    assert cross[0].endswith("POR")


def test_synth_same_seed_is_byte_identical(tmp_path):
    args = ["synth", "--communities", 2, "--nodes", 6, "--intra-prob", 0.5,
            "--cross", "SOR=2", "--noise-interests", 1]
    assert run_cli(args + ["--seed", 3, "--out", tmp_path / "a"]) == 0
    assert run_cli(args + ["--seed", 3, "--out", tmp_path / "b"]) == 0
    assert run_cli(args + ["--seed", 4, "--out", tmp_path / "c"]) == 0
    assert read_all(tmp_path / "a") == read_all(tmp_path / "b")
    assert read_all(tmp_path / "a") != read_all(tmp_path / "c")


def test_run_on_bridged_scenario_reaches_everyone(tmp_path):
    scn = tmp_path / "scn"
    assert run_cli(["synth", "--communities", 2, "--nodes", 4, "--intra-prob", 1.0,
                    "--cross", "POR=1", "--seed", 5, "--out", scn]) == 0
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("campaign = bridge\nreplicates = 1\nseed = 1\n", encoding="utf-8")
    out = tmp_path / "run"
    assert run_cli(["run", "--config", cfg, "--scenario", scn, "--out", out]) == 0
    rows = read_result_csv(out / "results.csv")
    enhanced = [r for r in rows if r.mode == "enhanced"]
    friendships = [r for r in rows if r.mode == "friendships"]
    assert enhanced and friendships
    assert all(r.irn_pct == 100.0 for r in enhanced)
    assert all(r.irn_pct < 100.0 for r in friendships)
    for name in ("results.csv", "irn_series.csv", "irn_series.dat",
                 "irn_by_hop.csv", "irn_by_hop.dat"):
        assert (out / name).is_file()


def test_run_rejects_unknown_config_key(tmp_path, capsys):
    scn = tmp_path / "scn"
    assert run_cli(["synth", "--out", scn]) == 0
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("mystery_knob = 1\n", encoding="utf-8")
    rc = run_cli(["run", "--config", cfg, "--scenario", scn,
                  "--out", tmp_path / "out"])
    assert rc == 2
    assert "mystery_knob" in capsys.readouterr().err


def test_report_reaggregates_results(tmp_path):
    scn = tmp_path / "scn"
    assert run_cli(["synth", "--communities", 2, "--nodes", 4, "--intra-prob", 1.0,
                    "--cross", "POR=1", "--seed", 5, "--out", scn]) == 0
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("replicates = 2\nsweep = spread\nspread_values = 1.0, 0.1\n",
                   encoding="utf-8")
    run_dir = tmp_path / "run"
    assert run_cli(["run", "--config", cfg, "--scenario", scn, "--out", run_dir]) == 0
    rep_dir = tmp_path / "rep"
    assert run_cli(["report", "--results", run_dir / "results.csv",
                    "--out", rep_dir]) == 0
    # re-aggregating the persisted runs reproduces the run-time series
    assert (rep_dir / "irn_series.csv").read_bytes() == \
           (run_dir / "irn_series.csv").read_bytes()


def test_ingest_reads_thresholds_from_config(tmp_path):
    # one user with only 3 check-ins survives when the config lowers the
    # activity thresholds
    lines = [f"solo\t{iso(1000.0 * i)}\t10.0\t10.0\tpl{i}" for i in range(3)]
    checkins = tmp_path / "checkins.tsv"
    checkins.write_text("\n".join(lines) + "\n", encoding="utf-8")
    friendships = tmp_path / "friendships.tsv"
    friendships.write_text("", encoding="utf-8")
    poi = tmp_path / "poi.csv"
    poi.write_text("poi_id,lat,lon,keyword\n", encoding="utf-8")
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("min_checkins = 1\nmin_places = 1\n", encoding="utf-8")
    out = tmp_path / "out"
    assert run_cli(["ingest", "--checkins", checkins, "--friendships", friendships,
                    "--poi", poi, "--config", cfg, "--out", out]) == 0
    homes = (out / "home_points.csv").read_text(encoding="utf-8")
    assert "solo" in homes


def test_run_with_missing_scenario_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("replicates = 1\n", encoding="utf-8")
    rc = run_cli(["run", "--config", cfg, "--scenario", tmp_path / "ghost",
                  "--out", tmp_path / "out"])
    assert rc == 2
    assert "--scenario" in capsys.readouterr().err


def test_header_validation_of_csv_inputs(tmp_path):
    import pytest
    from siotsim.experiment import read_result_csv
    from siotsim.interests import load_macro_categories, load_poi_catalog
    from siotsim.siotgraph import load_model_catalog
    from siotsim.trace import read_colocations_csv

    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n", encoding="utf-8")
    for loader in (load_poi_catalog, load_macro_categories, load_model_catalog,
                   read_colocations_csv, read_result_csv):
        with pytest.raises(ValueError):
            loader(bad)


def test_every_subcommand_has_help(capsys):
    for sub in ("ingest", "build-graph", "synth", "run", "report"):
        rc = run_cli([sub, "--help"])
        assert rc == 0
        assert "--out" in capsys.readouterr().out
