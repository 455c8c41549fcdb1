"""Headless runs, exit codes, trace files, and gallery commands."""

from __future__ import annotations

import json
from pathlib import Path

from provega.cli import main

from .conftest import data_doc, point_values


def write_spec(tmp_path: Path, doc: dict, name: str = "spec.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def trace_lines(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines()]


def progress_doc(n: int = 10, **kw) -> dict:
    kw.setdefault("monitoring", {"quality": {"absolute_progress": True}})
    return data_doc(point_values(n), **kw)


class TestRun:
    def test_ascending_run_traces_every_chunk(self, tmp_path):
        spec = write_spec(tmp_path, progress_doc(10, chunk_size=3))
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(trace)]) == 0
        lines = trace_lines(trace)
        assert [l["counts"]["inserts"] for l in lines] == [3, 3, 3, 1]
        assert lines[-1]["quality"]["absolute_progress"] == 1.0
        assert lines[-1]["quality"]["etc_ms"] == 0.0

    def test_trace_defaults_to_stdout(self, tmp_path, capsys):
        spec = write_spec(tmp_path, progress_doc(4, chunk_size=2))
        assert main(["run", "--spec", str(spec)]) == 0
        out = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert len(out) == 2
        assert all(line["counts"]["inserts"] == 2 for line in out)

    def test_virtual_runs_are_byte_identical(self, tmp_path):
        doc = data_doc(point_values(30), method="random", seed=5, chunk_size=4,
                       monitoring={"quality": {"absolute_progress": True,
                                               "relative_progress": True},
                                   "change": {"mark": True, "area": True}})
        spec = write_spec(tmp_path, doc)
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(first)]) == 0
        assert main(["run", "--spec", str(spec), "--trace", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_max_steps_stops_the_run_early(self, tmp_path):
        spec = write_spec(tmp_path, progress_doc(10, chunk_size=2))
        trace = tmp_path / "trace.jsonl"
        code = main(["run", "--spec", str(spec), "--trace", str(trace),
                     "--max-steps", "2"])
        assert code == 0
        assert len(trace_lines(trace)) == 2

    def test_frequency_override_changes_the_virtual_cadence(self, tmp_path):
        spec = write_spec(tmp_path, progress_doc(4, chunk_size=1))
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(trace),
                     "--frequency", "125"]) == 0
        assert [l["t_ms"] for l in trace_lines(trace)] == [125, 250, 375, 500]

    def test_exploration_specs_auto_play_headlessly(self, tmp_path):
        spec = write_spec(tmp_path, progress_doc(
            6, chunk_size=2, control={"mode": "exploration"}))
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(trace)]) == 0
        assert len(trace_lines(trace)) == 3

    def test_seed_flag_overrides_the_documents_seed(self, tmp_path):
        follow = {"quality": {"certainty": {"field": "x"}}}
        values = [{"x": i / 10, "y": 0.0} for i in range(10)]

        def run_with(doc_seed, argv_extra):
            doc = data_doc(values, method="random", seed=doc_seed,
                           chunk_size=1, monitoring=follow)
            spec = write_spec(tmp_path, doc, name=f"s{doc_seed}.json")
            trace = tmp_path / f"t{doc_seed}{len(argv_extra)}.jsonl"
            assert main(["run", "--spec", str(spec), "--trace", str(trace)]
                        + argv_extra) == 0
            return [l["quality"]["certainty"] for l in trace_lines(trace)]

        overridden = run_with(0, ["--seed", "7"])
        native = run_with(7, [])
        untouched = run_with(0, [])
        assert overridden == native
        assert overridden != untouched

    def test_out_of_range_seed_is_a_spec_error(self, tmp_path, capsys):
        doc = data_doc(point_values(4), method="random", seed=1)
        spec = write_spec(tmp_path, doc)
        assert main(["run", "--spec", str(spec), "--seed", "-1"]) == 1
        assert main(["run", "--spec", str(spec), "--seed", str(1 << 64)]) == 1
        assert "--seed" in capsys.readouterr().err

    def test_seed_without_a_reading_block_warns_and_runs(self, tmp_path, capsys):
        doc = {
            "data": {"values": point_values(4)},
            "mark": "point",
            "encoding": {"x": {"field": "x", "type": "quantitative"},
                         "y": {"field": "y", "type": "quantitative"}},
            "provega": {"progression": {"chunking": {
                "type": "process",
                "processor": {"name": "kmeans", "k": 2, "seed": 1},
            }}},
        }
        spec = write_spec(tmp_path, doc)
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(trace),
                     "--seed", "9"]) == 0
        assert "--seed ignored" in capsys.readouterr().err

    def test_document_relative_data_urls_resolve_against_the_spec(self, tmp_path):
        (tmp_path / "rows.csv").write_text("x,y\n1.0,2.0\n3.0,4.0\n")
        doc = progress_doc(2, chunk_size=1)
        doc["data"] = {"url": "rows.csv"}
        spec = write_spec(tmp_path, doc)
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(trace)]) == 0
        assert len(trace_lines(trace)) == 2


class TestExitCodes:
    def test_missing_spec_file_is_a_spec_error(self, tmp_path, capsys):
        assert main(["run", "--spec", str(tmp_path / "absent.json")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_malformed_spec_text_is_a_spec_error(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text("{not json")
        assert main(["run", "--spec", str(path)]) == 1

    def test_invalid_parameter_values_are_spec_errors(self, tmp_path, capsys):
        spec = write_spec(tmp_path, progress_doc(4, frequency=0))
        assert main(["run", "--spec", str(spec)]) == 1
        assert "frequency" in capsys.readouterr().err

    def test_corrupt_csv_exits_2_and_leaves_no_trace_file(self, tmp_path, capsys):
        (tmp_path / "rows.csv").write_text("x,y\n1.0,2.0\n3.0\n")
        doc = progress_doc(2)
        doc["data"] = {"url": "rows.csv"}
        spec = write_spec(tmp_path, doc)
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(spec), "--trace", str(trace)]) == 2
        assert not trace.exists()
        assert "error:" in capsys.readouterr().err

    def test_unreachable_generator_is_a_data_error(self, tmp_path):
        doc = progress_doc(2)
        doc["data"] = {"url": "ws://127.0.0.1:1/feed"}
        del doc["provega"]["progression"]["chunking"]["reading"]
        spec = write_spec(tmp_path, doc)
        assert main(["run", "--spec", str(spec)]) == 2

    def test_document_without_a_data_source_is_a_spec_error(self, tmp_path):
        doc = progress_doc(2)
        del doc["data"]
        spec = write_spec(tmp_path, doc)
        assert main(["run", "--spec", str(spec)]) == 1

    def test_backend_flag_conflicts_with_a_complete_source(self, tmp_path):
        spec = write_spec(tmp_path, progress_doc(4))
        code = main(["serve", "--spec", str(spec),
                     "--backend", "ws://127.0.0.1:1/feed"])
        assert code == 1

    def test_unparseable_port_env_is_a_spec_error(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PROVEGA_PORT", "eighty")
        spec = write_spec(tmp_path, progress_doc(4))
        assert main(["serve", "--spec", str(spec)]) == 1


class TestGalleryCommands:
    def test_list_names_every_bundle(self, capsys):
        assert main(["gallery", "list"]) == 0
        out = capsys.readouterr().out
        for name in ("density_data_chunking", "kmeans_process",
                     "kmeans_mixed", "backend_demo"):
            assert name in out

    def test_exported_bundles_run_from_their_new_home(self, tmp_path, capsys):
        out_dir = tmp_path / "exported"
        assert main(["gallery", "export", "density_data_chunking",
                     "--out", str(out_dir)]) == 0
        exported = {p.name for p in out_dir.iterdir()}
        assert "spec.json" in exported
        capsys.readouterr()
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--spec", str(out_dir / "spec.json"),
                     "--trace", str(trace)]) == 0
        assert trace_lines(trace)

    def test_unknown_bundles_are_spec_errors(self, tmp_path, capsys):
        code = main(["gallery", "export", "tsne_demo",
                     "--out", str(tmp_path / "x")])
        assert code == 1
        assert "tsne_demo" in capsys.readouterr().err
