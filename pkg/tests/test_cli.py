import json

import pytest

from instance_io import load_instance
from main import EXIT_BAD_INPUT, EXIT_SINK, EXIT_VIOLATION, main

TWO_SINKS = {
    "grid": {"blocks": [[1, 2], [3, 4]]},
    "outmap": {"table": {"1,3": [], "1,4": [2, 3], "2,3": [1, 4], "2,4": []}},
}
FOUR_CYCLE = {
    "grid": {"blocks": [[1, 2], [3, 4]]},
    "outmap": {"table": {"1,3": [2], "1,4": [3], "2,3": [4], "2,4": [1]}},
}


@pytest.fixture
def write_instance(tmp_path):
    def write(data, name="instance.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


class TestGenerate:
    """Tests for the generate command."""

    def test_product(self, tmp_path, capsys):
        out = tmp_path / "product.json"
        assert main(["generate", "--blocks", "2,2,3", "--product", "ascending", "-o", str(out)]) == EXIT_SINK
        assert "classification: USO, sink [1, 3, 5]" in capsys.readouterr().out
        loaded = load_instance(str(out))
        assert loaded.schema.outmap.generator.type.value == "product"
        assert loaded.sigma((1, 3, 5)) == frozenset()

    def test_random_is_reproducible(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        main(["generate", "--blocks", "2,3", "--random", "--seed", "11", "--materialize", "-o", str(first)])
        main(["generate", "--blocks", "2,3", "--random", "--seed", "11", "--materialize", "-o", str(second)])
        assert first.read_text() == second.read_text()
        assert "table" in json.loads(first.read_text())["outmap"]

    def test_flip_reports_violation(self, tmp_path, capsys):
        out = tmp_path / "flipped.json"
        code = main([
            "generate", "--blocks", "2,2", "--product", "ascending",
            "--flip", "[[[1, 3], [1, 4]], [[2, 3], [2, 4]]]", "-o", str(out),
        ])
        assert code == EXIT_SINK
        assert "classification:" in capsys.readouterr().out

    def test_explicit_partition(self, tmp_path):
        out = tmp_path / "partition.json"
        assert main(["generate", "--partition", "[[3, 1], [2, 4]]", "--product", "ascending", "-o", str(out)]) == 0
        assert json.loads(out.read_text())["grid"]["blocks"] == [[3, 1], [2, 4]]

    def test_sink_printed_in_original_labels(self, tmp_path, capsys):
        """generate reports the sink in the partition's own labels, matching solve."""
        out = tmp_path / "partition.json"
        assert main(["generate", "--partition", "[[1, 3], [2, 4]]", "--product", "ascending", "-o", str(out)]) == EXIT_SINK
        assert "classification: USO, sink [1, 2]" in capsys.readouterr().out
        assert main(["solve", str(out)]) == EXIT_SINK
        assert json.loads(capsys.readouterr().out) == {"type": "GU1", "point": [1, 2]}

    def test_missing_seed(self, capsys):
        assert main(["generate", "--blocks", "2,2", "--random"]) == EXIT_BAD_INPUT
        assert "error: random generators need --seed" in capsys.readouterr().err

    def test_block_too_small(self, capsys):
        assert main(["generate", "--blocks", "2,1", "--random", "--seed", "1"]) == EXIT_BAD_INPUT
        assert capsys.readouterr().err.startswith("error:")

    def test_two_generators(self):
        assert main(["generate", "--blocks", "2,2", "--random", "--inconsistent", "--seed", "1"]) == EXIT_BAD_INPUT


class TestSolve:
    """Tests for the solve command on both paths."""

    @pytest.mark.parametrize("path", ["--direct", "--via-eopl"])
    def test_figure4(self, figure4_path, capsys, path):
        assert main(["solve", figure4_path, path]) == EXIT_SINK
        assert json.loads(capsys.readouterr().out) == {"type": "GU1", "point": [1, 4, 7]}

    @pytest.mark.parametrize("path", ["--direct", "--via-eopl"])
    def test_two_sinks(self, write_instance, capsys, path):
        assert main(["solve", write_instance(TWO_SINKS), path]) == EXIT_SINK
        assert json.loads(capsys.readouterr().out)["point"] == [1, 3]

    @pytest.mark.parametrize("path", ["--direct", "--via-eopl"])
    def test_four_cycle(self, write_instance, capsys, path):
        assert main(["solve", write_instance(FOUR_CYCLE), path]) == EXIT_VIOLATION
        cert = json.loads(capsys.readouterr().out)
        assert cert == {"type": "GUV2", "point": [1, 4], "other": [2, 3], "subgrid": [[1, 2], [3, 4]]}

    def test_trace_and_report(self, figure4_path, tmp_path):
        trace, report = tmp_path / "trace.jsonl", tmp_path / "report.json"
        out = tmp_path / "cert.json"
        code = main(["solve", figure4_path, "--trace", str(trace), "--report", str(report), "-o", str(out)])
        assert code == EXIT_SINK
        steps = [json.loads(line) for line in trace.read_text().splitlines()]
        assert steps[0]["depth"] == 0
        assert {s["action"] for s in steps} >= {"skip", "recurse", "merge"}
        data = json.loads(report.read_text())
        assert data["path"] == "direct"
        assert data["verified"] is True
        assert data["outmap_calls"] > 0

    def test_via_eopl_report(self, figure4_path, tmp_path):
        report = tmp_path / "report.json"
        assert main(["solve", figure4_path, "--via-eopl", "--report", str(report), "-o", str(tmp_path / "c")]) == 0
        data = json.loads(report.read_text())
        assert data["answer"]["tag"] == "UF1"
        assert data["walk_steps"] > 0

    def test_missing_file(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "missing.json")]) == EXIT_BAD_INPUT
        assert "cannot read" in capsys.readouterr().err

    def test_malformed_table(self, write_instance, capsys):
        bad = {"grid": {"blocks": [[1, 2], [3, 4]]}, "outmap": {"table": {"1,3": [], "1,5": [9]}}}
        assert main(["solve", write_instance(bad)]) == EXIT_BAD_INPUT
        assert "not a point of the grid" in capsys.readouterr().err


class TestVerify:
    """Tests for the verify command."""

    def test_valid_and_invalid(self, write_instance, capsys):
        instance = write_instance(TWO_SINKS)
        good = write_instance({"type": "GUV2", "point": [1, 3], "other": [2, 4], "subgrid": [[1, 2], [3, 4]]}, "good.json")
        bad = write_instance({"type": "GU1", "point": [2, 3]}, "bad.json")
        assert main(["verify", instance, good]) == EXIT_SINK
        assert main(["verify", instance, bad]) == EXIT_VIOLATION
        out = capsys.readouterr().out
        assert "certificate GUV2: valid" in out
        assert "certificate GU1: invalid" in out


class TestReduce:
    """Tests for the reduce command."""

    def test_manifest(self, figure4_path, tmp_path, capsys):
        nodes = tmp_path / "nodes.jsonl"
        assert main(["reduce", figure4_path, "--dump-nodes", str(nodes)]) == EXIT_SINK
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["dBits"] == 32
        assert manifest["mBits"] == 74
        assert manifest["startMask"] == "0x1"
        dumped = [json.loads(line) for line in nodes.read_text().splitlines()]
        assert dumped[0] == {"node": "00000000", "succ": dumped[0]["succ"], "cost": "0"}
        assert len({d["node"] for d in dumped}) == len(dumped)


class TestExportDot:
    """Tests for the export-dot command."""

    def test_orientation(self, figure4_path, capsys):
        assert main(["export-dot", figure4_path]) == EXIT_SINK
        text = capsys.readouterr().out
        assert text.startswith("digraph orientation {")
        assert '"147" [label="147", shape=doublecircle];' in text

    def test_line(self, write_instance, capsys):
        assert main(["export-dot", write_instance(FOUR_CYCLE), "--line"]) == EXIT_SINK
        text = capsys.readouterr().out
        assert text.startswith("digraph line {")
        assert "shape=box" in text


class TestSweepCommand:
    """Tests for the sweep command."""

    def test_sweep_2x2(self, tmp_path, capsys):
        summary = tmp_path / "summary.json"
        assert main(["sweep", "--blocks", "2,2", "--single-line", "--summary", str(summary)]) == EXIT_SINK
        records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert len(records) == 16
        data = json.loads(summary.read_text())
        assert data["uso_count"] == 12
        assert data["violation_count"] == 4
        assert data["failures"] == {}


class TestWalkCommand:
    """Tests for reduce --table and the walk command on the dumped tables."""

    @pytest.fixture
    def product_2x2(self, tmp_path):
        out = tmp_path / "product.json"
        main(["generate", "--blocks", "2,2", "--product", "ascending", "-o", str(out)])
        return str(out)

    def test_walk_matches_via_eopl(self, product_2x2, tmp_path, capsys):
        table, report = tmp_path / "table.json", tmp_path / "report.json"
        assert main(["reduce", product_2x2, "--table", str(table), "-o", str(tmp_path / "m.json")]) == EXIT_SINK
        data = json.loads(table.read_text())
        assert data["dBits"] == 15
        assert len(data["succ"]) == 1 << 15
        main(["solve", product_2x2, "--via-eopl", "--report", str(report), "-o", str(tmp_path / "c.json")])
        capsys.readouterr()
        assert main(["walk", str(table)]) == EXIT_SINK
        answer = json.loads(capsys.readouterr().out)
        assert answer == json.loads(report.read_text())["answer"]

    def test_enumerate_single_line(self, product_2x2, tmp_path, capsys):
        """A USO's reduced instance has exactly one answer: the end of the line."""
        table = tmp_path / "table.json"
        main(["reduce", product_2x2, "--table", str(table), "-o", str(tmp_path / "m.json")])
        capsys.readouterr()
        assert main(["walk", str(table), "--enumerate"]) == EXIT_SINK
        answers = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert [a["tag"] for a in answers] == ["UF1"]

    def test_handwritten_table(self, tmp_path, capsys):
        table = tmp_path / "table.json"
        table.write_text(json.dumps({"dBits": 2, "mBits": 2, "succ": ["0b01", "0b10", "0b10", "0b11"], "cost": [0, 1, 2, 0]}))
        assert main(["walk", str(table)]) == EXIT_SINK
        assert json.loads(capsys.readouterr().out) == {"tag": "UF1", "nodes": ["1"]}

    def test_zero_fixed_is_bad_input(self, tmp_path, capsys):
        table = tmp_path / "table.json"
        table.write_text(json.dumps({"dBits": 1, "mBits": 1, "succ": ["0", "1"], "cost": [0, 0]}))
        assert main(["walk", str(table)]) == EXIT_BAD_INPUT
        assert capsys.readouterr().err.startswith("error:")

    def test_table_guard(self, figure4_path, tmp_path, capsys):
        assert main(["reduce", figure4_path, "--table", str(tmp_path / "t.json"), "-o", str(tmp_path / "m")]) == EXIT_BAD_INPUT
        assert "table guard" in capsys.readouterr().err
