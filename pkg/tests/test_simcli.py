"""Test suite for the pocmem command line."""

import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from deformation import AuditReport, MoveLog
from observer_update import Observer
from scenarios import square
from simcli import EXIT_CODES, cli
from simulation import SimulationResult

COMPASS = {"alphabet": ["n", "e", "s", "w"], "relations": ["n < s*", "e < w*"]}
SQUARE = {"alphabet": ["a", "b"]}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner):
    """Run the CLI with a list of arguments."""

    def _invoke(*args, **kwargs):
        return runner.invoke(cli, [str(a) for a in args], **kwargs)

    return _invoke


def _lines(path):
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle]


# ============================================================================
# validate
# ============================================================================


@pytest.mark.cli
class TestValidateCommand:
    """Test suite for `pocmem validate`."""

    def test_valid_file(self, invoke, write_json):
        result = invoke("validate", write_json("p.json", COMPASS))
        assert result.exit_code == 0
        assert "relation" in result.output

    def test_inconsistent_file(self, invoke, write_json):
        source = write_json("p.json", {"alphabet": ["a"], "relations": ["a < a*"]})
        result = invoke("validate", source)
        assert result.exit_code == EXIT_CODES["VALIDATION_FAILED"] == 1
        assert "error:" in result.output

    def test_missing_file(self, invoke, tmp_path):
        result = invoke("validate", tmp_path / "absent.json")
        assert result.exit_code == 2

    def test_malformed_file(self, invoke, write_json):
        result = invoke("validate", write_json("p.json", "{not json"))
        assert result.exit_code == 2
        assert "line 1" in result.output


# ============================================================================
# dual
# ============================================================================


@pytest.mark.cli
class TestDualCommand:
    """Test suite for `pocmem dual`."""

    def test_dot_to_file(self, invoke, write_json, tmp_path):
        out = tmp_path / "g.dot"
        result = invoke("dual", write_json("p.json", COMPASS), "-o", out)
        assert result.exit_code == 0
        text = out.read_text(encoding="utf-8")
        assert text.startswith("graph dual {")
        assert text.count(" -- ") == 12

    def test_json_to_file(self, invoke, write_json, tmp_path):
        out = tmp_path / "g.json"
        source = write_json("p.json", {"alphabet": ["a", "b", "c"]})
        result = invoke("dual", source, "--format", "json", "-o", out)
        assert result.exit_code == 0
        document = json.loads(out.read_text(encoding="utf-8"))
        assert len(document["vertices"]) == 8
        assert len(document["edges"]) == 12

    def test_dot_to_stdout(self, invoke, write_json):
        result = invoke("dual", write_json("p.json", SQUARE))
        assert result.exit_code == 0
        assert result.output.count(" -- ") == 4

    def test_pompom_is_a_star(self, invoke, write_json):
        pompom3 = {"alphabet": ["a", "b", "c"], "relations": ["a < b*", "a < c*", "b < c*"]}
        result = invoke("dual", write_json("p.json", pompom3))
        assert result.exit_code == 0
        assert result.output.count('[label="{') == 4
        assert result.output.count(" -- ") == 3

    def test_json_halfspaces(self, invoke, write_json, tmp_path):
        out = tmp_path / "g.json"
        invoke("dual", write_json("p.json", SQUARE), "--format", "json", "-o", out)
        document = json.loads(out.read_text(encoding="utf-8"))
        assert sorted(document["halfspaces"]) == ["a", "b"]
        assert all(len(pair) == 2 for pair in document["edges"])

    def test_unknown_format_is_a_usage_error(self, invoke, write_json):
        result = invoke("dual", write_json("p.json", SQUARE), "--format", "svg")
        assert result.exit_code == 2

    @pytest.mark.config
    def test_size_guard(self, invoke, write_json):
        result = invoke("dual", write_json("p.json", COMPASS), env={"POCMEM_MAX_TAGS": "2"})
        assert result.exit_code == EXIT_CODES["SIZE_GUARD"] == 3


# ============================================================================
# simulate
# ============================================================================


@pytest.mark.cli
@pytest.mark.integration
class TestSimulateCommand:
    """Test suite for `pocmem simulate`."""

    @pytest.fixture
    def scenario_file(self, write_json):
        document = {"builtin": {"name": "compass", "params": [30, 72]}, "steps": 8}
        return write_json("s.json", document)

    def test_trace_file(self, invoke, scenario_file, tmp_path):
        trace = tmp_path / "trace.jsonl"
        result = invoke(
            "simulate", scenario_file, "--seed", 4, "--threshold", 0.05, "--trace", trace
        )
        assert result.exit_code == 0
        records = _lines(trace)
        assert records[0]["type"] == "header"
        assert records[0]["seed"] == 4
        assert records[-1]["type"] == "final"
        assert sum(1 for r in records if r["type"] == "step") == 8

    def test_same_seed_same_bytes(self, invoke, scenario_file, tmp_path):
        first, second = tmp_path / "1.jsonl", tmp_path / "2.jsonl"
        invoke("simulate", scenario_file, "--seed", 1, "--trace", first)
        invoke("simulate", scenario_file, "--seed", 1, "--trace", second)
        assert first.read_bytes() == second.read_bytes()

    def test_budget_option(self, invoke, scenario_file, tmp_path):
        trace = tmp_path / "trace.jsonl"
        result = invoke("simulate", scenario_file, "--budget", "charge:0.5,0.1", "--trace", trace)
        assert result.exit_code == 0
        assert _lines(trace)[0]["budget"] == "charge:0.5,0.1"

    def test_compass_north_then_south(self, invoke, write_json, tmp_path):
        document = {
            "builtin": {"name": "compass", "params": [60]},
            "stream": ["n", "s"],
            "epsilon": ["n*", "e*", "s*", "w*"],
        }
        trace = tmp_path / "trace.jsonl"
        result = invoke("simulate", write_json("s.json", document), "--trace", trace)
        assert result.exit_code == 0
        final = _lines(trace)[-1]
        assert set(final["epsilon"]) == {"s", "n*", "e*", "w*"}
        assert final["moves"] == 0
        assert sum(Fraction(str(w)) for w in final["p"].values()) == 1

    @pytest.mark.parametrize(
        "document, code",
        [
            ({"builtin": {"name": "grid", "params": [2]}}, 2),
            ({"builtin": {"name": "compass"}, "steps": "x"}, 2),
            ({"builtin": {"name": "compass"}, "seed": -1}, 1),
        ],
    )
    def test_bad_scenario_fields_exit_cleanly(self, invoke, write_json, document, code):
        result = invoke("simulate", write_json("s.json", document))
        assert result.exit_code == code
        assert isinstance(result.exception, SystemExit)
        assert "error:" in result.output

    def test_invalid_budget(self, invoke, scenario_file):
        result = invoke("simulate", scenario_file, "--budget", "lots")
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_failed_audit_still_writes_trace(self, invoke, mocker, write_json, tmp_path):
        observer = Observer.create(square())
        failed = SimulationResult(
            observer,
            MoveLog.start(observer),
            [{"type": "header"}, {"type": "final"}],
            AuditReport(False, 2, "weights drifted"),
        )
        mocker.patch("services.run_simulation", return_value=failed)
        trace = tmp_path / "trace.jsonl"
        scenario = write_json("s.json", {"pocset": SQUARE, "stream": ["a"]})
        result = invoke("simulate", scenario, "--trace", trace)
        assert result.exit_code == EXIT_CODES["AUDIT_FAILED"]
        assert [r["type"] for r in _lines(trace)] == ["header", "final"]


# ============================================================================
# degenerate and expand
# ============================================================================


@pytest.mark.cli
class TestDeformationCommands:
    """Test suite for `pocmem degenerate` and `pocmem expand`."""

    def test_degenerate_writes_pocset_and_retraction(self, invoke, write_json, tmp_path):
        out, retraction = tmp_path / "p.json", tmp_path / "r.json"
        source = write_json("pp.json", {"alphabet": ["a", "b"], "relations": [["a", "b*"]]})
        result = invoke("degenerate", source, "a*", "b*", "-o", out, "--retraction", retraction)
        assert result.exit_code == 0
        assert json.loads(out.read_text(encoding="utf-8")) == {"alphabet": ["a"], "relations": []}
        assert json.loads(retraction.read_text(encoding="utf-8"))["merges"] == {"b": "a*"}

    def test_empty_corner_note(self, invoke, write_json, tmp_path):
        out = tmp_path / "p.json"
        result = invoke("degenerate", write_json("c.json", COMPASS), "n", "s", "-o", out)
        assert result.exit_code == 0
        assert "note:" in result.output
        assert len(json.loads(out.read_text(encoding="utf-8"))["relations"]) == 2

    def test_degeneration_failure(self, invoke, write_json):
        source = write_json("p.json", {"alphabet": ["a", "b"], "relations": ["a < b"]})
        result = invoke("degenerate", source, "a", "b")
        assert result.exit_code == EXIT_CODES["DEGENERATION_FAILED"]

    def test_expand_tag(self, invoke, write_json, tmp_path):
        out = tmp_path / "q.json"
        result = invoke("expand", write_json("p.json", SQUARE), "--tag", "c", "-o", out)
        assert result.exit_code == 0
        assert json.loads(out.read_text(encoding="utf-8"))["alphabet"] == ["a", "b", "c"]

    def test_expand_relax(self, invoke, write_json, tmp_path):
        out = tmp_path / "q.json"
        source = write_json("p.json", {"alphabet": ["a", "b"], "relations": ["a < b"]})
        result = invoke("expand", source, "--relax", "a", "b", "-o", out)
        assert result.exit_code == 0
        assert json.loads(out.read_text(encoding="utf-8"))["relations"] == []

    @pytest.mark.parametrize("extra", [[], ["--tag", "c", "--relax", "a", "b"]])
    def test_expand_needs_one_change(self, invoke, write_json, extra):
        result = invoke("expand", write_json("p.json", SQUARE), *extra)
        assert result.exit_code == EXIT_CODES["INVALID_ARGUMENT"]


# ============================================================================
# scenario-gen
# ============================================================================


@pytest.mark.cli
class TestScenarioGenCommand:
    """Test suite for `pocmem scenario-gen`."""

    def test_compass(self, invoke, tmp_path):
        out = tmp_path / "compass.json"
        result = invoke("scenario-gen", "compass", 30, 72, "-o", out)
        assert result.exit_code == 0
        document = json.loads(out.read_text(encoding="utf-8"))
        assert document["atoms"] == 72
        assert len(document["sensors"]["n"]) == 12

    def test_random_with_seed(self, invoke, tmp_path):
        first, second = tmp_path / "1.json", tmp_path / "2.json"
        invoke("scenario-gen", "random", 4, 0.5, "--seed", 3, "-o", first)
        invoke("scenario-gen", "random", 4, 0.5, "--seed", 3, "-o", second)
        assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")

    def test_generated_file_validates(self, invoke, tmp_path):
        out = tmp_path / "cube.json"
        invoke("scenario-gen", "cube", 3, "-o", out)
        assert invoke("validate", out).exit_code == 0

    def test_unknown_name(self, invoke):
        result = invoke("scenario-gen", "maze")
        assert result.exit_code == 1
        assert "maze" in result.output

    def test_unwritable_output(self, invoke, tmp_path):
        result = invoke("scenario-gen", "square", "-o", tmp_path / "missing" / "out.json")
        assert result.exit_code == EXIT_CODES["IO_ERROR"]


@pytest.mark.cli
def test_log_level_option(invoke, write_json):
    result = invoke("--log-level", "debug", "dual", write_json("p.json", SQUARE))
    assert result.exit_code == 0
