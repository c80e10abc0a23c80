"""
Tests for the command-line interface.
"""
import io
import logging

import pandas as pd
import pytest
from click.testing import CliRunner

from cli import cli
from splitting import analysis
from utils.output import COLUMNS


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_selection_handler", False):
            root.removeHandler(handler)
    root.setLevel(logging.WARNING)


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, ["--log-level", "ERROR", *args])

    return invoke


def read_csv(result):
    assert result.exit_code == 0, result.output
    return pd.read_csv(io.StringIO(result.output))


def test_analyze_asymptotic(run):
    frame = read_csv(run("analyze", "--pe", "1.088", "--q", "1"))
    assert list(frame.columns) == COLUMNS["analyze"]
    assert frame.loc[0, "analytic"] == pytest.approx(2.467, abs=1e-3)
    assert frame.loc[0, "difference"] < 1e-8


def test_analyze_two_nodes_both_forms(run):
    frame = read_csv(run("analyze", "--pe", "1.221", "--q", "2"))
    assert frame.loc[0, "analytic"] == pytest.approx(4.406, abs=2e-3)
    assert frame.loc[0, "markov"] == pytest.approx(frame.loc[0, "analytic"], abs=1e-5)


def test_analyze_finite(run):
    frame = read_csv(run("analyze", "--pe", "1.0", "--q", "1", "--n", "1"))
    assert frame.loc[0, "analytic"] == 1.0
    assert pd.isna(frame.loc[0, "markov"])


def test_analyze_invalid_load_names_flag(run):
    result = run("analyze", "--pe", "-1", "--q", "1")
    assert result.exit_code == 2
    assert "--pe" in result.output


def test_table(run):
    frame = read_csv(run("table", "--qmax", "1"))
    assert list(frame.columns) == COLUMNS["table"]
    assert len(frame) == 1
    assert frame.loc[0, "improvement_pct"] == 0.0


def test_table_json_matches_csv(run):
    csv_frame = read_csv(run("table", "--qmax", "3"))
    result = run("table", "--qmax", "3", "--format", "json")
    assert result.exit_code == 0, result.output
    json_frame = pd.read_json(io.StringIO(result.output), orient="records")
    assert list(json_frame.columns) == COLUMNS["table"]
    assert len(csv_frame) == len(json_frame) == 3
    for column in COLUMNS["table"]:
        assert list(json_frame[column]) == pytest.approx(list(csv_frame[column]), rel=1e-12)
    assert csv_frame.loc[2, "improvement_pct"] == pytest.approx(12.3, abs=0.2)


def test_optimize(run):
    frame = read_csv(run("optimize", "--q", "2"))
    assert frame.loc[0, "pe_star"] == pytest.approx(1.221, abs=0.005)
    assert frame.loc[0, "greedy_gap_pct"] > 0


def test_optimize_degenerate_bracket(run):
    result = run("optimize", "--q", "1", "--bracket", "2.0", "1.0")
    assert result.exit_code == 2
    assert "--bracket" in result.output


def test_simulate(run):
    frame = read_csv(run("simulate", "--n", "10", "--q", "1", "--pe", "1.088", "--trials", "2000", "--seed", "7"))
    assert list(frame.columns) == COLUMNS["simulate"]
    assert frame.loc[0, "trials"] == 2000
    assert frame.loc[0, "seed"] == 7
    assert frame.loc[0, "mean"] == pytest.approx(2.467, abs=0.25)


def test_simulate_is_byte_identical_for_fixed_seed(run):
    args = ("simulate", "--n", "8", "--q", "2", "--pe", "1.2", "--trials", "1500", "--seed", "3")
    assert run(*args).output == run(*args).output


def test_simulate_discrete_metrics(run):
    frame = read_csv(run("simulate", "--pmf", "0.2,0.5,0.3", "--n", "20", "--q", "1", "--pe", "1.088",
                         "--trials", "2000"))
    assert frame.loc[0, "mean"] == pytest.approx(2.467, abs=0.25)


def test_simulate_too_many_selected(run):
    result = run("simulate", "--n", "2", "--q", "3", "--pe", "1.0", "--trials", "10")
    assert result.exit_code == 2
    assert "--q" in result.output


def test_simulate_bad_pmf(run):
    result = run("simulate", "--pmf", "0.5,0.4", "--n", "5", "--pe", "1.0", "--trials", "10")
    assert result.exit_code == 2
    assert "--pmf" in result.output


def test_trace(run):
    frame = read_csv(run("simulate", "--n", "2", "--q", "2", "--pe", "1.0", "--trace", "--seed", "1"))
    assert list(frame.columns) == COLUMNS["trace"]
    assert len(frame) >= 2
    assert list(frame["slot_index"]) == list(range(1, len(frame) + 1))
    assert frame["feedback"].iloc[-1] == "Success"
    assert frame["selected_count"].iloc[-1] == 2
    assert (frame["feedback"] == "Success").sum() == 2


def test_trace_on_raw_metrics(run):
    frame = read_csv(run("simulate", "--n", "6", "--q", "1", "--pe", "1.0", "--trace", "--model", "exponential"))
    assert frame["feedback"].iloc[-1] == "Success"
    assert (frame["feedback"] == "Success").sum() == 1


def test_sweep_with_bounds(run):
    frame = read_csv(run("sweep", "--pe-from", "0.6", "--pe-to", "1.0", "--pe-step", "0.2", "--q", "1",
                         "--bounds", "2.0"))
    assert list(frame.columns) == COLUMNS["sweep"]
    assert len(frame) == 3
    assert (frame["bound_upper"] >= frame["analytic"]).all()
    assert (frame["lower_eq2"] <= frame["analytic"] + 1e-5).all()
    assert frame["simulated"].isna().all()


def test_sweep_simulated(run):
    frame = read_csv(run("sweep", "--pe-from", "1.0", "--pe-to", "1.2", "--pe-step", "0.2", "--q", "2",
                         "--n", "20", "--trials", "1000"))
    assert len(frame) == 2
    assert frame["simulated"].notna().all()
    assert (frame["n"] == 20).all()


def test_sweep_asymptotic_and_simulated_together(run):
    frame = read_csv(run("sweep", "--pe-from", "1.0", "--pe-to", "1.2", "--pe-step", "0.2", "--q", "1",
                         "--n", "inf", "--n", "10", "--trials", "500"))
    assert len(frame) == 4
    asymptotic = frame[frame["n"].isna()]
    simulated = frame[frame["n"] == 10]
    assert len(asymptotic) == len(simulated) == 2
    assert asymptotic["simulated"].isna().all()
    assert simulated["simulated"].notna().all()
    assert asymptotic["analytic"].iloc[0] == pytest.approx(analysis.avg_slots_asym_recursive(1.0), rel=1e-5)


def test_sweep_rejects_unknown_node_count(run):
    result = run("sweep", "--n", "many")
    assert result.exit_code == 2


def test_sweep_empty_grid(run):
    result = run("sweep", "--pe-from", "1.0", "--pe-to", "0.5")
    assert result.exit_code != 0


def test_throughput(run):
    frame = read_csv(run("throughput", "--q", "1", "--q", "50"))
    assert list(frame.columns) == COLUMNS["throughput"]
    assert frame.loc[1, "throughput"] == pytest.approx(0.487, abs=0.01)


def test_output_file(run, tmp_path):
    target = tmp_path / "out" / "table.csv"
    result = run("table", "--qmax", "1", "--out", str(target))
    assert result.exit_code == 0, result.output
    assert result.output == ""
    assert target.read_text().startswith("q,pe_star,m_star,improvement_pct")
