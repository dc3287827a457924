import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import torch
from torch import nn

from src.data import apply_scaler
from src.errors import DataError, TrainingDivergedError
from src.evaluation import (
    R2Entry,
    R2Report,
    StabilityRow,
    StabilityTable,
    collect_overlays,
    emit_report,
    evaluate,
    load_report,
    r2_score,
    read_report_csv,
    roughness,
    stability_experiment,
    summarize_thresholds,
)
from src.models import ModelSpec
from src.pipeline import run_partitions
from src.training import TrainConfig


class Replay(nn.Module):
    """Returns a fixed prediction block whatever the input."""

    def __init__(self, rows: np.ndarray):
        super().__init__()
        self.rows = torch.from_numpy(np.asarray(rows, dtype=np.float64))

    def forward(self, x):
        return self.rows.clone()


def quick_config(**kwargs) -> TrainConfig:
    return TrainConfig(**{"enforce_ranges": False, "epochs": 3, "learning_rate": 1e-3, **kwargs})


def test_r2_examples():
    target = np.array([1.0, 2.0, 3.0])
    assert r2_score(target, target) == 1.0
    assert r2_score(target, np.full(3, target.mean())) == 0.0
    assert r2_score(target, np.array([1.0, 2.0, 2.0])) == 0.5


def test_r2_undefined_for_constant_target():
    assert r2_score(np.full(4, 0.3), np.array([0.1, 0.2, 0.3, 0.4])) is None


def test_r2_rejects_bad_input():
    with pytest.raises(ValueError):
        r2_score(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        r2_score(np.arange(3.0), np.arange(4.0))


def test_r2_is_affine_invariant():
    rng = np.random.default_rng(0)
    target = rng.normal(size=50)
    pred = target + 0.3 * rng.normal(size=50)
    scale, offset = 3.7, -1.2
    assert r2_score(scale * target + offset, scale * pred + offset) == pytest.approx(r2_score(target, pred), abs=1e-10)


def test_r2_never_exceeds_one():
    rng = np.random.default_rng(1)
    for _ in range(20):
        assert r2_score(rng.normal(size=10), rng.normal(size=10)) <= 1.0


def test_roughness_of_linear_series_is_zero():
    assert roughness(np.arange(10.0)) == 0.0
    assert roughness(np.array([[0.0, 1.0, 0.0, 1.0]])) == pytest.approx(4.0)


def test_thresholds_are_nested():
    entries = [R2Entry(1.0, 2.6, r) for r in (0.99, 0.96, 0.93, 0.5, -2.0, None)]
    summary = summarize_thresholds(entries, (0.9, 0.95, 0.98))
    assert [summary[t]["count"] for t in (0.98, 0.95, 0.9)] == [1, 2, 3]
    assert summary[0.9]["fraction"] == 0.5


def test_report_rejects_scores_above_one():
    with pytest.raises(DataError):
        R2Report([R2Entry(1.0, 1.0, 1.5)])


def test_report_groups_by_amplitude():
    report = R2Report([R2Entry(1.0, 1.0, 0.99), R2Entry(2.0, 1.0, 0.5), R2Entry(1.0, 2.0, 0.91)])
    groups = report.by_amplitude()
    assert groups[1.0][0.98]["count"] == 1
    assert groups[2.0][0.9]["fraction"] == 1.0
    assert list(report.to_frame().columns) == ["omega", "amplitude", "r2"]


def test_evaluate_perfect_model(prepared_dataset):
    test = list(prepared_dataset.split.test)
    targets = apply_scaler(prepared_dataset.outputs(test), prepared_dataset.scaler, "output")
    report = evaluate(Replay(targets), prepared_dataset)
    assert len(report.entries) == len(test)
    assert all(e.r2 == pytest.approx(1.0) for e in report.entries)
    assert report.thresholds[0.98]["fraction"] == 1.0
    assert report.metadata["n_test"] == len(test)


def test_evaluate_constant_model(prepared_dataset):
    test = list(prepared_dataset.split.test)
    report = evaluate(Replay(np.full((len(test), 10), 0.5)), prepared_dataset, metadata={"model": "constant"})
    assert all(summary["count"] == 0 for summary in report.thresholds.values())
    assert report.metadata["model"] == "constant"
    assert report.metadata["roughness"] == 0.0


def test_evaluate_is_deterministic(prepared_dataset):
    test = list(prepared_dataset.split.test)
    rows = np.random.default_rng(2).random((len(test), 10))
    assert evaluate(Replay(rows), prepared_dataset).entries == evaluate(Replay(rows), prepared_dataset).entries


def test_evaluate_needs_test_samples(prepared_dataset, tiny_dataset):
    with pytest.raises(DataError, match="empty"):
        evaluate(Replay(np.zeros((0, 10))), prepared_dataset, test_indices=[])
    with pytest.raises(DataError, match="scaler"):
        evaluate(Replay(np.zeros((1, 10))), tiny_dataset)


def test_collect_overlays(prepared_dataset):
    rows = np.zeros((2, 10))
    overlays = collect_overlays(Replay(rows), prepared_dataset, [0, 5])
    assert len(overlays) == 2
    assert overlays[0].label.startswith("A=0.5")
    assert overlays[1].target.shape == (10,)
    assert collect_overlays(Replay(rows), prepared_dataset, []) == []


def test_stability_table_rejects_unnested_row():
    row = StabilityRow(seed=1, fractions={0.9: 0.5, 0.95: 0.6, 0.98: 0.1}, counts={0.9: 5, 0.95: 6, 0.98: 1}, n_test=10)
    with pytest.raises(DataError, match="nested"):
        StabilityTable([row])


def test_stability_frame_layout():
    row = StabilityRow(seed=3, fractions={0.9: 0.8, 0.95: 0.6, 0.98: 0.5}, counts={0.9: 8, 0.95: 6, 0.98: 5}, n_test=10)
    frame = StabilityTable([row]).to_frame()
    assert list(frame.columns) == ["seed", "R2>0.98", "R2>0.95", "R2>0.9"]
    assert frame.iloc[0].tolist() == [3, 50.0, 60.0, 80.0]


def test_run_partitions_logs_every_node(tiny_dataset):
    outcome = run_partitions(tiny_dataset, ModelSpec("kan", (10, 5, 10)), quick_config(), seeds=[4, 5], progress=False)
    assert [r.metadata["partition_seed"] for r in outcome["reports"]] == [4, 5]
    assert len(outcome["histories"]) == 2
    assert len(outcome["steps"]) == 2 * 5
    assert outcome["partition"].split.seed == 5
    assert outcome["partition"].scaler is not None


def test_run_partitions_can_reuse_split(prepared_dataset):
    outcome = run_partitions(
        prepared_dataset, ModelSpec("wavkan", (10, 4, 10)), quick_config(), seeds=[9], reuse_split=True, progress=False
    )
    assert outcome["partition"].split == prepared_dataset.split
    assert "reusing stored split" in outcome["steps"][0]


def test_run_partitions_tags_failing_seed(tiny_dataset):
    spec = ModelSpec("kan", (10, 5, 10))
    config = quick_config(learning_rate=1e300)
    with pytest.raises(TrainingDivergedError, match="Partition 2"):
        run_partitions(tiny_dataset, spec, config, seeds=[2], progress=False)


@pytest.mark.parametrize("n", [1, 2])
def test_stability_experiment_rows(tiny_dataset, n):
    table = stability_experiment(tiny_dataset, ModelSpec("kan", (10, 5, 10)), quick_config(), n_partitions=n, progress=False)
    assert [row.seed for row in table.rows] == list(range(1, n + 1))
    for row in table.rows:
        assert row.fractions[0.98] <= row.fractions[0.95] <= row.fractions[0.9]
        assert row.n_test == 2
    assert set(table.means()) == {0.9, 0.95, 0.98}


def test_stability_experiment_from_recipe(tiny_recipe):
    table = stability_experiment(tiny_recipe, ModelSpec("chain", (3, 2, 1)), quick_config(epochs=2), n_partitions=1, progress=False)
    assert len(table.rows) == 1
    assert table.metadata["model"]["kind"] == "chain"


def test_stability_experiment_rejects_bad_count(tiny_dataset):
    with pytest.raises(ValueError):
        stability_experiment(tiny_dataset, ModelSpec("kan", (10, 5, 10)), quick_config(), n_partitions=0)


@pytest.fixture
def sample_report():
    entries = [R2Entry(0.4, 2.6, 0.99, 0), R2Entry(1.3, 2.6, -0.4, 1), R2Entry(2.2, 2.6, None, 2), R2Entry(4.0, 2.6, 0.93, 3)]
    return R2Report(entries, metadata={"partition_seed": 1})


def test_csv_round_trip(tmp_path, sample_report):
    [path] = emit_report(sample_report, tmp_path / "report.csv")
    entries = read_report_csv(path)
    assert [(e.omega, e.amplitude, e.r2) for e in entries] == [
        (e.omega, e.amplitude, e.r2) for e in sample_report.entries
    ]


def test_json_counts_match_entries(tmp_path, sample_report):
    [path] = emit_report(sample_report, tmp_path / "report.json")
    data = json.loads(path.read_text())
    assert len(data["entries"]) == 4
    assert data["thresholds"]["0.9"]["count"] == 2
    assert data["thresholds"]["0.98"]["count"] == 1
    assert data["undefined"] == 1
    loaded = load_report(path)
    assert loaded.entries == sample_report.entries


def test_stability_table_json_round_trip(tmp_path):
    rows = [
        StabilityRow(seed=s, fractions={0.9: 0.9, 0.95: 0.8, 0.98: 0.5}, counts={0.9: 36, 0.95: 32, 0.98: 20}, n_test=40)
        for s in (1, 2)
    ]
    [path] = emit_report(StabilityTable(rows), tmp_path / "stability.json")
    loaded = load_report(path)
    assert isinstance(loaded, StabilityTable)
    assert loaded.rows == rows
    assert loaded.means()[0.9] == pytest.approx(0.9)


def test_unknown_format_and_missing_report(tmp_path, sample_report):
    with pytest.raises(DataError, match="format"):
        emit_report(sample_report, tmp_path / "report.xlsx")
    with pytest.raises(DataError, match="not found"):
        load_report(tmp_path / "absent.json")
    bad = tmp_path / "other.json"
    bad.write_text(json.dumps({"type": "something"}))
    with pytest.raises(DataError, match="unknown report type"):
        load_report(bad)


def test_svg_is_well_formed(tmp_path, sample_report, prepared_dataset):
    pytest.importorskip("kaleido")
    overlays = collect_overlays(Replay(np.zeros((1, 10))), prepared_dataset, [0])
    written = emit_report(sample_report, tmp_path / "report.svg", overlays=overlays)
    assert [p.name for p in written] == ["report.svg", "report_overlay_00.svg"]
    for path in written:
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")


def test_nan_scores_survive_csv(tmp_path):
    report = R2Report([R2Entry(1.0, 1.0, None)])
    [path] = emit_report(report, tmp_path / "r.csv")
    assert read_report_csv(path)[0].r2 is None
    assert math.isnan(float(path.read_text().splitlines()[1].split(",")[2] or "nan"))
