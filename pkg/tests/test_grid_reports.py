"""Evaluation grid orchestration and report artifacts.

Grid runs are seeded per cell from (master seed, llm, variant), so cells
are order-independent and reruns byte-identical; report files are checked
for format, determinism, and XML well-formedness.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from provdetect import (
    AnomalyScore,
    SyntheticConfig,
    Threshold,
    ValidationError,
    best_cell,
    evaluate_detector,
    generate_synthetic,
    run_grid,
)
from provdetect.evalviz import (
    EmbedSpec,
    emit_reports,
    heatmap_csv,
    heatmap_svg,
    loss_csv,
    loss_svg,
    roc_svg,
    scatter_csv,
    scatter_svg,
)
from provdetect.evalviz.grid import CellEval, GridResult, derive_seed
from provdetect.evalviz.metrics import roc_curve


@pytest.fixture(scope="module")
def grid_dataset():
    return generate_synthetic(SyntheticConfig(80, 6, 32, 0.06, 6, seed=5))


GRID_KW = dict(master_seed=7, epochs=15, hidden=(24,), latent_dim=8)


@pytest.fixture(scope="module")
def small_grid(grid_dataset):
    specs = [EmbedSpec("hash-32-s1", 32, seed=1), EmbedSpec("hash-48-s2", 48, seed=2)]
    return run_grid(grid_dataset, specs, ["ae", "vae", "dae"], **GRID_KW)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(1, "a", "b") == derive_seed(1, "a", "b")

    def test_distinct_parts_distinct_seeds(self):
        seeds = {
            derive_seed(m, llm, v)
            for m in (0, 1)
            for llm in ("hash", "minilm")
            for v in ("ae", "vae", "dae")
        }
        assert len(seeds) == 12

    def test_order_sensitive(self):
        assert derive_seed("a", "b") != derive_seed("b", "a")

    def test_64_bit_range(self):
        s = derive_seed(123, "x", "y")
        assert isinstance(s, int)
        assert 0 <= s < 2**64

    def test_boundary_not_confused_by_concatenation(self):
        assert derive_seed("ab", "c") != derive_seed("a", "bc")


class TestRunGrid:
    def test_all_cells_present_and_bounded(self, small_grid):
        assert small_grid.llm_ids == ("hash-32-s1", "hash-48-s2")
        assert small_grid.variants == ("ae", "vae", "dae")
        assert set(small_grid.cells) == {
            (llm, v)
            for llm in small_grid.llm_ids
            for v in small_grid.variants
        }
        assert not small_grid.errors
        for cell in small_grid.cells.values():
            assert 0.0 <= cell.auc <= 1.0
            assert cell.n_train > 0 and cell.n_eval > 0
            assert cell.n_attack == 6

    def test_rerun_identical(self, grid_dataset, small_grid, tmp_path):
        specs = [
            EmbedSpec("hash-32-s1", 32, seed=1),
            EmbedSpec("hash-48-s2", 48, seed=2),
        ]
        again = run_grid(grid_dataset, specs, ["ae", "vae", "dae"], **GRID_KW)
        assert again.cells == small_grid.cells
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        heatmap_csv(small_grid, a)
        heatmap_csv(again, b)
        assert a.read_bytes() == b.read_bytes()

    def test_jobs_parallel_matches_serial(self, grid_dataset, small_grid):
        specs = [
            EmbedSpec("hash-32-s1", 32, seed=1),
            EmbedSpec("hash-48-s2", 48, seed=2),
        ]
        parallel = run_grid(
            grid_dataset, specs, ["ae", "vae", "dae"], jobs=3, **GRID_KW
        )
        assert parallel.cells == small_grid.cells

    def test_master_seed_changes_cells(self, grid_dataset, small_grid):
        specs = [
            EmbedSpec("hash-32-s1", 32, seed=1),
            EmbedSpec("hash-48-s2", 48, seed=2),
        ]
        kw = dict(GRID_KW, master_seed=8)
        other = run_grid(grid_dataset, specs, ["ae", "vae", "dae"], **kw)
        assert other.cells != small_grid.cells

    def test_failed_column_recorded_and_rest_continue(self, grid_dataset):
        def factory(spec):
            if spec.model_id == "broken":
                raise RuntimeError("artifact missing")
            from provdetect import make_backend

            return make_backend(spec.model_id, spec.dim, seed=spec.seed)

        res = run_grid(
            grid_dataset,
            [EmbedSpec("broken", 16), EmbedSpec("hash-32-s1", 32, seed=1)],
            ["ae", "dae"],
            master_seed=0,
            epochs=5,
            hidden=(24,),
            latent_dim=8,
            backend_factory=factory,
        )
        assert set(res.errors) == {("broken", "ae"), ("broken", "dae")}
        assert all("artifact missing" in e for e in res.errors.values())
        assert set(res.cells) == {("hash-32-s1", "ae"), ("hash-32-s1", "dae")}
        assert np.isnan(res.auc_or_nan("broken", "ae"))

    def test_validation(self, grid_dataset):
        with pytest.raises(ValidationError):
            run_grid(grid_dataset, [])
        with pytest.raises(ValidationError):
            run_grid(grid_dataset, [EmbedSpec("hash", 16)], [])
        with pytest.raises(ValidationError):
            run_grid(grid_dataset, [EmbedSpec("hash", 16)], ["pca"])
        with pytest.raises(ValidationError):
            run_grid(
                grid_dataset,
                [EmbedSpec("hash", 16), EmbedSpec("hash", 32)],
            )


class TestEvaluateDetector:
    def test_counts_partition_the_rows(self, small_vectors, small_dataset):
        labels = small_dataset.labels()
        cell = evaluate_detector(
            small_vectors, labels, "ae", seed=3, epochs=10,
            hidden=(24,), latent_dim=4,
        )
        n_normal = sum(1 for v in labels.values() if v == "normal")
        n_attack = len(labels) - n_normal
        n_hold = cell.n_eval - n_attack
        assert cell.n_train + n_hold == n_normal
        assert cell.n_attack == n_attack
        assert n_hold == min(n_normal - 1, max(1, round(n_normal * 0.2)))
        assert 0.0 <= cell.auc <= 1.0

    def test_holdout_fraction_validated(self, small_vectors, small_dataset):
        labels = small_dataset.labels()
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(ValidationError):
                evaluate_detector(
                    small_vectors, labels, "ae", seed=0,
                    holdout_fraction=bad,
                )

    def test_needs_both_classes(self, small_vectors, small_dataset):
        labels = small_dataset.labels()
        all_normal = {k: "normal" for k in labels}
        with pytest.raises(ValidationError):
            evaluate_detector(small_vectors, all_normal, "ae", seed=0)
        all_attack = {k: "attack" for k in labels}
        with pytest.raises(ValidationError):
            evaluate_detector(small_vectors, all_attack, "ae", seed=0)


class TestBestCell:
    def _result(self, entries):
        llms = tuple(sorted({k[0] for k in entries}))
        variants = tuple(sorted({k[1] for k in entries}))
        res = GridResult(llm_ids=llms, variants=variants)
        for key, value in entries.items():
            res.cells[key] = CellEval(
                auc=value, n_train=10, n_eval=5, n_attack=2
            )
        return res

    def test_argmax(self, small_grid):
        llm, variant, value = best_cell(small_grid)
        assert value == max(c.auc for c in small_grid.cells.values())
        assert small_grid.cells[(llm, variant)].auc == value

    def test_tie_breaks_lexicographic(self):
        res = self._result(
            {
                ("b-llm", "ae"): 0.9,
                ("a-llm", "vae"): 0.9,
                ("a-llm", "ae"): 0.9,
                ("b-llm", "vae"): 0.5,
            }
        )
        assert best_cell(res) == ("a-llm", "ae", 0.9)

    def test_all_failed_raises(self):
        res = GridResult(llm_ids=("x",), variants=("ae",))
        with pytest.raises(ValidationError):
            best_cell(res)


class TestHeatmapArtifacts:
    def test_csv_format(self, small_grid, tmp_path):
        out = tmp_path / "heatmap.csv"
        heatmap_csv(small_grid, out)
        lines = out.read_text(encoding="utf-8").strip().split("\n")
        assert lines[0] == "variant,hash-32-s1,hash-48-s2"
        assert len(lines) == 1 + len(small_grid.variants)
        for line, variant in zip(lines[1:], small_grid.variants):
            parts = line.split(",")
            assert parts[0] == variant
            for val, llm in zip(parts[1:], small_grid.llm_ids):
                assert val == format(small_grid.cells[(llm, variant)].auc, ".4f")

    def test_csv_nan_for_failed(self, tmp_path):
        res = GridResult(llm_ids=("x", "y"), variants=("ae",))
        res.cells[("x", "ae")] = CellEval(0.75, 10, 5, 2)
        res.errors[("y", "ae")] = "boom"
        out = tmp_path / "heatmap.csv"
        heatmap_csv(res, out)
        assert out.read_text(encoding="utf-8").strip().split("\n")[1] == \
            "ae,0.7500,nan"

    def test_svg_well_formed_and_labelled(self, small_grid, tmp_path):
        out = tmp_path / "heatmap.svg"
        heatmap_svg(small_grid, out)
        text = out.read_text(encoding="utf-8")
        root = ET.fromstring(text)
        assert root.tag.endswith("svg")
        for llm in small_grid.llm_ids:
            assert llm in text
        for variant in small_grid.variants:
            assert f">{variant}<" in text

    def test_svg_marks_failed_cells(self, tmp_path):
        res = GridResult(llm_ids=("x",), variants=("ae",))
        res.errors[("x", "ae")] = "boom"
        out = tmp_path / "heatmap.svg"
        heatmap_svg(res, out)
        text = out.read_text(encoding="utf-8")
        assert "n/a" in text and "#cccccc" in text
        ET.fromstring(text)

    def test_deterministic_bytes(self, small_grid, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        heatmap_svg(small_grid, a)
        heatmap_svg(small_grid, b)
        assert a.read_bytes() == b.read_bytes()


class TestCurveArtifacts:
    @pytest.fixture()
    def curve(self, rng):
        scores = rng.standard_normal(40)
        labels = (rng.random(40) < 0.3).astype(int)
        labels[0], labels[1] = 0, 1
        return roc_curve(scores, labels)

    def test_roc_svg_well_formed(self, curve, tmp_path):
        out = tmp_path / "roc.svg"
        roc_svg(curve, out)
        text = out.read_text(encoding="utf-8")
        ET.fromstring(text)
        assert f"AUC = {curve.auc:.4f}" in text
        assert "polyline" in text

    def test_scatter_csv_rows(self, tmp_path):
        scores = [AnomalyScore("p1", 1.0), AnomalyScore("p2", 3.0)]
        thr = Threshold(tau=2.0, percentile=95.0, method="percentile",
                        source_count=2)
        out = tmp_path / "scatter.csv"
        scatter_csv(scores, thr, out)
        assert out.read_text(encoding="utf-8") == (
            "index,score,flag\n0,1.0,0\n1,3.0,1\n"
        )

    def test_scatter_flag_is_strict(self, tmp_path):
        # a score exactly at tau is not flagged
        scores = [AnomalyScore("p1", 2.0)]
        thr = Threshold(tau=2.0, percentile=95.0, method="percentile",
                        source_count=1)
        out = tmp_path / "scatter.csv"
        scatter_csv(scores, thr, out)
        assert out.read_text(encoding="utf-8").strip().split("\n")[1] == \
            "0,2.0,0"

    def test_scatter_svg_well_formed(self, rng, tmp_path):
        scores = [AnomalyScore(f"p{i}", float(r))
                  for i, r in enumerate(rng.random(25))]
        thr = Threshold(tau=0.5, percentile=95.0, method="percentile",
                        source_count=25)
        out = tmp_path / "scatter.svg"
        scatter_svg(scores, thr, out)
        text = out.read_text(encoding="utf-8")
        ET.fromstring(text)
        assert text.count("<circle") == 25
        assert "tau = 0.5" in text

    def test_scatter_svg_empty_rejected(self, tmp_path):
        thr = Threshold(tau=1.0, percentile=95.0, method="percentile",
                        source_count=1)
        with pytest.raises(ValidationError):
            scatter_svg([], thr, tmp_path / "x.svg")

    def test_loss_csv_round_trip(self, tmp_path):
        out = tmp_path / "loss.csv"
        loss_csv([0.5, 0.25], [0.6, 0.3], out)
        assert out.read_text(encoding="utf-8") == (
            "epoch,train_loss,val_loss\n1,0.5,0.6\n2,0.25,0.3\n"
        )

    def test_loss_csv_length_mismatch(self, tmp_path):
        with pytest.raises(ValidationError):
            loss_csv([0.5], [0.6, 0.3], tmp_path / "x.csv")

    def test_loss_svg_well_formed(self, tmp_path):
        out = tmp_path / "loss.svg"
        loss_svg([1.0, 0.5, 0.2], [1.1, 0.6, 0.3], out)
        text = out.read_text(encoding="utf-8")
        ET.fromstring(text)
        assert text.count("<polyline") == 2


class TestEmitReports:
    def test_writes_requested_pairs(self, small_grid, rng, tmp_path):
        scores = [AnomalyScore(f"p{i}", float(r))
                  for i, r in enumerate(rng.random(10))]
        thr = Threshold(tau=0.5, percentile=95.0, method="percentile",
                        source_count=10)
        written = emit_reports(
            tmp_path / "reports",
            grid=small_grid,
            scores=scores,
            threshold=thr,
            train_losses=[1.0, 0.5],
            val_losses=[1.2, 0.7],
        )
        names = sorted(p.name for p in written)
        assert names == [
            "heatmap.csv", "heatmap.svg", "loss.csv", "loss.svg",
            "scatter.csv", "scatter.svg",
        ]
        for p in written:
            assert p.exists() and p.stat().st_size > 0

    def test_roc_pair(self, rng, tmp_path):
        scores = rng.standard_normal(30)
        labels = (rng.random(30) < 0.4).astype(int)
        labels[0], labels[1] = 0, 1
        written = emit_reports(tmp_path, roc=roc_curve(scores, labels))
        assert sorted(p.name for p in written) == ["roc.csv", "roc.svg"]

    def test_nothing_to_write_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            emit_reports(tmp_path)

    def test_scores_need_threshold(self, tmp_path):
        with pytest.raises(ValidationError):
            emit_reports(tmp_path, scores=[AnomalyScore("p", 1.0)])
