"""Dataset parsing, union semantics, and the synthetic generator."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provdetect import (
    Aspect,
    AspectDataset,
    HostOs,
    ParseError,
    Scenario,
    SyntheticConfig,
    ValidationError,
    generate_synthetic,
    imbalance_ratio,
    load_dataset,
    save_dataset,
    union_aspects,
)


def make_ds(
    ids, attrs, cells, attacks=(), aspect=Aspect.PE,
    os=HostOs.LINUX, scenario=Scenario.PANDEX,
):
    return AspectDataset(
        aspect=aspect,
        os=os,
        scenario=scenario,
        attribute_names=tuple(attrs),
        process_ids=tuple(ids),
        matrix=np.asarray(cells, dtype=bool),
        attack_ids=frozenset(attacks),
    )


class TestLoadSave:
    def test_round_trip(self, tmp_path, small_dataset):
        m, l = tmp_path / "m.csv", tmp_path / "l.txt"
        save_dataset(small_dataset, m, l)
        back = load_dataset(
            m, l, aspect="PE", os="Linux", scenario="Pandex"
        )
        assert back.process_ids == small_dataset.process_ids
        assert back.attribute_names == small_dataset.attribute_names
        assert np.array_equal(back.matrix, small_dataset.matrix)
        assert back.attack_ids == small_dataset.attack_ids

    def test_bad_cell_reports_location(self, tmp_path):
        m = tmp_path / "m.csv"
        m.write_text("process_id,a,b\np1,0,1\np2,0,2\n")
        (tmp_path / "l.txt").write_text("")
        with pytest.raises(ParseError) as err:
            load_dataset(m, tmp_path / "l.txt", aspect="PE", os="Linux",
                         scenario="Pandex")
        assert "3" in str(err.value)  # line number of the bad row

    def test_non_binary_cell_rejected(self, tmp_path):
        m = tmp_path / "m.csv"
        m.write_text("process_id,a\np1,true\n")
        (tmp_path / "l.txt").write_text("")
        with pytest.raises(ParseError):
            load_dataset(m, tmp_path / "l.txt", aspect="PE", os="Linux",
                         scenario="Pandex")

    def test_empty_file(self, tmp_path):
        m = tmp_path / "m.csv"
        m.write_text("")
        (tmp_path / "l.txt").write_text("")
        with pytest.raises(ParseError):
            load_dataset(m, tmp_path / "l.txt", aspect="PE", os="Linux",
                         scenario="Pandex")

    def test_unknown_label_id_rejected(self, tmp_path):
        m = tmp_path / "m.csv"
        m.write_text("process_id,a\np1,0\n")
        lbl = tmp_path / "l.txt"
        lbl.write_text("ghost\n")
        with pytest.raises(ValidationError):
            load_dataset(m, lbl, aspect="PE", os="Linux", scenario="Pandex")

    def test_blank_label_lines_ignored(self, tmp_path):
        m = tmp_path / "m.csv"
        m.write_text("process_id,a\np1,1\np2,0\n")
        lbl = tmp_path / "l.txt"
        lbl.write_text("\np2\n\n")
        ds = load_dataset(m, lbl, aspect="PE", os="Linux", scenario="Pandex")
        assert ds.attack_ids == {"p2"}


class TestAspectDataset:
    def test_matrix_read_only(self):
        ds = make_ds(["p1"], ["a", "b"], [[1, 0]])
        with pytest.raises(ValueError):
            ds.matrix[0, 0] = False

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            make_ds(["p1", "p1"], ["a"], [[1], [0]])

    def test_attack_id_must_exist(self):
        with pytest.raises(ValidationError):
            make_ds(["p1"], ["a"], [[1]], attacks=["nope"])

    def test_label_vector(self):
        ds = make_ds(["p1", "p2", "p3"], ["a"], [[1], [0], [1]],
                     attacks=["p2"])
        assert ds.label_vector().tolist() == [0, 1, 0]
        assert ds.labels() == {"p1": "normal", "p2": "attack", "p3": "normal"}

    def test_imbalance_ratio(self):
        ds = make_ds([f"p{i}" for i in range(10)], ["a"],
                     [[0]] * 10, attacks=["p0", "p1"])
        assert imbalance_ratio(ds) == pytest.approx(0.2)
        ds2 = make_ds(["p1"], ["a"], [[0]])
        assert imbalance_ratio(ds2) == 0.0


class TestUnion:
    def test_brute_force_or_oracle(self, rng):
        # random parts with overlapping ids and attribute names
        all_ids = [f"p{i}" for i in range(12)]
        all_attrs = [f"a{i}" for i in range(9)]
        parts = []
        for aspect in (Aspect.PE, Aspect.PX, Aspect.PP):
            ids = sorted(
                rng.choice(all_ids, size=rng.integers(3, 10), replace=False)
            )
            attrs = sorted(
                rng.choice(all_attrs, size=rng.integers(2, 7), replace=False)
            )
            cells = rng.random((len(ids), len(attrs))) < 0.4
            attacks = [i for i in ids if rng.random() < 0.15]
            parts.append(make_ds(ids, attrs, cells, attacks, aspect=aspect))

        result = union_aspects(parts)

        # brute-force dict oracle over every (id, attr) cell
        truth: dict[tuple[str, str], bool] = {}
        attack_truth: set[str] = set()
        for p in parts:
            attack_truth |= set(p.attack_ids)
            for r, pid in enumerate(p.process_ids):
                for c, attr in enumerate(p.attribute_names):
                    key = (pid, attr)
                    truth[key] = truth.get(key, False) or bool(p.matrix[r, c])

        want_ids = sorted({pid for p in parts for pid in p.process_ids})
        want_attrs = sorted({a for p in parts for a in p.attribute_names})
        assert list(result.process_ids) == want_ids
        assert list(result.attribute_names) == want_attrs
        assert result.aspect is Aspect.PA
        assert result.attack_ids == attack_truth
        for r, pid in enumerate(result.process_ids):
            for c, attr in enumerate(result.attribute_names):
                assert result.matrix[r, c] == truth.get((pid, attr), False), (
                    f"cell ({pid}, {attr})"
                )

    def test_self_union_identity(self, small_dataset):
        # one part: normalization only (sorted rows/cols), cells preserved
        out = union_aspects([small_dataset])
        assert out.aspect is Aspect.PA
        assert sorted(out.process_ids) == list(out.process_ids)
        row = {p: i for i, p in enumerate(small_dataset.process_ids)}
        col = {a: j for j, a in enumerate(small_dataset.attribute_names)}
        for r, pid in enumerate(out.process_ids):
            for c, attr in enumerate(out.attribute_names):
                assert out.matrix[r, c] == small_dataset.matrix[row[pid], col[attr]]

    def test_commutative(self, rng):
        a = make_ds(["p1", "p2"], ["x", "y"], rng.random((2, 2)) < 0.5,
                    aspect=Aspect.PE)
        b = make_ds(["p2", "p3"], ["y", "z"], rng.random((2, 2)) < 0.5,
                    aspect=Aspect.PX)
        ab, ba = union_aspects([a, b]), union_aspects([b, a])
        assert ab.process_ids == ba.process_ids
        assert ab.attribute_names == ba.attribute_names
        assert np.array_equal(ab.matrix, ba.matrix)

    def test_mixed_os_rejected(self):
        a = make_ds(["p1"], ["x"], [[1]], aspect=Aspect.PE, os=HostOs.LINUX)
        b = make_ds(["p1"], ["y"], [[1]], aspect=Aspect.PX, os=HostOs.BSD)
        with pytest.raises(ValidationError):
            union_aspects([a, b])

    def test_repeated_aspect_rejected(self):
        a = make_ds(["p1"], ["x"], [[1]], aspect=Aspect.PE)
        b = make_ds(["p2"], ["y"], [[1]], aspect=Aspect.PE)
        with pytest.raises(ValidationError):
            union_aspects([a, b])


class TestSynthetic:
    def test_deterministic(self):
        cfg = SyntheticConfig(50, 5, 16, 0.1, 4, seed=9)
        a, b = generate_synthetic(cfg), generate_synthetic(cfg)
        assert a.process_ids == b.process_ids
        assert np.array_equal(a.matrix, b.matrix)
        assert a.attack_ids == b.attack_ids

    def test_shapes_and_labels(self):
        ds = generate_synthetic(SyntheticConfig(40, 4, 12, 0.05, 3, seed=1))
        assert ds.n_processes == 44
        assert ds.n_attributes == 12
        assert len(ds.attack_ids) == 4
        # attacks occupy the tail rows
        assert set(ds.process_ids[-4:]) == ds.attack_ids

    def test_no_attacks(self):
        ds = generate_synthetic(SyntheticConfig(10, 0, 8, 0.1, 2, seed=2))
        assert ds.attack_ids == frozenset()
        assert set(ds.labels().values()) == {"normal"}

    def test_attack_rows_denser(self):
        # spec example: attack rows have strictly higher mean row-sum
        ds = generate_synthetic(SyntheticConfig(1000, 5, 64, 0.05, 8, seed=3))
        sums = ds.matrix.sum(axis=1)
        labels = ds.label_vector().astype(bool)
        assert sums[labels].mean() > sums[~labels].mean()

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            SyntheticConfig(5, 6, 8, 0.1, 2, seed=0)  # attacks > normals
        with pytest.raises(ValidationError):
            SyntheticConfig(5, 1, 8, 1.5, 2, seed=0)  # bad density
        with pytest.raises(ValidationError):
            SyntheticConfig(5, 1, 2, 0.1, 3, seed=0)  # signature > attrs


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 8),
    a=st.integers(1, 6),
    seed=st.integers(0, 2**16),
    attack_count=st.integers(0, 3),
)
def test_round_trip_property(tmp_path_factory, n, a, seed, attack_count):
    rng = np.random.default_rng(seed)
    ids = tuple(f"proc{i}" for i in range(n))
    ds = AspectDataset(
        aspect=Aspect.PX,
        os=HostOs.WINDOWS,
        scenario=Scenario.BOVIA,
        attribute_names=tuple(f"attr{j}" for j in range(a)),
        process_ids=ids,
        matrix=rng.random((n, a)) < 0.5,
        attack_ids=frozenset(ids[: min(attack_count, n)]),
    )
    tmp = tmp_path_factory.mktemp("rt")
    save_dataset(ds, tmp / "m.csv", tmp / "l.txt")
    back = load_dataset(tmp / "m.csv", tmp / "l.txt", aspect="PX",
                        os="Windows", scenario="Bovia")
    assert back.process_ids == ds.process_ids
    assert back.attribute_names == ds.attribute_names
    assert np.array_equal(back.matrix, ds.matrix)
    assert back.attack_ids == ds.attack_ids
