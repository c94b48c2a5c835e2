import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zskreg.data import (
    DataError,
    SideInfoTable,
    ZeroShotDataset,
    load_dataset,
    save_dataset,
    slice_by_target,
)
from zskreg.datagen import SynthSpec, generate

from conftest import random_dataset


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadDataset:
    def test_minimal_two_targets(self, tmp_path):
        inst = _write(tmp_path / "instances.csv", "target,x1,y\nA,1.0,2.0\nB,3.0,4.0\n")
        side = _write(tmp_path / "sideinfo.csv", "target,s1\nA,0.5\nB,1.5\n")
        ds = load_dataset(inst, side)
        assert ds.n_rows == 2
        assert len(slice_by_target(ds)) == 2
        assert ds.target_ids == ("A", "B")
        np.testing.assert_array_equal(ds.labels, [2.0, 4.0])

    def test_unknown_target_id(self, tmp_path):
        inst = _write(tmp_path / "instances.csv", "target,x1,y\nC,1.0,2.0\n")
        side = _write(tmp_path / "sideinfo.csv", "target,s1\nA,0.5\n")
        with pytest.raises(DataError, match="unknown target id"):
            load_dataset(inst, side)

    def test_missing_file(self, tmp_path):
        side = _write(tmp_path / "sideinfo.csv", "target,s1\nA,0.5\n")
        with pytest.raises(DataError, match="missing file"):
            load_dataset(tmp_path / "nope.csv", side)

    def test_non_numeric_cell(self, tmp_path):
        inst = _write(tmp_path / "instances.csv", "target,x1,y\nA,oops,2.0\n")
        side = _write(tmp_path / "sideinfo.csv", "target,s1\nA,0.5\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_dataset(inst, side)

    def test_schema_mismatch(self, tmp_path):
        inst = _write(tmp_path / "instances.csv", "target,f1,y\nA,1.0,2.0\n")
        side = _write(tmp_path / "sideinfo.csv", "target,s1\nA,0.5\n")
        with pytest.raises(DataError, match="schema mismatch"):
            load_dataset(inst, side)

    def test_synthetic_round_trip_is_identity(self, tmp_path):
        ds = generate(SynthSpec(family="R", m_o=5, a_s=5, n_o=40, a_x=7, seed=11))
        save_dataset(ds, tmp_path / "d")
        back = load_dataset(tmp_path / "d" / "instances.csv", tmp_path / "d" / "sideinfo.csv")
        assert back == ds  # exact, not approximate: 17 significant digits


class TestSliceByTarget:
    def test_direct_partition(self):
        side = SideInfoTable([("A", [0.0]), ("B", [1.0])])
        ds = ZeroShotDataset(
            np.zeros((3, 1)), ["A", "A", "B"], np.zeros(3), side
        )
        slices = slice_by_target(ds)
        assert [s.target_id for s in slices] == ["A", "B"]
        np.testing.assert_array_equal(slices[0].rows, [0, 1])
        np.testing.assert_array_equal(slices[1].rows, [2])

    def test_single_target(self):
        side = SideInfoTable([("A", [0.0])])
        ds = ZeroShotDataset(np.zeros((4, 2)), ["A"] * 4, np.zeros(4), side)
        slices = slice_by_target(ds)
        assert len(slices) == 1
        np.testing.assert_array_equal(slices[0].rows, np.arange(4))

    def test_generated_r_10_5_slices(self):
        ds = generate(SynthSpec(family="R", m_o=10, a_s=5, seed=3))
        slices = slice_by_target(ds)
        assert len(slices) == 10
        assert all(len(s) == 500 for s in slices)
        assert ds.n_rows == 5000
        # instance matrix has a_x + 1 = 51 numeric columns counting the label
        assert ds.a_x + 1 == 51
        assert ds.side_info.matrix.shape == (10, 5)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6), rows=st.integers(1, 5))
    def test_slices_partition_all_rows(self, seed, m, rows):
        ds = random_dataset(np.random.default_rng(seed), m_targets=m, rows_per_target=rows)
        slices = slice_by_target(ds)
        seen = np.concatenate([s.rows for s in slices])
        assert len(seen) == len(set(seen.tolist())) == ds.n_rows
        assert set(seen.tolist()) == set(range(ds.n_rows))


class TestValidation:
    def test_non_finite_rejected(self):
        side = SideInfoTable([("A", [0.0])])
        with pytest.raises(DataError, match="non-finite"):
            ZeroShotDataset(np.array([[np.nan]]), ["A"], np.array([1.0]), side)

    def test_label_length_mismatch(self):
        side = SideInfoTable([("A", [0.0])])
        with pytest.raises(DataError):
            ZeroShotDataset(np.zeros((2, 1)), ["A", "A"], np.zeros(3), side)

    def test_duplicate_side_target(self):
        with pytest.raises(DataError, match="duplicate"):
            SideInfoTable([("A", [0.0]), ("A", [1.0])])

    def test_side_width_mismatch(self):
        with pytest.raises(DataError, match="width mismatch"):
            SideInfoTable([("A", [0.0]), ("B", [1.0, 2.0])])

    def test_arrays_are_frozen(self, toy_dataset):
        with pytest.raises(ValueError):
            toy_dataset.features[0, 0] = 99.0
        with pytest.raises(ValueError):
            toy_dataset.side_info.matrix[0, 0] = 99.0


class TestSideRows:
    def test_rows_follow_targets(self, toy_dataset):
        np.testing.assert_array_equal(
            toy_dataset.side_rows().ravel(), [0.0, 0.0, 2.0, 2.0]
        )

    def test_take_restricts(self, toy_dataset):
        sub = toy_dataset.take([0, 1], side_info=toy_dataset.side_info.restrict(["low"]))
        assert sub.n_rows == 2
        assert sub.side_info.target_ids == ("low",)
        with pytest.raises(DataError, match="unknown target id"):
            sub.side_info.vector("high")
