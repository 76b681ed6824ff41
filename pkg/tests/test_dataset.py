"""Tests for CSV ingestion, splitting, balancing and standardization."""

import numpy as np
import pytest

from src.data import (
    Dataset, PlanRecord, SplitSpec, apply_standardizer, balance_training, fit_standardizer,
    load_csv, save_csv, split, split_train_val
)
from src.utils.errors import DataValidationError, EmptyInputError, SingleClassError


def _write(tmp_path, text, name='plans.csv'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def _dataset(n, unsafe=0, dim=2, seed=0):
    rng = np.random.default_rng(seed)
    y = np.concatenate([np.full(unsafe, 90.0), np.full(n - unsafe, 98.0)])
    return Dataset(rng.normal(size=(n, dim)), y, tuple(f'f{i}' for i in range(dim)))


class TestLoadCsv:

    def test_loads_features_in_file_order(self, tmp_path):
        path = _write(tmp_path, "PEM,gpr,PI\n1.5,97.2,0.3\n2.0,93.1,-0.1\n")
        dataset = load_csv(path)
        assert dataset.feature_names == ('PEM', 'PI')
        np.testing.assert_allclose(dataset.y, [97.2, 93.1])
        np.testing.assert_allclose(dataset.X, [[1.5, 0.3], [2.0, -0.1]])
        assert dataset.provenance == 'csv'

    def test_gpr_out_of_range_names_row(self, tmp_path):
        path = _write(tmp_path, "PEM,gpr\n1.0,97\n2.0,101\n")
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(path)
        assert excinfo.value.row == 2
        assert excinfo.value.column == 'gpr'

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = _write(tmp_path, "PEM,gpr\n1.0,97\nabc,96\n")
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(path)
        assert excinfo.value.row == 2
        assert excinfo.value.column == 'PEM'

    def test_empty_cell_rejected(self, tmp_path):
        path = _write(tmp_path, "PEM,gpr\n,97\n")
        with pytest.raises(DataValidationError):
            load_csv(path)

    def test_missing_label_column(self, tmp_path):
        path = _write(tmp_path, "PEM,PI\n1.0,2.0\n")
        with pytest.raises(DataValidationError, match='gpr'):
            load_csv(path)

    def test_missing_required_feature(self, tmp_path):
        path = _write(tmp_path, "PEM,gpr\n1.0,97\n")
        with pytest.raises(DataValidationError, match='PI'):
            load_csv(path, required_features=['PEM', 'PI'])

    def test_header_only_file_is_empty(self, tmp_path):
        path = _write(tmp_path, "PEM,gpr\n")
        with pytest.raises(EmptyInputError):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(str(tmp_path / 'absent.csv'))

    def test_save_then_load_preserves_values(self, tmp_path):
        dataset = _dataset(5, unsafe=2, seed=1)
        loaded = load_csv(save_csv(dataset, str(tmp_path / 'out' / 'plans.csv')))
        np.testing.assert_array_equal(loaded.X, dataset.X)
        np.testing.assert_array_equal(loaded.y, dataset.y)


class TestRecords:

    def test_record_rejects_gpr_above_100(self):
        with pytest.raises(DataValidationError):
            PlanRecord({'PEM': 1.0}, 100.5)

    def test_from_records_round_trip(self):
        records = [PlanRecord({'a': 1.0, 'b': 2.0}, 96.0), PlanRecord({'a': 3.0, 'b': 4.0}, 94.0)]
        dataset = Dataset.from_records(records)
        assert dataset.records == records

    def test_from_records_rejects_mismatched_features(self):
        records = [PlanRecord({'a': 1.0}, 96.0), PlanRecord({'b': 3.0}, 94.0)]
        with pytest.raises(DataValidationError):
            Dataset.from_records(records)


class TestSplit:

    def test_sizes_follow_fractions(self):
        train, val, test = split(_dataset(10), SplitSpec(0.6, 0.2, 0.2, seed=1))
        assert (len(train), len(val), len(test)) == (6, 2, 2)

    def test_same_seed_same_partition(self):
        dataset = _dataset(50)
        first = split(dataset, SplitSpec(seed=4))
        second = split(dataset, SplitSpec(seed=4))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.row_ids, b.row_ids)

    def test_parts_are_disjoint_and_cover_everything(self):
        parts = split(_dataset(37), SplitSpec(seed=2))
        ids = np.concatenate([p.row_ids for p in parts])
        assert sorted(ids) == list(range(37))

    def test_too_few_plans_for_three_parts(self):
        with pytest.raises(EmptyInputError):
            split(_dataset(3), SplitSpec())

    @pytest.mark.parametrize('fractions', [(0.5, 0.5, 0.0), (0.6, 0.3, 0.3)])
    def test_invalid_fractions(self, fractions):
        with pytest.raises(ValueError):
            SplitSpec(*fractions)

    def test_two_way_split_renormalizes(self):
        train, val = split_train_val(_dataset(100), SplitSpec(0.6, 0.2, 0.2, seed=0))
        assert (len(train), len(val)) == (75, 25)
        assert not set(train.row_ids) & set(val.row_ids)


class TestBalance:

    def test_minority_oversampled_to_majority(self):
        balanced = balance_training(_dataset(100, unsafe=10), seed=0)
        unsafe = balanced.unsafe_mask()
        assert int(unsafe.sum()) == 90
        assert int((~unsafe).sum()) == 90

    def test_copies_come_from_minority_rows(self):
        original = _dataset(100, unsafe=10)
        balanced = balance_training(original, seed=3)
        minority_ids = set(original.row_ids[original.unsafe_mask()])
        assert set(balanced.row_ids[100:]) <= minority_ids
        np.testing.assert_array_equal(balanced.row_ids[:100], original.row_ids)

    def test_balanced_input_returned_unchanged(self):
        dataset = _dataset(20, unsafe=10)
        assert balance_training(dataset) is dataset

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            balance_training(_dataset(20, unsafe=0))


class TestStandardizer:

    def test_training_statistics_give_zero_mean_unit_sd(self):
        rng = np.random.default_rng(0)
        dataset = Dataset(rng.normal(5.0, 3.0, size=(200, 3)), np.full(200, 97.0), ('a', 'b', 'c'))
        standardized = apply_standardizer(fit_standardizer(dataset), dataset)
        np.testing.assert_allclose(standardized.X.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(standardized.X.std(axis=0), 1.0, atol=1e-12)

    def test_constant_feature_dropped(self):
        X = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
        standardizer = fit_standardizer(Dataset(X, np.full(5, 97.0), ('a', 'const')))
        assert standardizer.feature_names == ('a',)
        assert standardizer.dropped == ('const',)

    def test_all_constant_features_rejected(self):
        with pytest.raises(DataValidationError):
            fit_standardizer(Dataset(np.ones((4, 2)), np.full(4, 97.0), ('a', 'b')))

    def test_inverse_restores_original_values(self):
        dataset = _dataset(30, unsafe=5, dim=3, seed=6)
        standardizer = fit_standardizer(dataset)
        restored = standardizer.inverse(standardizer.apply(dataset))
        np.testing.assert_allclose(restored.X, dataset.X, atol=1e-12)

    def test_other_splits_use_training_statistics(self):
        train = Dataset(np.array([[0.0], [2.0]]), np.array([97.0, 93.0]), ('a',))
        test = Dataset(np.array([[4.0]]), np.array([96.0]), ('a',))
        standardized = fit_standardizer(train).apply(test)
        np.testing.assert_allclose(standardized.X, [[3.0]])
