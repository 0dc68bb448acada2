"""
Tests for QoS matrix IO, density splits and outlier filtering.
"""

import json

import numpy as np
import pytest

from src.data import (
    filter_outliers,
    generate_fixture,
    load_matrix,
    load_metadata,
    removal_count,
    save_matrix,
    save_metadata,
    save_split,
    split_by_density,
    train_size,
)
from src.models.qos import EntityKind, QosMatrix, SplitSpec
from src.utils.errors import ConfigError, DataError, ParseError, ValidationError


class TestLoadMatrix:
    """Matrix text and CSV parsing."""

    def test_sentinel_cells_are_dropped(self, tmp_path):
        path = tmp_path / "rt.txt"
        path.write_text("1.0 -1\n0.5 2.0\n")

        m = load_matrix(path)

        assert (m.n_users, m.n_services) == (2, 2)
        assert m.to_dict() == {(0, 0): 1.0, (1, 0): 0.5, (1, 1): 2.0}

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "rt.txt"
        path.write_text("1.0 2.0\n3.0\n")

        with pytest.raises(ParseError, match="line 2"):
            load_matrix(path)

    def test_negative_value_rejected(self, tmp_path):
        path = tmp_path / "rt.txt"
        path.write_text("1.0 -0.5\n")

        with pytest.raises(ValidationError):
            load_matrix(path)

    def test_empty_file_is_parse_error(self, tmp_path):
        path = tmp_path / "rt.txt"
        path.write_text("")

        with pytest.raises(ParseError):
            load_matrix(path)

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            load_matrix(tmp_path / "absent.txt")

    def test_csv_with_explicit_shape(self, tmp_path):
        path = tmp_path / "rt.csv"
        path.write_text("user,service,value\n0,1,0.25\n2,0,1.5\n")

        m = load_matrix(path, format="csv", shape=(4, 3))

        assert (m.n_users, m.n_services) == (4, 3)
        assert m.to_dict() == {(0, 1): 0.25, (2, 0): 1.5}

    @pytest.mark.parametrize("fmt", ["matrix-text", "csv"])
    def test_save_then_load_is_identity(self, tmp_path, fmt):
        matrix, _, _ = generate_fixture(n_users=6, n_services=9, density=0.6, seed=1)
        path = tmp_path / f"m.{fmt}"

        save_matrix(matrix, path, format=fmt)
        loaded = load_matrix(path, format=fmt)

        assert loaded.same_entries(matrix)

    @pytest.mark.parametrize("fmt", ["matrix-text", "csv"])
    def test_trailing_unobserved_entities_survive(self, tmp_path, fmt):
        matrix = QosMatrix.from_entries(4, 5, {(0, 0): 1.0, (1, 2): 0.5})
        path = tmp_path / f"m.{fmt}"

        save_matrix(matrix, path, format=fmt)
        loaded = load_matrix(path, format=fmt)

        assert (loaded.n_users, loaded.n_services) == (4, 5)
        assert loaded.same_entries(matrix)

    def test_csv_shape_line(self, tmp_path):
        path = tmp_path / "rt.csv"
        path.write_text("# shape 3 2\nuser,service,value\n0,1,0.5\n")

        m = load_matrix(path, format="csv")

        assert (m.n_users, m.n_services) == (3, 2)
        assert m.to_dict() == {(0, 1): 0.5}

    def test_csv_malformed_shape_line(self, tmp_path):
        path = tmp_path / "rt.csv"
        path.write_text("# shape three 2\nuser,service,value\n0,1,0.5\n")

        with pytest.raises(ParseError):
            load_matrix(path, format="csv")


class TestLoadMetadata:
    """Region interning."""

    def test_first_appearance_interning(self, tmp_path):
        path = tmp_path / "users.csv"
        path.write_text("index,region\n0,US\n1,DE\n2,US\n")

        table = load_metadata(path, EntityKind.USER)

        assert [m.region_index for m in table.entities] == [1, 2, 1]
        assert table.vocab_size == 3

    def test_blank_region_is_reserved_index(self, tmp_path):
        path = tmp_path / "users.csv"
        path.write_text("index,region\n0,\n1,FR\n")

        table = load_metadata(path, EntityKind.USER)

        assert table[0].region_index == 0
        assert table[1].region_index == 1

    def test_duplicate_index_rejected(self, tmp_path):
        path = tmp_path / "users.csv"
        path.write_text("index,region\n0,US\n0,DE\n")

        with pytest.raises(ValidationError, match="duplicate"):
            load_metadata(path, EntityKind.USER)

    def test_wsdream_layout(self, tmp_path):
        path = tmp_path / "userlist.txt"
        path.write_text(
            "[User ID]\t[IP Address]\t[Country]\n"
            "=========\t============\t=========\n"
            "0\t12.108.127.138\tUnited States\n"
            "1\t12.46.129.15\tJapan\n"
            "2\t122.1.115.91\tUnited States\n"
        )

        table = load_metadata(path, EntityKind.USER, fmt="wsdream")

        assert len(table) == 3
        assert table.vocabulary == ["", "United States", "Japan"]
        assert table.region_array(4).tolist() == [1, 2, 1, 0]

    def test_save_metadata_round_trip(self, tmp_path, fixture_data):
        _, user_meta, _ = fixture_data
        path = save_metadata(user_meta, tmp_path / "u.csv")

        loaded = load_metadata(path, EntityKind.USER)

        original = [user_meta.vocabulary[m.region_index] for m in user_meta.entities]
        reloaded = [loaded.vocabulary[m.region_index] for m in loaded.entities]
        assert reloaded == original


class TestSplitByDensity:
    """Seeded partition of observed entries."""

    @pytest.fixture
    def ten_entries(self) -> QosMatrix:
        return QosMatrix.from_dense(np.arange(1.0, 11.0).reshape(2, 5))

    def test_rounding(self, ten_entries):
        split = split_by_density(ten_entries, SplitSpec(density=0.2, seed=5))

        assert len(split.train) == 2
        assert len(split.test) == 8

    def test_round_half_up(self):
        assert train_size(5, 0.5) == 3
        assert train_size(10, 0.25) == 3

    def test_full_density_empties_test(self, ten_entries):
        split = split_by_density(ten_entries, SplitSpec(density=1.0, seed=5))

        assert len(split.test) == 0
        assert split.train.same_entries(ten_entries)

    @pytest.mark.parametrize("density", [0.0, -0.1, 1.5])
    def test_density_out_of_range(self, ten_entries, density):
        with pytest.raises(ConfigError):
            split_by_density(ten_entries, SplitSpec(density=density, seed=5))

    def test_empty_matrix(self):
        empty = QosMatrix.from_dense(np.full((2, 2), -1.0))

        with pytest.raises(DataError):
            split_by_density(empty, SplitSpec(density=0.5))

    @pytest.mark.parametrize("seed", [0, 1, 2**40])
    def test_partition_property(self, fixture_data, seed):
        matrix, _, _ = fixture_data
        split = split_by_density(matrix, SplitSpec(density=0.3, seed=seed))

        train, test = set(split.train.keys()), set(split.test.keys())
        assert train.isdisjoint(test)
        assert train | test == set(matrix.keys())
        merged = {**split.train.to_dict(), **split.test.to_dict()}
        assert merged == matrix.to_dict()

    def test_same_seed_same_split(self, fixture_data):
        matrix, _, _ = fixture_data
        a = split_by_density(matrix, SplitSpec(density=0.3, seed=9))
        b = split_by_density(matrix, SplitSpec(density=0.3, seed=9))
        c = split_by_density(matrix, SplitSpec(density=0.3, seed=10))

        assert a.train.same_entries(b.train)
        assert a.test.same_entries(b.test)
        assert not a.train.same_entries(c.train)

    def test_save_split_manifest(self, tmp_path, ten_entries):
        spec = SplitSpec(density=0.2, seed=5)
        split = split_by_density(ten_entries, spec)

        save_split(split, spec, tmp_path)

        manifest = json.loads((tmp_path / "split.json").read_text())
        assert manifest["seed"] == 5
        assert manifest["density"] == 0.2
        assert (tmp_path / "train.csv").read_text().startswith("user,service,value")
        assert len((tmp_path / "test.csv").read_text().strip().splitlines()) == 9


class TestFilterOutliers:
    """Robust per-service outlier removal."""

    def test_zero_fraction_is_identity(self, small_matrix):
        assert filter_outliers(small_matrix, 0.0).same_entries(small_matrix)

    def test_obvious_outlier_removed(self):
        test = QosMatrix.from_entries(
            5, 1, {(0, 0): 1.0, (1, 0): 1.0, (2, 0): 1.0, (3, 0): 1.0, (4, 0): 100.0}
        )

        kept = filter_outliers(test, 0.2)

        assert len(kept) == 4
        assert (4, 0) not in kept.to_dict()

    def test_ceiling_rule(self):
        test = QosMatrix.from_dense(np.arange(1.0, 9.0).reshape(2, 4))

        kept = filter_outliers(test, 0.1)

        assert len(test) - len(kept) == 1
        assert removal_count(30, 0.1) == 3

    @pytest.mark.parametrize("n_test,fraction,expected", [
        (5, 1e-12, 1),
        (1, 1e-10, 1),
        (0, 0.5, 0),
        (10, 0.0, 0),
        (10, 0.99, 10),
    ])
    def test_removal_count_edges(self, n_test, fraction, expected):
        assert removal_count(n_test, fraction) == expected

    def test_fraction_one_rejected(self, small_matrix):
        with pytest.raises(ConfigError):
            filter_outliers(small_matrix, 1.0)

    def test_statistics_come_from_reference(self):
        reference = QosMatrix.from_entries(4, 2, {
            (0, 0): 1.0, (1, 0): 1.1, (2, 0): 0.9,
            (0, 1): 5.0, (1, 1): 5.5, (2, 1): 4.5,
        })
        test = QosMatrix.from_entries(4, 2, {(3, 0): 4.0, (3, 1): 5.1})

        kept = filter_outliers(test, 0.3, reference=reference)

        # Service 0 median 1.0, IQR 0.1: 4.0 scores 30; service 1 scores 0.2.
        assert kept.to_dict() == {(3, 1): 5.1}

    def test_predictions_must_cover_test(self, small_matrix):
        partial = {k: 0.0 for k in small_matrix.keys()[1:]}

        with pytest.raises(ValidationError):
            filter_outliers(small_matrix, 0.1, predictions=partial)

    def test_never_invents_entries(self, fixture_data):
        matrix, _, _ = fixture_data

        kept = filter_outliers(matrix, 0.1)

        assert set(kept.keys()) <= set(matrix.keys())
        assert len(matrix) - len(kept) == removal_count(len(matrix), 0.1)
