import numpy as np
import pytest

from netfactor.errors import InputError, MatrixParseError
from netfactor.matrix_io import (
    load_labels,
    load_matrix,
    load_network,
    load_trace,
    save_labels,
    save_matrix,
    save_trace,
)


class TestMatrixFiles:
    def test_round_trip_is_exact(self, tmp_path):
        m = np.random.default_rng(0).random((5, 7))
        path = save_matrix(m, tmp_path / "m.mtx")
        np.testing.assert_array_equal(load_matrix(path), m)

    def test_only_nonzeros_are_written(self, tmp_path):
        path = save_matrix(np.array([[0.0, 1.5], [0.0, 0.0]]), tmp_path / "m.mtx")
        assert path.read_text(encoding="utf-8") == "2 2 1\n0 1 1.5\n"

    def test_empty_entry_list(self, tmp_path):
        path = tmp_path / "z.mtx"
        path.write_text("3 4 0\n", encoding="utf-8")
        np.testing.assert_array_equal(load_matrix(path), np.zeros((3, 4)))

    def test_comments_are_skipped(self, tmp_path):
        path = tmp_path / "c.mtx"
        path.write_text("% generated\n2 2 1\n% entry\n1 0 2.0\n", encoding="utf-8")
        np.testing.assert_array_equal(load_matrix(path), [[0.0, 0.0], [2.0, 0.0]])

    def test_index_out_of_range_names_the_line(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("2 2 2\n0 0 1.0\n2 1 1.0\n", encoding="utf-8")
        with pytest.raises(MatrixParseError) as info:
            load_matrix(path)
        assert info.value.line == 3
        assert "bad.mtx:3" in str(info.value)

    @pytest.mark.parametrize(
        "text",
        ["2 2\n", "a b c\n", "2 2 1\n0 0\n", "2 2 1\n0 0 x\n", "2 2 1\n0 0 nan\n", "2 2 2\n0 0 1.0\n"],
    )
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.mtx"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(MatrixParseError):
            load_matrix(path)

    def test_missing_file_names_the_path(self, tmp_path):
        with pytest.raises(InputError, match="nope.mtx"):
            load_matrix(tmp_path / "nope.mtx")


class TestNetworkFiles:
    def test_one_sided_entries_are_mirrored(self, tmp_path):
        path = tmp_path / "h.mtx"
        path.write_text("3 3 2\n0 1 2.0\n2 1 0.5\n", encoding="utf-8")
        h = load_network(path)
        np.testing.assert_array_equal(h.weights, [[0, 2, 0], [2, 0, 0.5], [0, 0.5, 0]])

    def test_conflicting_entries(self, tmp_path):
        path = tmp_path / "h.mtx"
        path.write_text("2 2 2\n0 1 2.0\n1 0 3.0\n", encoding="utf-8")
        with pytest.raises(InputError, match="conflicting"):
            load_network(path)

    def test_not_square(self, tmp_path):
        path = save_matrix(np.ones((2, 3)), tmp_path / "h.mtx")
        with pytest.raises(InputError, match="square"):
            load_network(path)


class TestLabelsAndTraces:
    def test_labels(self, tmp_path):
        path = save_labels([0, 2, 1, 1], tmp_path / "labels.txt")
        assert path.read_text(encoding="utf-8") == "0\n2\n1\n1\n"
        np.testing.assert_array_equal(load_labels(path), [0, 2, 1, 1])

    def test_bad_label(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("0\nx\n", encoding="utf-8")
        with pytest.raises(MatrixParseError) as info:
            load_labels(path)
        assert info.value.line == 2

    def test_trace(self, tmp_path):
        trace = [3.25, 1.0 / 3.0, 0.1]
        path = save_trace(trace, tmp_path / "trace.csv")
        assert path.read_text(encoding="utf-8").splitlines()[:2] == ["iteration,cost", "1,3.25"]
        assert load_trace(path) == trace
