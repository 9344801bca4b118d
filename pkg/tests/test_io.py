import numpy as np
import pytest

from bcdc import io as bio
from bcdc.core import CovariateSet, DataError
from bcdc.sampler import ChainTrace
from bcdc.simulate import block_labels, planted_connectivity, sample_sbm


class TestEdgeList:
    def test_round_trip(self, tmp_path):
        net = sample_sbm(block_labels([6, 6]), planted_connectivity(2, 0.6, 0.3), seed=1)
        path = tmp_path / "edges.txt"
        bio.write_edge_list(path, net)
        back = bio.read_edge_list(path, n=12)
        assert np.array_equal(back.adj, net.adj)

    def test_rejects_self_loop(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("1 2\n3 3\n")
        with pytest.raises(DataError):
            bio.read_edge_list(path)

    def test_rejects_duplicates_either_direction(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("1 2\n2 1\n")
        with pytest.raises(DataError):
            bio.read_edge_list(path)

    def test_rejects_bad_tokens(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("1 two\n")
        with pytest.raises(DataError):
            bio.read_edge_list(path)

    def test_rejects_id_beyond_declared_n(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("1 9\n")
        with pytest.raises(DataError):
            bio.read_edge_list(path, n=5)

    def test_mask_round_trip(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("1 2\n2 3\n")
        mask = bio.read_mask(path, n=4)
        assert mask[0, 1] and mask[1, 2] and mask[2, 1]
        assert not mask[0, 3]


class TestCovariates:
    def test_round_trip_mixed(self, tmp_path):
        rng = np.random.default_rng(0)
        x = CovariateSet(rng.standard_normal((5, 2)), rng.integers(0, 3, (5, 1)), (3,))
        path = tmp_path / "cov.csv"
        bio.write_covariates(path, x)
        types = bio.read_column_types(str(path) + ".types")
        back = bio.read_covariates(path, types)
        assert np.allclose(back.cont, x.cont)
        assert np.array_equal(back.cat, x.cat)
        assert back.arities == x.arities

    def test_rows_sorted_by_node_id(self, tmp_path):
        path = tmp_path / "cov.csv"
        path.write_text("node,a\n2,5.0\n1,3.0\n3,4.0\n")
        types = {"a": ("continuous", None)}
        x = bio.read_covariates(path, types)
        assert x.cont[:, 0].tolist() == [3.0, 5.0, 4.0]

    def test_rejects_incomplete_ids(self, tmp_path):
        path = tmp_path / "cov.csv"
        path.write_text("node,a\n1,1.0\n3,2.0\n")
        with pytest.raises(DataError):
            bio.read_covariates(path, {"a": ("continuous", None)})

    def test_rejects_codes_outside_arity(self, tmp_path):
        path = tmp_path / "cov.csv"
        path.write_text("node,c\n1,1\n2,4\n")
        with pytest.raises(DataError):
            bio.read_covariates(path, {"c": ("categorical", 3)})

    def test_rejects_missing_typed_column(self, tmp_path):
        path = tmp_path / "cov.csv"
        path.write_text("node,a\n1,1.0\n")
        with pytest.raises(DataError):
            bio.read_covariates(path, {"b": ("continuous", None)})

    def test_sidecar_parse_errors(self, tmp_path):
        path = tmp_path / "t.types"
        path.write_text("a,fancy\n")
        with pytest.raises(DataError):
            bio.read_column_types(path)


class TestLabelsAndTraces:
    def test_labels_round_trip(self, tmp_path):
        path = tmp_path / "labels.csv"
        bio.write_labels(path, [0, 2, 1, 1])
        assert bio.read_labels(path).tolist() == [0, 2, 1, 1]

    def test_labels_written_one_indexed(self, tmp_path):
        path = tmp_path / "labels.csv"
        bio.write_labels(path, [0, 1])
        assert path.read_text() == "node,label\n1,1\n2,2\n"

    def test_trace_round_trip(self, tmp_path):
        trace = ChainTrace(
            iteration=np.array([5, 6]),
            num_clusters=np.array([2, 1]),
            log_joint=np.array([-10.25, -9.75]),
            labels=np.array([[0, 1, 0], [0, 0, 0]]),
            config={},
        )
        path = tmp_path / "trace.csv"
        bio.write_trace(path, trace)
        back = bio.read_trace(path)
        assert np.array_equal(back.iteration, trace.iteration)
        assert np.array_equal(back.labels, trace.labels)
        assert np.allclose(back.log_joint, trace.log_joint)

    def test_metadata_round_trip(self, tmp_path):
        path = tmp_path / "meta.txt"
        bio.write_metadata(path, {"design": "mixed", "n": 100})
        back = bio.read_metadata(path)
        assert back == {"design": "mixed", "n": "100"}
