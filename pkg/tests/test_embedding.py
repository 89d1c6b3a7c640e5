import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skgrec.embedding import (
    VectorStoreError,
    compose,
    load_vectors,
    save_vectors,
    stub_encode,
    sum_pool,
)
from skgrec.graph import TopType


class TestSumPool:
    def test_empty_is_zero(self):
        v = sum_pool([], dim=5)
        assert v.shape == (5,) and not v.any()

    def test_elementwise_sum(self):
        out = sum_pool([np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        assert np.array_equal(out, np.array([4.0, 6.0], dtype=np.float32))

    def test_permutation_invariant(self, rng):
        vecs = [rng.standard_normal(8).astype(np.float32) for _ in range(5)]
        a = sum_pool(vecs)
        b = sum_pool(list(reversed(vecs)))
        assert np.array_equal(a, b)

    def test_mixed_dims_rejected(self):
        with pytest.raises(ValueError):
            sum_pool([np.zeros(3), np.zeros(4)])

    def test_linearity(self, rng):
        a = [rng.standard_normal(6).astype(np.float32) for _ in range(3)]
        b = [rng.standard_normal(6).astype(np.float32) for _ in range(2)]
        np.testing.assert_allclose(
            sum_pool(a + b), sum_pool(a) + sum_pool(b), rtol=1e-6
        )


class TestCompose:
    def test_ordering_with_empty_pools(self):
        vs = compose(
            "p",
            np.array([1.0, 0.0]),
            {TopType.TASK: [np.array([0.0, 1.0])]},
            entity_dim=2,
        )
        assert np.array_equal(vs.p_g, np.array([0, 1, 0, 0, 0, 0, 1, 0], dtype=np.float32))
        assert np.array_equal(vs.p_tm, np.array([0, 1, 0, 0, 1, 0], dtype=np.float32))
        assert np.array_equal(vs.p_t, np.array([0, 1, 1, 0], dtype=np.float32))

    def test_default_dims(self):
        vs = compose("p", np.zeros(768), {}, entity_dim=1536)
        assert vs.p_g.shape == (5376,)
        assert vs.p_t.shape == (2304,)
        assert vs.p_tm.shape == (3840,)

    def test_material_and_metric_pool_together(self):
        vs = compose(
            "p",
            np.zeros(2),
            {
                TopType.MATERIAL: [np.array([1.0, 0.0])],
                TopType.METRIC: [np.array([0.0, 2.0])],
            },
            entity_dim=2,
        )
        assert np.array_equal(vs.c_d, np.array([1.0, 2.0], dtype=np.float32))

    def test_slices_recover_pools(self, rng):
        ed, dd = 5, 3
        by_type = {
            TopType.TASK: [rng.standard_normal(ed).astype(np.float32)],
            TopType.METHOD: [rng.standard_normal(ed).astype(np.float32) for _ in range(2)],
        }
        vs = compose("p", rng.standard_normal(dd).astype(np.float32), by_type, entity_dim=ed)
        assert np.array_equal(vs.p_g[:ed], vs.c_t)
        assert np.array_equal(vs.p_g[ed:2 * ed], vs.c_m)
        assert np.array_equal(vs.p_g[2 * ed:3 * ed], vs.c_d)
        assert np.array_equal(vs.p_g[3 * ed:], vs.s_p)

    @settings(max_examples=20, deadline=None)
    @given(dd=st.integers(1, 16), ed=st.integers(1, 16))
    def test_dim_formulas(self, dd, ed):
        vs = compose("p", np.zeros(dd), {}, entity_dim=ed)
        assert vs.p_g.shape == (3 * ed + dd,)
        assert vs.p_t.shape == vs.p_m.shape == vs.p_d.shape == (ed + dd,)
        assert vs.p_tm.shape == vs.p_td.shape == (2 * ed + dd,)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            compose("p", np.zeros(2),
                    {TopType.TASK: [np.zeros(3)], TopType.METHOD: [np.zeros(4)]},
                    entity_dim=3)


class TestStubEncode:
    def test_deterministic(self):
        a = stub_encode("hello", 32, seed=7)
        b = stub_encode("hello", 32, seed=7)
        assert np.array_equal(a, b)

    def test_unit_norm(self):
        for text in ("a", "b", "some longer text"):
            v = stub_encode(text, 64, seed=0)
            assert abs(np.linalg.norm(v) - 1.0) < 1e-6

    def test_distinct_texts_differ(self):
        a = stub_encode("a", 64, seed=0)
        b = stub_encode("b", 64, seed=0)
        assert float(np.dot(a, b)) < 0.9

    def test_seed_changes_vector(self):
        assert not np.array_equal(stub_encode("a", 16, 0), stub_encode("a", 16, 1))

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            stub_encode("x", 0)


class TestVectorStore:
    def test_round_trip(self, tmp_path, rng):
        vecs = {
            f"id{i}": rng.standard_normal(12).astype(np.float32) for i in range(9)
        }
        vecs["unicode → id"] = rng.standard_normal(12).astype(np.float32)
        path = tmp_path / "v.evec"
        save_vectors(vecs, str(path), dim=12)
        back = load_vectors(str(path))
        assert set(back) == set(vecs)
        for k in vecs:
            assert np.array_equal(back[k], vecs[k])

    def test_empty_store(self, tmp_path):
        path = tmp_path / "e.evec"
        save_vectors({}, str(path), dim=768)
        assert load_vectors(str(path)) == {}

    def test_truncated_record(self, tmp_path):
        path = tmp_path / "t.evec"
        save_vectors({"a": np.zeros(768, dtype=np.float32)}, str(path), dim=768)
        data = path.read_bytes()
        path.write_bytes(data[:-10])
        with pytest.raises(VectorStoreError, match="truncated"):
            load_vectors(str(path))

    def test_wrong_dim_record_rejected_on_write(self, tmp_path):
        with pytest.raises(VectorStoreError):
            save_vectors({"a": np.zeros(4, dtype=np.float32)},
                         str(tmp_path / "w.evec"), dim=768)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "b.evec"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(VectorStoreError, match="magic"):
            load_vectors(str(path))
