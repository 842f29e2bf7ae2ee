import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brownexp.rng import Seed, as_seed, site_uniform, site_uniforms

u64 = st.integers(0, 2**64 - 1)


@given(u64, u64)
def test_generator_reproducible(root, stream):
    s = Seed(root, stream)
    assert np.array_equal(s.generator().random(5), Seed(root, stream).generator().random(5))


def test_streams_and_substreams_differ():
    s = Seed(3)
    a = s.generator().random(8)
    assert not np.array_equal(a, s.generator(1).random(8))
    assert not np.array_equal(a, s.child(0).generator().random(8))
    assert s.child(0) != s.child(1)


def test_children_distinct():
    kids = {Seed(1).child(i) for i in range(10000)}
    assert len(kids) == 10000


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, True])
def test_seed_validation(bad):
    with pytest.raises(ValueError):
        Seed(bad)


def test_dict_roundtrip():
    s = Seed(12, 99)
    assert Seed.from_dict(s.to_dict()) == s
    assert as_seed(s.to_dict()) == s
    assert as_seed(7) == Seed(7)


def test_site_uniforms_order_free():
    v = site_uniforms(np.uint64(5), 1000)
    assert v[123] == site_uniform(np.uint64(5), 123)
    assert 0.0 <= v.min() and v.max() < 1.0
    assert abs(v.mean() - 0.5) < 0.05
