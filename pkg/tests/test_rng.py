import numba
import numpy as np
import pytest

from percolab import rng
from percolab.core import sample_config
from percolab.lattice import BoxSpec, build_box

# first outputs of the reference splitmix64.c seeded with 1234567
SPLITMIX_REFERENCE = [6457827717110365317, 3203168211198807973, 9817491932198370423,
                      4593380528125082431, 16408922859458223821]


def test_splitmix_reference_sequence():
    assert rng.splitmix64_py(1234567, 5) == SPLITMIX_REFERENCE
    assert rng.raw_draws(1234567, 5).tolist() == SPLITMIX_REFERENCE


@numba.njit
def _numba_uniforms(seed, sid, count):
    key = rng.stream_key(seed, sid)
    out = np.empty(count)
    for i in range(count):
        out[i] = rng.uniform(key, i)
    return out


@pytest.mark.parametrize("seed,sid", [(0, 0), (7, 3), (2**64 - 1, 2**63 + 5)])
def test_three_implementations_agree(seed, sid):
    stream = rng.RngStream(seed, sid)
    expected = [(rng.draw_py(stream.key, i) >> 11) * 2.0 ** -53 for i in range(50)]
    assert stream.uniforms(50).tolist() == expected
    assert _numba_uniforms(np.uint64(seed), np.uint64(sid), 50).tolist() == expected


def test_random_access_matches_sequence():
    s = rng.RngStream(42, 9)
    assert np.array_equal(s.uniforms(10, start=20), s.uniforms(30)[20:])


def test_uniform_range_and_moments():
    u = rng.RngStream(1, 1).uniforms(200_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)


def test_streams_differ_and_are_uncorrelated():
    a = rng.RngStream(5, 0).uniforms(100_000)
    b = rng.RngStream(5, 1).uniforms(100_000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 5 / np.sqrt(a.size)


def test_rejects_out_of_range_seed():
    with pytest.raises(ValueError):
        rng.RngStream(-1, 0)
    with pytest.raises(ValueError):
        rng.RngStream(0, 2**64)


def test_sample_config_edge_probabilities():
    g = build_box(BoxSpec(2, 3, 2))
    s = rng.RngStream(3, 0)
    assert sample_config(g, 0.0, s).open_count == 0
    assert sample_config(g, 1.0, s).open_count == g.bond_count
    with pytest.raises(ValueError):
        sample_config(g, 1.2, s)


def test_sample_config_binomial_law():
    g = build_box(BoxSpec(2, 200, 80))  # > 10^5 bonds
    assert g.bond_count > 100_000
    c = sample_config(g, 0.5, rng.RngStream(11, 0))
    M = g.bond_count
    assert abs(c.open_count - M / 2) < 5 * np.sqrt(M / 4)


def test_sample_config_deterministic():
    g = build_box(BoxSpec(2, 4, 3))
    assert sample_config(g, 0.3, rng.RngStream(8, 2)) == sample_config(g, 0.3, rng.RngStream(8, 2))
    assert sample_config(g, 0.3, rng.RngStream(8, 2)) != sample_config(g, 0.3, rng.RngStream(8, 3))
