"""Deterministic randomness: golden vectors, shuffle laws, sampling."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provega.rng import SplitMix64, sample_indices, shuffled

# Reference outputs of the published SplitMix64 algorithm for seed 0,
# frozen up front. Any drift in constants or masking breaks these.
SEED0_OUTPUTS = (
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
    0x1B39896A51A8749B,
)


def _reference_stream(seed: int):
    """Independent transliteration of the published generator, kept separate
    from the implementation under test on purpose."""
    mask = (1 << 64) - 1
    state = seed & mask

    while True:
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        yield z ^ (z >> 31)


def _reference_shuffle(n: int, seed: int) -> list[int]:
    stream = _reference_stream(seed)
    out = list(range(n))
    for i in range(n - 1, 0, -1):
        j = next(stream) % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


class TestSplitMix64:
    def test_seed_zero_golden_vector(self):
        rng = SplitMix64(0)
        assert tuple(rng.next_u64() for _ in range(5)) == SEED0_OUTPUTS

    @given(st.integers(min_value=0, max_value=(1 << 64) - 1))
    @settings(max_examples=200)
    def test_matches_reference_for_any_seed(self, seed):
        rng = SplitMix64(seed)
        stream = _reference_stream(seed)
        assert [rng.next_u64() for _ in range(8)] == [next(stream) for _ in range(8)]

    def test_seed_is_masked_to_64_bits(self):
        assert SplitMix64(1 << 64).next_u64() == SplitMix64(0).next_u64()

    def test_next_below_is_modulo_of_next_u64(self):
        a, b = SplitMix64(99), SplitMix64(99)
        for bound in (1, 2, 7, 1000, 1 << 40):
            assert a.next_below(bound) == b.next_u64() % bound

    def test_next_below_rejects_nonpositive_bounds(self):
        rng = SplitMix64(0)
        with pytest.raises(ValueError):
            rng.next_below(0)
        with pytest.raises(ValueError):
            rng.next_below(-3)

    def test_state_round_trip(self):
        rng = SplitMix64(1234)
        rng.next_u64()
        saved = rng.getstate()
        first = [rng.next_u64() for _ in range(4)]
        rng.setstate(saved)
        assert [rng.next_u64() for _ in range(4)] == first


class TestShuffle:
    def test_frozen_goldens(self):
        # Computed once from the reference transliteration and pinned.
        assert shuffled(10, 42) == [0, 9, 5, 8, 6, 4, 7, 2, 1, 3]
        assert shuffled(8, 7) == [1, 4, 5, 2, 6, 0, 3, 7]

    def test_degenerate_sizes(self):
        assert shuffled(0, 5) == []
        assert shuffled(1, 99) == [0]

    @given(st.integers(min_value=0, max_value=400),
           st.integers(min_value=0, max_value=(1 << 64) - 1))
    @settings(max_examples=150)
    def test_is_a_permutation_matching_the_reference(self, n, seed):
        result = shuffled(n, seed)
        assert sorted(result) == list(range(n))
        assert result == _reference_shuffle(n, seed)

    def test_deterministic_across_calls(self):
        assert shuffled(100, 7) == shuffled(100, 7)


class TestSampleIndices:
    def test_is_a_prefix_of_the_shuffle(self):
        assert sample_indices(10, 3, 42) == shuffled(10, 42)[:3]
        assert sample_indices(10, 10, 42) == shuffled(10, 42)

    def test_distinctness(self):
        picks = sample_indices(50, 20, 3)
        assert len(set(picks)) == 20
        assert all(0 <= p < 50 for p in picks)

    def test_oversampling_rejected(self):
        with pytest.raises(ValueError):
            sample_indices(3, 4, 0)
