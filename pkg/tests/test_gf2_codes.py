import itertools

import numpy as np
import pytest

from src.codes.gf2_codes import (CORRECTED, UNCORRECTABLE, as_bits, double_decode, dual,
                                 encode_twice, erasure_decode, even_weight_code, from_generator, full_space_code,
                                 hamming_code, load_code_file, pack, parse_code_text, repetition_code,
                                 row_space_contains, syndrome_decode)
from src.utils.errors import AmbiguousErasure, ConfigError


@pytest.fixture(scope="module")
def hamming():
    return hamming_code(3)


def test_hamming_parameters(hamming):
    assert (hamming.n, hamming.k, hamming.distance, hamming.t) == (7, 4, 3, 1)
    assert not np.any(hamming.generator.astype(int) @ hamming.parity_check.T.astype(int) % 2)


def test_packed_syndromes_match_the_matrix_product(hamming):
    h = hamming.parity_check.astype(int)
    for word in itertools.product([0, 1], repeat=7):
        expected = h @ np.array(word) % 2
        assert hamming.syndrome(word).tolist() == expected.tolist()
        assert hamming.syndrome_key(word) == pack(expected)
    assert full_space_code(3).syndrome([1, 0, 1]).shape == (0,)


def test_dual_of_hamming_is_simplex_inside_hamming(hamming):
    simplex = dual(hamming)
    assert (simplex.n, simplex.k) == (7, 3)
    assert simplex.min_weight == 4
    assert row_space_contains(hamming.generator, simplex.generator)
    assert row_space_contains(dual(simplex).generator, hamming.generator)


def test_dual_of_repetition_is_even_weight():
    d = dual(repetition_code(3))
    assert d.k == 2
    assert all(int(w.sum()) % 2 == 0 for w in d.codewords)
    assert len(d.codewords) == 4


def test_dual_of_full_space_is_zero_code():
    d = dual(full_space_code(4))
    assert d.k == 0
    assert d.codewords.shape == (1, 4) and not d.codewords.any()


def test_declared_distance_is_checked():
    with pytest.raises(ConfigError, match="declared distance"):
        from_generator([[1, 1, 1]], dist=2)


@pytest.mark.parametrize("word, codeword, errors", [
    ("0000000", "0000000", ()),
    ("0100000", "0000000", (1,)),
])
def test_syndrome_decode_examples(hamming, word, codeword, errors):
    result = syndrome_decode(hamming, as_bits(word))
    assert result.status == CORRECTED
    assert np.array_equal(result.codeword, as_bits(codeword))
    assert result.errors == errors


def test_weight_two_error_decodes_to_some_nearby_codeword(hamming):
    word = as_bits("1100000")
    result = syndrome_decode(hamming, word)
    assert result.corrected
    assert hamming.contains(result.codeword)
    assert int((result.codeword ^ word).sum()) <= 1
    assert not np.array_equal(result.codeword, np.zeros(7, dtype=np.uint8))


def test_every_correctable_error_is_recovered_exactly(hamming):
    for c in hamming.codewords:
        for weight in range(hamming.t + 1):
            for support in itertools.combinations(range(7), weight):
                e = np.zeros(7, dtype=np.uint8)
                e[list(support)] = 1
                result = syndrome_decode(hamming, c ^ e)
                assert np.array_equal(result.codeword, c)
                assert result.errors == support


def test_uncorrectable_is_a_status():
    code = repetition_code(5)
    word = as_bits("11000")
    assert syndrome_decode(code, word).corrected
    even = even_weight_code(4)
    assert syndrome_decode(even, as_bits("1000")).status == UNCORRECTABLE


def test_erasure_decode_examples(hamming):
    word = as_bits("1010101")
    assert hamming.contains(word)
    marked = [-1, -1] + list(word[2:])
    assert np.array_equal(erasure_decode(hamming, marked).codeword, word)
    assert np.array_equal(erasure_decode(hamming, word).codeword, word)


def test_erasure_decode_is_identity_on_codewords(hamming):
    for c in hamming.codewords:
        for size in range(3):
            for erased in itertools.combinations(range(7), size):
                assert np.array_equal(erasure_decode(hamming, c, erased=erased).codeword, c)


def test_three_erasures_can_be_ambiguous(hamming):
    ambiguous = None
    for erased in itertools.combinations(range(7), 3):
        kept = [i for i in range(7) if i not in erased]
        zero_on_kept = [c for c in hamming.codewords if not c[kept].any()]
        if len(zero_on_kept) > 1:
            ambiguous = erased
            break
    assert ambiguous is not None
    with pytest.raises(AmbiguousErasure):
        erasure_decode(hamming, np.zeros(7, dtype=np.uint8), erased=ambiguous)


@pytest.mark.parametrize("bit", [0, 1])
def test_double_decode_of_clean_encoding(hamming, bit):
    words = encode_twice(hamming, bit, np.random.default_rng(bit))
    result = double_decode(hamming, words)
    assert result.value == bit
    assert result.block_errors == {} and result.first_level_errors == ()
    assert result.status == CORRECTED


def test_double_decode_localizes_block_error(hamming):
    words = encode_twice(hamming, 1, np.random.default_rng(3))
    words[2, 4] ^= 1
    result = double_decode(hamming, words)
    assert result.value == 1
    assert result.block_errors == {2: (4,)}
    assert result.first_level_errors == ()


def test_double_decode_reports_wrong_block_as_first_level_error(hamming):
    words = encode_twice(hamming, 0)
    flipped = next(c for c in hamming.codewords if int(c.sum()) == 3)
    words[4] = flipped
    result = double_decode(hamming, words)
    assert result.value == 0
    assert 4 in result.first_level_errors


def test_double_decode_miscorrects_beyond_t_at_outer_level(hamming):
    words = encode_twice(hamming, 0)
    ones = next(c for c in hamming.codewords if int(c.sum()) == 3)
    words[0] = ones
    words[1] = ones
    result = double_decode(hamming, words)
    assert result.status == CORRECTED
    assert result.first_level_errors == (2,)
    assert result.value == 1


def test_parse_code_text():
    code = parse_code_text("# hamming\n7 4 3\n1110000\n1001100\n0101010\n1101001\n")
    assert (code.n, code.k, code.distance) == (7, 4, 3)
    with pytest.raises(ConfigError, match="generator rows"):
        parse_code_text("3 1 3\n11\n")


def test_load_code_file(tmp_path):
    path = tmp_path / "rep3.code"
    path.write_text("# repetition\n3 1 3\n111\n")
    code = load_code_file(str(path))
    assert (code.n, code.k, code.distance) == (3, 1, 3)
