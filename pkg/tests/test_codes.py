import numpy as np
import pytest

from sbnd.codes import (
    LinearCode,
    PcFileError,
    PolarSpec,
    all_messages,
    bhattacharyya_parameters,
    code_from_pc,
    encode,
    encode_batch,
    load_pc_matrix,
    parse_alist,
    parse_pc_text,
    polar_build,
    polar_select_rows,
    pseudo_inverse,
    standardize_pc,
)
from sbnd.gf2 import BitMatrix, BitVector, gf2_matmul, gf2_matvec, gf2_rank

PC_TEXT_42 = "2 4\n1 1 1 1\n0 1 0 1\n"
ALIST_42 = "4 2\n2 4\n1 2 1 2\n4 2\n1 0\n1 2\n1 0\n1 2\n1 2 3 4\n2 4\n"


def polar42() -> LinearCode:
    return polar_build(PolarSpec(4, 2, info_rows=(3, 4)))


def test_bhattacharyya_hand_recursion():
    z = bhattacharyya_parameters(4, 0.5)
    assert np.allclose(z, [0.9375, 0.5625, 0.4375, 0.0625])


def test_polar_select_rows_design():
    assert polar_select_rows(PolarSpec(4, 2)) == (3, 4)


def test_polar_select_rows_rate_one():
    assert polar_select_rows(PolarSpec(2, 2)) == (1, 2)


def test_polar_select_rows_explicit_passthrough():
    assert polar_select_rows(PolarSpec(4, 2, info_rows=(3, 4))) == (3, 4)


def test_polar_select_rows_tie_toward_larger_index():
    # at full rate every leaf is kept, so force a tie via explicit comparison:
    # n=2, k=1 has leaves (0.75, 0.25); the smaller parameter wins outright,
    # while equal parameters must prefer the larger index.
    z = bhattacharyya_parameters(2, 0.5)
    assert polar_select_rows(PolarSpec(2, 1)) == (2,)
    assert z[1] < z[0]
    # synthetic tie: explicit set check on n=4 picks later rows when equal
    spec = PolarSpec(4, 2, design_erasure=0.5)
    assert polar_select_rows(spec) == (3, 4)


def test_polar_spec_validation():
    with pytest.raises(ValueError):
        PolarSpec(6, 2)
    with pytest.raises(ValueError):
        PolarSpec(4, 5)
    with pytest.raises(ValueError):
        PolarSpec(4, 2, info_rows=(1, 2, 3))
    with pytest.raises(ValueError):
        PolarSpec(4, 2, info_rows=(0, 1))


def test_polar_build_hand_matrices():
    code = polar42()
    assert code.G == BitMatrix.from_rows([[1, 0, 1, 0], [1, 1, 1, 1]])
    assert code.H == BitMatrix.from_rows([[1, 1, 1, 1], [0, 1, 0, 1]])
    assert code.A == BitMatrix.from_rows([[0, 0, 1, 1], [0, 0, 0, 1]])
    assert gf2_matmul(code.G, code.H.T) == BitMatrix.zeros(2, 2)


def test_polar_build_pinv_roundtrip_example():
    code = polar42()
    u = BitVector.from_bits([1, 0])
    x = encode(code, u)
    assert x == BitVector.from_bits([1, 0, 1, 0])
    assert pseudo_inverse(code, x) == u


def test_polar_build_rate_one_degenerate():
    code = polar_build(PolarSpec(2, 2))
    assert code.H.shape == (0, 2)
    for bits in ([0, 0], [0, 1], [1, 0], [1, 1]):
        syn = gf2_matvec(code.H, BitVector.from_bits(bits))
        assert len(syn) == 0


def test_polar_build_invariants_64_32():
    code = polar_build(PolarSpec(64, 32))
    assert gf2_rank(code.H) == 32
    assert gf2_rank(code.G) == 32
    assert gf2_matmul(code.A, code.G.T) == BitMatrix.identity(32)


def test_encode_examples():
    code = polar42()
    assert encode(code, BitVector.from_bits([1, 1])) == BitVector.from_bits([0, 1, 0, 1])
    assert encode(code, BitVector.from_bits([0, 0])) == BitVector.zeros(4)


def test_encode_all_ones_zero_syndrome():
    code = polar_build(PolarSpec(64, 32))
    x = encode(code, BitVector.from_bits([1] * 32))
    assert gf2_matvec(code.H, x) == BitVector.zeros(32)


def test_pseudo_inverse_exhaustive_small():
    code = polar42()
    for u_bits in all_messages(2):
        u = BitVector.from_dense(u_bits)
        assert pseudo_inverse(code, encode(code, u)) == u
    assert pseudo_inverse(code, BitVector.zeros(4)) == BitVector.zeros(2)


def test_pseudo_inverse_systematic_extraction():
    h = parse_pc_text(PC_TEXT_42)
    code = code_from_pc(h)
    assert code.info_set is not None
    rng = np.random.default_rng(3)
    for _ in range(10):
        u = BitVector.from_dense(rng.integers(0, 2, size=code.k, dtype=np.uint8))
        x = encode(code, u)
        extracted = [x[i] for i in code.info_set]
        assert pseudo_inverse(code, x) == BitVector.from_bits(extracted)


def test_parse_pc_text():
    h = parse_pc_text(PC_TEXT_42)
    assert h == BitMatrix.from_rows([[1, 1, 1, 1], [0, 1, 0, 1]])


def test_parse_alist_matches_text(tmp_path):
    assert parse_alist(ALIST_42) == parse_pc_text(PC_TEXT_42)
    ftxt = tmp_path / "h.txt"
    ftxt.write_text(PC_TEXT_42)
    falist = tmp_path / "h.alist"
    falist.write_text(ALIST_42)
    assert load_pc_matrix(ftxt) == load_pc_matrix(falist)


def test_parse_errors():
    with pytest.raises(PcFileError):
        parse_pc_text("2 4\n1 1 x 1\n0 1 0 1\n")
    with pytest.raises(PcFileError):
        parse_pc_text("2 4\n1 1 1 1\n")
    with pytest.raises(PcFileError):
        parse_pc_text("")
    with pytest.raises(PcFileError):
        parse_alist("4 2\n2 4\n1 2 1\n4 2\n1\n1 2\n1\n1 2\n")


def test_load_rejects_rank_deficient(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("2 3\n1 1 0\n1 1 0\n")
    with pytest.raises(PcFileError):
        load_pc_matrix(f)


def test_code_from_pc_single_parity_check():
    code = code_from_pc(BitMatrix.from_rows([[1, 1, 1]]))
    assert (code.n, code.k) == (3, 2)
    assert gf2_matmul(code.G, code.H.T) == BitMatrix.zeros(2, 1)
    assert gf2_matmul(code.A, code.G.T) == BitMatrix.identity(2)


def test_code_from_pc_info_set_is_nonpivot():
    # H pivots on columns 0 and 2, so the info set is forced to 1 and 3
    h = BitMatrix.from_rows([[1, 1, 0, 0], [0, 0, 1, 1]])
    code = code_from_pc(h)
    assert code.info_set == (1, 3)


def test_code_from_pc_hamming_7_4_min_distance():
    h = BitMatrix.from_rows(
        [
            [1, 0, 1, 0, 1, 0, 1],
            [0, 1, 1, 0, 0, 1, 1],
            [0, 0, 0, 1, 1, 1, 1],
        ]
    )
    code = code_from_pc(h)
    codewords = encode_batch(code, all_messages(4))
    assert codewords.shape == (16, 7)
    assert len({tuple(c) for c in codewords.tolist()}) == 16
    weights = codewords.sum(axis=1)
    assert weights.min() == 0
    assert np.min(weights[weights > 0]) == 3


def test_code_from_pc_rejects_rank_deficient():
    with pytest.raises(ValueError):
        code_from_pc(BitMatrix.from_rows([[1, 1], [1, 1]]))


def test_standardize_pc_examples():
    h = BitMatrix.from_rows([[1, 1, 0], [1, 1, 1]])
    assert standardize_pc(h) == BitMatrix.from_rows([[1, 1, 0], [0, 0, 1]])
    reduced = standardize_pc(h)
    assert standardize_pc(reduced) == reduced


def test_standardize_pc_preserves_null_space():
    code = polar_build(PolarSpec(64, 32))
    hs = standardize_pc(code.H)
    assert gf2_rank(hs) == 32
    assert gf2_matmul(code.G, hs.T) == BitMatrix.zeros(32, 32)
    rng = np.random.default_rng(9)
    u = rng.integers(0, 2, size=(1000, 32), dtype=np.uint8)
    x = encode_batch(code, u)
    syndromes = (x @ hs.to_dense().T) & 1
    assert not syndromes.any()


def test_stacked_h_a_full_column_rank():
    for code in (polar42(), polar_build(PolarSpec(16, 8)), code_from_pc(parse_pc_text(PC_TEXT_42))):
        b = np.concatenate([code.H.to_dense(), code.A.to_dense()], axis=0)
        assert gf2_rank(BitMatrix.from_dense(b)) == code.n


def test_pseudo_inverse_random_messages_64_32():
    code = polar_build(PolarSpec(64, 32))
    rng = np.random.default_rng(21)
    u = rng.integers(0, 2, size=(500, 32), dtype=np.uint8)
    x = encode_batch(code, u)
    back = (x @ code.A.to_dense().T) & 1
    assert np.array_equal(back, u)


def test_all_messages_layout():
    m = all_messages(3)
    assert m.shape == (8, 3)
    assert m[0].tolist() == [0, 0, 0]
    assert m[1].tolist() == [0, 0, 1]
    assert m[5].tolist() == [1, 0, 1]
