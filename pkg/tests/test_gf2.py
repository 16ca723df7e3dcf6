import numpy as np
import pytest

from sbnd.gf2 import (
    BitMatrix,
    BitVector,
    gf2_matmul,
    gf2_matvec,
    gf2_rank,
    gf2_rref_rows,
    gf2_solve,
    kronecker_power,
)

F = BitMatrix.from_rows([[1, 0], [1, 1]])


def test_matvec_hand_xor():
    m = BitMatrix.from_rows([[1, 0], [1, 1]])
    v = BitVector.from_bits([1, 1])
    assert gf2_matvec(m, v) == BitVector.from_bits([1, 0])


def test_matvec_identity():
    m = BitMatrix.identity(3)
    v = BitVector.from_bits([0, 1, 1])
    assert gf2_matvec(m, v) == v


def test_matvec_parity_row():
    m = BitMatrix.from_rows([[1, 1, 1, 1]])
    v = BitVector.from_bits([1, 0, 1, 0])
    assert gf2_matvec(m, v) == BitVector.from_bits([0])


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2_matvec(BitMatrix.identity(3), BitVector.from_bits([1, 0]))


def test_matmul_involution_kernel():
    assert gf2_matmul(F, F) == BitMatrix.identity(2)


def test_matmul_identity_passthrough():
    rng = np.random.default_rng(7)
    b = BitMatrix.from_dense(rng.integers(0, 2, size=(4, 6), dtype=np.uint8))
    assert gf2_matmul(BitMatrix.identity(4), b) == b


def test_matmul_p4_involution():
    p4 = kronecker_power(F, 2)
    assert gf2_matmul(p4, p4) == BitMatrix.identity(4)


def test_matmul_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2_matmul(BitMatrix.identity(3), BitMatrix.identity(4))


def test_kronecker_power_small():
    assert kronecker_power(F, 0) == BitMatrix.from_rows([[1]])
    assert kronecker_power(F, 1) == F
    expected = BitMatrix.from_rows(
        [[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0], [1, 1, 1, 1]]
    )
    assert kronecker_power(F, 2) == expected


def test_kronecker_dimension_law():
    for e in range(6):
        m = kronecker_power(F, e)
        assert m.shape == (2**e, 2**e)


def test_involution_all_sizes():
    # P_n P_n = I_n for n = 2..128
    for e in range(1, 8):
        p = kronecker_power(F, e)
        assert gf2_matmul(p, p) == BitMatrix.identity(2**e)


def test_rref_one_row_addition():
    reduced, pivots = gf2_rref_rows(BitMatrix.from_rows([[1, 1], [0, 1]]))
    assert reduced == BitMatrix.identity(2)
    assert pivots == [0, 1]


def test_rref_identity_fixed_point():
    for n in (1, 3, 5):
        reduced, pivots = gf2_rref_rows(BitMatrix.identity(n))
        assert reduced == BitMatrix.identity(n)
        assert pivots == list(range(n))


def test_rref_hand_elimination():
    reduced, pivots = gf2_rref_rows(BitMatrix.from_rows([[1, 1, 0], [1, 1, 1]]))
    assert reduced == BitMatrix.from_rows([[1, 1, 0], [0, 0, 1]])
    assert pivots == [0, 2]


def test_rref_preserves_row_space():
    # every row of each matrix must lie in the span of the other
    rng = np.random.default_rng(123)
    for _ in range(25):
        r, c = rng.integers(1, 7, size=2)
        m = BitMatrix.from_dense(rng.integers(0, 2, size=(r, c), dtype=np.uint8))
        reduced, _ = gf2_rref_rows(m)
        for a, b in ((m, reduced), (reduced, m)):
            basis_t = b.transpose()
            for i in range(a.rows):
                assert gf2_solve(basis_t, a.row(i)) is not None


def test_rank_examples():
    assert gf2_rank(BitMatrix.identity(4)) == 4
    assert gf2_rank(BitMatrix.zeros(3, 5)) == 0
    assert gf2_rank(BitMatrix.from_rows([[1, 1], [1, 1]])) == 1


def test_matvec_distributes_over_xor():
    rng = np.random.default_rng(42)
    for _ in range(50):
        r, c = rng.integers(1, 40, size=2)
        m = BitMatrix.from_dense(rng.integers(0, 2, size=(r, c), dtype=np.uint8))
        v = BitVector.from_dense(rng.integers(0, 2, size=c, dtype=np.uint8))
        w = BitVector.from_dense(rng.integers(0, 2, size=c, dtype=np.uint8))
        assert gf2_matvec(m, v ^ w) == gf2_matvec(m, v) ^ gf2_matvec(m, w)


def test_packing_roundtrip_wide():
    # widths straddling the 64-bit word boundary
    rng = np.random.default_rng(5)
    for c in (1, 63, 64, 65, 127, 128, 129):
        dense = rng.integers(0, 2, size=(3, c), dtype=np.uint8)
        m = BitMatrix.from_dense(dense)
        assert np.array_equal(m.to_dense(), dense)
        v = BitVector.from_dense(dense[0])
        assert np.array_equal(v.to_dense(), dense[0])
        assert v.weight() == int(dense[0].sum())


def test_transpose_roundtrip():
    rng = np.random.default_rng(11)
    dense = rng.integers(0, 2, size=(5, 70), dtype=np.uint8)
    m = BitMatrix.from_dense(dense)
    assert np.array_equal(m.transpose().to_dense(), dense.T)
    assert m.transpose().transpose() == m


def test_values_are_immutable():
    m = BitMatrix.identity(4)
    with pytest.raises(ValueError):
        m.words[0, 0] = 0
    v = BitVector.from_bits([1, 0])
    with pytest.raises(ValueError):
        v.words[0] = 0


def test_solve():
    m = BitMatrix.from_rows([[1, 1, 0], [0, 1, 1]])
    rhs = BitVector.from_bits([1, 0])
    x = gf2_solve(m, rhs)
    assert x is not None
    assert gf2_matvec(m, x) == rhs
    # inconsistent system
    bad = BitMatrix.from_rows([[1, 1], [1, 1]])
    assert gf2_solve(bad, BitVector.from_bits([0, 1])) is None
