import pytest
from hypothesis import given
from hypothesis import strategies as st

from chessvision.fen import FenError, decode_fen, encode_fen
from chessvision.pieces import PieceClass
from chessvision.synthetic import random_legal_position

STARTING = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR"


def starting_position():
    return decode_fen(STARTING)


def test_empty_board():
    assert encode_fen([PieceClass.EMPTY] * 64) == "8/8/8/8/8/8/8/8"


def test_starting_position_encodes_exactly():
    board = [PieceClass.EMPTY] * 64
    back = [PieceClass.BR, PieceClass.BN, PieceClass.BB, PieceClass.BQ,
            PieceClass.BK, PieceClass.BB, PieceClass.BN, PieceClass.BR]
    for c in range(8):
        board[c] = back[c]
        board[8 + c] = PieceClass.BP
        board[48 + c] = PieceClass.WP
        board[56 + c] = PieceClass(back[c] - 6)
    assert encode_fen(board) == STARTING


def test_single_king_indexing():
    board = [PieceClass.EMPTY] * 64
    board[36] = PieceClass.WK  # rank 5 (index row 4), file e
    assert encode_fen(board) == "8/8/8/8/4K3/8/8/8"


def test_decode_starting_position():
    board = starting_position()
    assert board[0] is PieceClass.BR
    assert board[4] is PieceClass.BK
    assert board[60] is PieceClass.WK
    assert encode_fen(board) == STARTING


def test_decode_rejects_short_rank():
    with pytest.raises(FenError) as err:
        decode_fen("8/8/8/8/8/8/8/7")
    assert err.value.offset >= 0


def test_decode_rejects_overfull_rank():
    with pytest.raises(FenError):
        decode_fen("9/8/8/8/8/8/8/8")
    with pytest.raises(FenError):
        decode_fen("ppppppppp/8/8/8/8/8/8/8")


def test_decode_rejects_bad_letter():
    with pytest.raises(FenError):
        decode_fen("8/8/8/8/8/8/8/7x")


def test_lenient_accepts_non_maximal_runs():
    assert decode_fen("44/8/8/8/8/8/8/8") == [PieceClass.EMPTY] * 64
    assert decode_fen("332/8/8/8/8/8/8/8") == [PieceClass.EMPTY] * 64


def test_strict_mode_rejects_non_maximal_runs():
    with pytest.raises(FenError) as err:
        decode_fen("44/8/8/8/8/8/8/8", strict=True)
    assert err.value.offset == 1
    with pytest.raises(FenError):
        decode_fen("8/8/8/8/8/8/8/35", strict=True)


def test_strict_mode_accepts_canonical_strings():
    decode_fen("8/8/8/8/8/8/8/8", strict=True)
    decode_fen("3K4/8/8/8/8/8/8/3k4", strict=True)
    decode_fen(STARTING, strict=True)


def test_census_enforcement_flag():
    three_kings = "KKK5/8/8/8/8/8/8/k7"
    decode_fen(three_kings)  # lenient: fixture positions may be illegal
    with pytest.raises(FenError):
        decode_fen(three_kings, enforce_census=True)


def test_roundtrip_random_positions(rng):
    for _ in range(200):
        pos = random_legal_position(rng)
        assert decode_fen(encode_fen(pos)) == pos


@given(st.lists(st.integers(0, 12), min_size=64, max_size=64))
def test_roundtrip_arbitrary_boards(ordinals):
    board = [PieceClass(k) for k in ordinals]
    assert decode_fen(encode_fen(board)) == board


@given(st.lists(st.integers(0, 12), min_size=64, max_size=64))
def test_encode_never_emits_adjacent_digits(ordinals):
    fen = encode_fen([PieceClass(k) for k in ordinals])
    assert not any(a.isdigit() and b.isdigit() for a, b in zip(fen, fen[1:]))
