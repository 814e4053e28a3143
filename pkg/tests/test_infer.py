import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chessvision.infer import (
    PieceCensusLimits,
    argmax_position,
    census_violations,
    infer_position,
    place_kings,
    square_is_light,
    validate_probabilities,
)
from chessvision.pieces import PieceClass
from chessvision.synthetic import (
    noisy_probabilities,
    one_hot_probabilities,
    random_legal_position,
)

LIMITS = PieceCensusLimits()


def uniform_probs():
    return np.full((64, 13), 1 / 13)


# ---------------------------------------------------------------------------
# validation and helpers

def test_validate_rejects_bad_shape():
    with pytest.raises(ValueError):
        validate_probabilities(np.zeros((64, 12)))


def test_validate_rejects_nan():
    probs = uniform_probs()
    probs[3, 3] = np.nan
    with pytest.raises(ValueError):
        validate_probabilities(probs)


def test_square_color_convention():
    assert square_is_light(0)       # a8 is a light square
    assert not square_is_light(1)
    assert not square_is_light(8)
    assert square_is_light(63)      # h1


def test_census_violations_on_legal_position(rng):
    pos = random_legal_position(rng)
    assert census_violations(pos, LIMITS) == []


def test_census_violations_reports_problems():
    board = [PieceClass.EMPTY] * 64
    board[0] = board[1] = PieceClass.WK          # two white kings
    board[10] = board[12] = PieceClass.WB        # bishops, both light squares
    out = census_violations(board, LIMITS)
    assert any("kings" in v for v in out)
    assert any("bishops" in v for v in out)


# ---------------------------------------------------------------------------
# king placement

def test_kings_placed_at_peaks():
    probs = uniform_probs()
    probs[10, PieceClass.WK] = 0.9
    probs[50, PieceClass.BK] = 0.9
    assert place_kings(probs) == (10, 50)


def test_king_collision_smaller_loss_yields():
    # both kings peak on square 10; white loses less by moving (0.9-0.85)
    # than black (0.8-0.3), so white yields
    probs = uniform_probs()
    probs[10, PieceClass.WK] = 0.9
    probs[20, PieceClass.WK] = 0.85
    probs[10, PieceClass.BK] = 0.8
    probs[30, PieceClass.BK] = 0.3
    w, b = place_kings(probs)
    assert (w, b) == (20, 10)


def test_king_collision_exact_tie_black_yields():
    probs = uniform_probs()
    probs[10, PieceClass.WK] = 0.9
    probs[20, PieceClass.WK] = 0.5
    probs[10, PieceClass.BK] = 0.9
    probs[30, PieceClass.BK] = 0.5
    w, b = place_kings(probs)
    assert w == 10 and b == 30


# ---------------------------------------------------------------------------
# full inference

def test_one_hot_roundtrip(rng):
    for _ in range(50):
        pos = random_legal_position(rng)
        assert infer_position(one_hot_probabilities(pos)) == pos


def test_argmax_equals_infer_on_one_hot(rng):
    pos = random_legal_position(rng)
    probs = one_hot_probabilities(pos)
    assert argmax_position(probs) == infer_position(probs)


def test_always_exactly_two_kings(rng):
    for _ in range(50):
        probs = rng.dirichlet(np.full(13, 0.3), size=64)
        out = infer_position(probs)
        assert sum(p is PieceClass.WK for p in out) == 1
        assert sum(p is PieceClass.BK for p in out) == 1


def test_output_always_satisfies_census(rng):
    for _ in range(200):
        probs = rng.dirichlet(np.full(13, 0.2), size=64)
        assert census_violations(infer_position(probs), LIMITS) == []


def test_bishops_end_on_opposite_colors():
    # three squares screaming "white bishop"; only two may be bishops and
    # they must sit on opposite square colors
    probs = uniform_probs()
    for sq in (0, 2, 9):  # 0 and 2 are light, 9 is dark
        probs[sq] = 0.01
        probs[sq, PieceClass.WB] = 0.89
    out = infer_position(probs)
    bishops = [i for i, p in enumerate(out) if p is PieceClass.WB]
    assert len(bishops) == 2
    assert {square_is_light(i) for i in bishops} == {True, False}


def test_pawn_census_limit():
    probs = uniform_probs()
    for sq in range(10):  # ten squares that all want to be white pawns
        probs[sq] = 0.01
        probs[sq, PieceClass.WP] = 0.89
    out = infer_position(probs)
    assert sum(p is PieceClass.WP for p in out) == 8


def test_custom_limits_are_respected():
    limits = PieceCensusLimits(queen=1)
    probs = uniform_probs()
    for sq in (0, 1):
        probs[sq] = 0.01
        probs[sq, PieceClass.WQ] = 0.89
    out = infer_position(probs, limits)
    assert sum(p is PieceClass.WQ for p in out) == 1


def test_empty_majority_board():
    probs = uniform_probs()
    probs[:, PieceClass.EMPTY] = 5.0
    probs /= probs.sum(axis=1, keepdims=True)
    out = infer_position(probs)
    # kings are forced in, everything else stays empty
    assert sum(p is PieceClass.EMPTY for p in out) == 62


def test_inference_beats_argmax_under_noise(rng):
    gains = []
    for _ in range(100):
        pos = random_legal_position(rng)
        probs = noisy_probabilities(pos, rng)
        am = argmax_position(probs)
        inf = infer_position(probs)
        a = sum(x == t for x, t in zip(am, pos))
        b = sum(x == t for x, t in zip(inf, pos))
        gains.append(b - a)
        assert census_violations(inf, LIMITS) == []
    assert np.mean(gains) > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inference_sound_for_any_probabilities(seed):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.full(13, 0.15), size=64)
    assert census_violations(infer_position(probs), LIMITS) == []
