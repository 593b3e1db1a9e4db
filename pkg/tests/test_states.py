import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peersets.states import (
    StateSpace,
    StateSpaceError,
    config_from_lex_index,
    config_from_string,
    config_to_string,
    lex_index,
)


def test_all_default_is_first():
    assert lex_index((0, 0, 0), 2) == 1


def test_all_top_is_last():
    assert lex_index((2, 2, 2), 2) == 27


def test_two_person_binary_order():
    assert lex_index((0, 1), 1) == 2
    assert lex_index((1, 0), 1) == 3


def test_round_trip_small_spaces():
    for a in range(1, 6):
        for y in range(1, 4):
            space = StateSpace(a, y)
            for row in range(space.size):
                cfg = space.config(row)
                assert space.row(cfg) == row
                assert space.ordinal(cfg) == row + 1


def test_no_default_space():
    space = StateSpace(2, 3, include_default=False)
    assert space.size == 9
    assert space.row((1, 1)) == 0
    assert space.row((3, 3)) == 8
    with pytest.raises(StateSpaceError):
        space.row((0, 1))


@given(
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=1, max_value=3),
    st.randoms(use_true_random=False),
)
def test_lex_index_bijection(num_people, num_alternatives, rnd):
    cfg = tuple(rnd.randint(0, num_alternatives) for _ in range(num_people))
    ordinal = lex_index(cfg, num_alternatives)
    assert 1 <= ordinal <= (num_alternatives + 1) ** num_people
    assert config_from_lex_index(ordinal, num_people, num_alternatives) == cfg


def test_lex_index_rejects_out_of_range():
    with pytest.raises(StateSpaceError):
        lex_index((0, 3), 2)
    with pytest.raises(StateSpaceError):
        lex_index((-1, 0), 2)


def test_size_cap():
    with pytest.raises(StateSpaceError):
        StateSpace(30, 3)


def test_digits_match_configs():
    space = StateSpace(3, 2)
    digits = space.digits()
    for row in range(space.size):
        assert tuple(int(d) for d in digits[row]) == space.config(row)


def test_move_table():
    space = StateSpace(3, 2)
    moves = space.move_table()
    for row in range(space.size):
        cfg = space.config(row)
        for a in range(3):
            for c in range(3):
                assert moves[row, a, c] == space.row(space.replace(cfg, a, c))


def test_config_strings():
    assert config_to_string((0, 1, 2, 0, 1)) == "o,1,2,o,1"
    assert config_from_string("o,1,2,o,1") == (0, 1, 2, 0, 1)
    assert config_from_string(" o , 2 ") == (0, 2)
    with pytest.raises(StateSpaceError):
        config_from_string("o,x,1")


def test_validate_length():
    space = StateSpace(2, 1)
    with pytest.raises(StateSpaceError):
        space.row((0, 0, 0))
