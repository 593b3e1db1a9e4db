"""Choice configurations and their lexicographic indexing.

A choice configuration is a length-A tuple of alternative ids, one per person.
Alternative id 0 encodes the default option "o"; ids 1..Y are the real options.
Configurations are ordered lexicographically with the default treated as digit
zero and person 0 as the most significant digit, so the all-default
configuration has ordinal 1 and the all-Y configuration has ordinal (Y+1)^A.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

Config = tuple[int, ...]

DEFAULT = 0


class StateSpaceError(ValueError):
    """Raised for invalid configurations or oversized state spaces."""


class StateSpace:
    """Enumeration of all choice configurations for A people and Y options.

    Args:
        num_people: A >= 1.
        num_alternatives: Y >= 1 (real options, excluding the default).
        include_default: whether the default option 0 is a valid choice.
            The no-default model variant sets this to False, in which case
            valid digits are 1..Y and the space has Y^A configurations.
        max_states: guard against accidental enumeration blowups.
    """

    def __init__(
        self,
        num_people: int,
        num_alternatives: int,
        include_default: bool = True,
        max_states: int = 10**6,
    ) -> None:
        if num_people < 1:
            raise StateSpaceError("need at least one person")
        if num_alternatives < 1:
            raise StateSpaceError("need at least one alternative")
        self.num_people = num_people
        self.num_alternatives = num_alternatives
        self.include_default = include_default
        self.base = num_alternatives + 1 if include_default else num_alternatives
        size = self.base**num_people
        if size > max_states:
            raise StateSpaceError(
                f"state space has {size} configurations, above the cap {max_states}"
            )
        self.size = size
        # digit weights, person 0 most significant
        self._weights = np.array(
            [self.base ** (num_people - 1 - a) for a in range(num_people)],
            dtype=np.int64,
        )

    def __repr__(self) -> str:
        tag = "default" if self.include_default else "no-default"
        return (
            f"StateSpace(A={self.num_people}, Y={self.num_alternatives}, "
            f"{tag}, size={self.size})"
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, StateSpace)
            and self.num_people == other.num_people
            and self.num_alternatives == other.num_alternatives
            and self.include_default == other.include_default
        )

    def __hash__(self) -> int:
        return hash((self.num_people, self.num_alternatives, self.include_default))

    # -- validation ---------------------------------------------------------

    def validate(self, config: Config) -> None:
        if len(config) != self.num_people:
            raise StateSpaceError(
                f"configuration {config} has {len(config)} entries, expected "
                f"{self.num_people}"
            )
        lo = 0 if self.include_default else 1
        for c in config:
            if not lo <= c <= self.num_alternatives:
                raise StateSpaceError(
                    f"choice {c} out of range [{lo}, {self.num_alternatives}] in {config}"
                )

    # -- indexing -----------------------------------------------------------

    def row(self, config: Config) -> int:
        """0-based position of ``config``; used for matrix indexing."""
        self.validate(config)
        off = 0 if self.include_default else 1
        r = 0
        for c in config:
            r = r * self.base + (c - off)
        return r

    def ordinal(self, config: Config) -> int:
        """1-based lexicographic position of ``config``."""
        return self.row(config) + 1

    def config(self, row: int) -> Config:
        """Inverse of :meth:`row`."""
        if not 0 <= row < self.size:
            raise StateSpaceError(f"row {row} out of range for {self}")
        off = 0 if self.include_default else 1
        digits = []
        for _ in range(self.num_people):
            digits.append(row % self.base + off)
            row //= self.base
        return tuple(reversed(digits))

    def configs(self) -> list[Config]:
        """All configurations in lexicographic order."""
        return [self.config(r) for r in range(self.size)]

    def digits(self) -> NDArray[np.int8]:
        """(size, A) array of choices; row r is the configuration at row r."""
        return _digit_table(self.base, self.num_people) + (
            0 if self.include_default else 1
        )

    def move_table(self) -> NDArray[np.int64]:
        """(size, A, base) array: row index after person a switches to choice c.

        The third axis is indexed by digit (c - 1 in the no-default space),
        matching :meth:`digits`.
        """
        dig = self.digits() - (0 if self.include_default else 1)
        rows = np.arange(self.size, dtype=np.int64)
        # strip person a's digit, then add back each candidate digit
        stripped = rows[:, None] - dig.astype(np.int64) * self._weights[None, :]
        return (
            stripped[:, :, None]
            + np.arange(self.base, dtype=np.int64)[None, None, :]
            * self._weights[None, :, None]
        )

    def replace(self, config: Config, person: int, choice: int) -> Config:
        out = list(config)
        out[person] = choice
        return tuple(out)


@lru_cache(maxsize=64)
def _digit_table(base: int, num_people: int) -> NDArray[np.int8]:
    rows = np.arange(base**num_people, dtype=np.int64)
    table = np.empty((rows.size, num_people), dtype=np.int8)
    for a in range(num_people - 1, -1, -1):
        table[:, a] = rows % base
        rows //= base
    table.setflags(write=False)
    return table


def lex_index(config: Config, num_alternatives: int, include_default: bool = True) -> int:
    """1-based lexicographic ordinal of a configuration, default treated as 0."""
    space = StateSpace(len(config), num_alternatives, include_default)
    return space.ordinal(config)


def config_from_lex_index(
    ordinal: int, num_people: int, num_alternatives: int, include_default: bool = True
) -> Config:
    """Inverse of :func:`lex_index`."""
    space = StateSpace(num_people, num_alternatives, include_default)
    return space.config(ordinal - 1)


def config_to_string(config: Config) -> str:
    """Render a configuration as e.g. ``"o,1,2,o,1"``."""
    return ",".join("o" if c == DEFAULT else str(c) for c in config)


def config_from_string(text: str) -> Config:
    """Parse the :func:`config_to_string` format."""
    parts = [p.strip() for p in text.split(",")]
    out = []
    for p in parts:
        if p == "o":
            out.append(DEFAULT)
        else:
            try:
                out.append(int(p))
            except ValueError as exc:
                raise StateSpaceError(f"bad choice token {p!r} in {text!r}") from exc
    return tuple(out)
