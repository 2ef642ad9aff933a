"""PTBTA control-logic decoder.

Three select lines S1 S2 S3 (S1 most significant) drive eight control lines
C1..C8 in thermometer code. With ``n = 4*S1 + 2*S2 + S3`` the lines
C1..C(n+1) are low and the rest high, so C1 is always low.

Control lines are treated as active-low branch enables: each low line turns
on one unit output branch of the PTBTA, which makes the gain index ``j`` the
number of low lines.
"""

from __future__ import annotations

from typing import NamedTuple

N_LINES = 8


class SelectWord(NamedTuple):
    s1: int
    s2: int
    s3: int

    @classmethod
    def from_string(cls, code: str) -> "SelectWord":
        """Parse a 3-character bit string such as ``"101"``."""
        code = code.strip()
        if len(code) != 3 or any(ch not in "01" for ch in code):
            raise ValueError(f"select code must be three characters of 0/1, got {code!r}")
        return cls(*(int(ch) for ch in code))

    @classmethod
    def from_value(cls, n: int) -> "SelectWord":
        if not 0 <= n < 8:
            raise ValueError(f"select value must be in 0..7, got {n}")
        return cls((n >> 2) & 1, (n >> 1) & 1, n & 1)

    @property
    def value(self) -> int:
        _check_bits(self)
        return 4 * self.s1 + 2 * self.s2 + self.s3

    def __str__(self) -> str:
        return f"{self.s1}{self.s2}{self.s3}"


class ControlVector(NamedTuple):
    c1: int
    c2: int
    c3: int
    c4: int
    c5: int
    c6: int
    c7: int
    c8: int

    def __str__(self) -> str:
        return "".join(str(bit) for bit in self)


def _check_bits(sel) -> None:
    if len(sel) != 3 or any(bit not in (0, 1) for bit in sel):
        raise ValueError(f"select bits must each be 0 or 1, got {tuple(sel)!r}")


def decode(sel: SelectWord | tuple[int, int, int]) -> ControlVector:
    _check_bits(sel)
    n = 4 * sel[0] + 2 * sel[1] + sel[2]
    return ControlVector(*(0 if k <= n else 1 for k in range(N_LINES)))


def gain_index(sel: SelectWord | tuple[int, int, int]) -> int:
    """Number of enabled (low) PTBTA branches, 1..8."""
    return sum(1 for bit in decode(sel) if bit == 0)


TRUTH_TABLE: tuple[tuple[SelectWord, ControlVector], ...] = tuple(
    (SelectWord.from_value(n), decode(SelectWord.from_value(n))) for n in range(8)
)
