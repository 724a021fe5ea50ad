"""Test sets on the simplex (coordinate boxes) and single-sequence events."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SimplexBox:
    """``{theta : lo[a] <= theta[a] <= hi[a] for all a}``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or len(lo) < 2:
            raise ValueError("box bounds must have equal length >= 2")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty interval in box {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def full(cls, alphabet_size: int) -> "SimplexBox":
        return cls((0.0,) * alphabet_size, (1.0,) * alphabet_size)

    @classmethod
    def coordinate(cls, alphabet_size: int, index: int, lo: float, hi: float) -> "SimplexBox":
        los = [0.0] * alphabet_size
        his = [1.0] * alphabet_size
        los[index], his[index] = lo, hi
        return cls(tuple(los), tuple(his))

    @property
    def alphabet_size(self) -> int:
        return len(self.lo)

    @property
    def is_full(self) -> bool:
        return all(v <= 0.0 for v in self.lo) and all(v >= 1.0 for v in self.hi)

    def contains(self, theta) -> np.ndarray:
        """Membership for one pmf (shape (A,)) or a stack (shape (m, A))."""
        t = np.asarray(theta, dtype=np.float64)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        inside = (t >= lo) & (t <= hi)
        return inside.all(axis=-1)

    def describe(self) -> str:
        parts = [
            f"{a}:{lo!r}:{hi!r}"
            for a, (lo, hi) in enumerate(zip(self.lo, self.hi))
            if lo > 0.0 or hi < 1.0
        ]
        return "box(" + ",".join(parts) + ")"


_BOX = re.compile(r"^\s*box\((.*)\)\s*$")


def parse_box(text: str, alphabet_size: int) -> SimplexBox:
    """Parse ``box(i:lo:hi,...)``; unnamed coordinates range over [0, 1]."""
    m = _BOX.match(text)
    if not m:
        raise ValueError(f"not a box descriptor: {text!r}")
    lo = [0.0] * alphabet_size
    hi = [1.0] * alphabet_size
    body = m.group(1).strip()
    if body:
        for part in body.split(","):
            i, a, b = part.split(":")
            idx = int(i)
            if not 0 <= idx < alphabet_size:
                raise ValueError(f"box coordinate {idx} outside alphabet of size {alphabet_size}")
            lo[idx], hi[idx] = float(a), float(b)
    return SimplexBox(tuple(lo), tuple(hi))


@dataclass(frozen=True)
class TestEvent:
    """``X^r = word`` and ``Theta_j in boxes[j]`` for every j."""

    __test__ = False  # not a pytest class

    word: tuple[int, ...]
    boxes: tuple[SimplexBox, ...]

    def __post_init__(self):
        word = tuple(int(v) for v in self.word)
        if len(word) < 1 or len(word) != len(self.boxes):
            raise ValueError("event needs one box per word symbol and r >= 1")
        object.__setattr__(self, "word", word)
        object.__setattr__(self, "boxes", tuple(self.boxes))

    @property
    def r(self) -> int:
        return len(self.word)

    @classmethod
    def unconstrained(cls, word, alphabet_size: int) -> "TestEvent":
        return cls(tuple(word), tuple(SimplexBox.full(alphabet_size) for _ in word))

    def describe(self) -> str:
        return "event(" + "".join(str(s) for s in self.word) + ";" + ";".join(
            b.describe() for b in self.boxes) + ")"


def parse_event(text: str, alphabet_size: int) -> TestEvent:
    """Parse ``event(01;box(1:0:0.5);box())``."""
    m = re.match(r"^\s*event\((.*)\)\s*$", text)
    if not m:
        raise ValueError(f"not an event descriptor: {text!r}")
    word_txt, *boxes = [p.strip() for p in m.group(1).split(";")]
    word = tuple(int(c) for c in word_txt)
    if not boxes:
        boxes = ["box()"] * len(word)
    return TestEvent(word, tuple(parse_box(b, alphabet_size) for b in boxes))
