# kleene.py
"""Three-valued signal values with Kleene's strong connectives."""

from enum import Enum
from typing import Iterable


class Tri(Enum):
    ZERO = 0
    ONE = 1
    M = 2

    def __str__(self):
        return "M" if self is Tri.M else str(self.value)

    @property
    def is_definite(self) -> bool:
        return self is not Tri.M

    @staticmethod
    def from_bool(b: bool) -> "Tri":
        return Tri.ONE if b else Tri.ZERO

    @staticmethod
    def parse(char: str) -> "Tri":
        try:
            return {"0": Tri.ZERO, "1": Tri.ONE, "M": Tri.M, "m": Tri.M}[char]
        except KeyError:
            raise ValueError(f"not a tri-state value: {char!r}") from None

    @staticmethod
    def any(values: Iterable["Tri"]) -> "Tri":
        """OR: 1 if any input is 1, else M if any is M, else 0 (0 for no inputs)."""
        values = list(values)
        if any(v is Tri.ONE for v in values):
            return Tri.ONE
        if any(v is Tri.M for v in values):
            return Tri.M
        return Tri.ZERO

    @staticmethod
    def all(values: Iterable["Tri"]) -> "Tri":
        """AND: 0 if any input is 0, else M if any is M, else 1 (1 for no inputs)."""
        values = list(values)
        if any(v is Tri.ZERO for v in values):
            return Tri.ZERO
        if any(v is Tri.M for v in values):
            return Tri.M
        return Tri.ONE

    @staticmethod
    def not_(value: "Tri") -> "Tri":
        if value is Tri.M:
            return Tri.M
        return Tri.ONE if value is Tri.ZERO else Tri.ZERO

    def resolve(self, to: "Tri") -> "Tri":
        """Replace M by a definite value; definite values pass through."""
        return to if self is Tri.M else self

    def __or__(self, other: "Tri") -> "Tri":
        return Tri.any((self, other))

    def __and__(self, other: "Tri") -> "Tri":
        return Tri.all((self, other))

    def __invert__(self) -> "Tri":
        return Tri.not_(self)


__all__ = ['Tri']
