"""Right-hand sides ``f`` together with their primitives ``F(t) = int_0^t f``."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Constant:
    c: float

    def f(self, t):
        return self.c * np.ones_like(np.asarray(t, dtype=float))

    def F(self, t):
        return self.c * np.asarray(t, dtype=float)

    def df(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def __str__(self):
        return f"constant:{self.c:.17g}"


@dataclass(frozen=True)
class Power:
    """``f(t) = |t|^(q-2) t``."""

    q: float

    def __post_init__(self):
        if not self.q > 1.0:
            raise ValueError(f"power exponent must exceed 1, got {self.q}")

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return np.abs(t) ** (self.q - 2.0) * t if self.q >= 2.0 else np.sign(t) * np.abs(t) ** (self.q - 1.0)

    def F(self, t):
        return np.abs(np.asarray(t, dtype=float)) ** self.q / self.q

    def df(self, t):
        return (self.q - 1.0) * np.abs(np.asarray(t, dtype=float)) ** (self.q - 2.0)

    def __str__(self):
        return f"power:{self.q:.17g}"


NonlinearitySpec = Union[Constant, Power]

_GRAMMAR = re.compile(r"^\s*(constant|power)\s*:\s*([-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)\s*$")


def parse_nonlinearity(text: str) -> NonlinearitySpec:
    m = _GRAMMAR.match(text)
    if m is None:
        raise ValueError(f"cannot parse nonlinearity {text!r}; expected 'constant:<float>' or 'power:<float>'")
    kind, value = m.group(1), float(m.group(2))
    if kind == "constant":
        return Constant(value)
    return Power(value)
