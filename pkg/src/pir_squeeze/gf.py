"""Scalar arithmetic in prime fields.

Bulk work happens on int64 arrays in :mod:`pir_squeeze.linalg`; this module
supplies the checked scalar type plus prime helpers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

from .errors import DivisionByZero, ModulusMismatch, ValidationError

# products of two residues must fit in int64
MAX_MODULUS = 2**31 - 1


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def smallest_prime_geq(n: int) -> int:
    """Least prime >= n."""
    if n < 2:
        raise ValidationError(f"smallest_prime_geq needs n >= 2, got {n}")
    q = n
    while not is_prime(q):
        q += 1
    return q


def check_modulus(q: int) -> int:
    q = int(q)
    if not is_prime(q):
        raise ValidationError(f"modulus {q} is not prime")
    if q > MAX_MODULUS:
        raise ValidationError(f"modulus {q} exceeds {MAX_MODULUS}")
    return q


def inv_mod(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise DivisionByZero(f"0 has no inverse mod {q}")
    return pow(a, q - 2, q)


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: int

    def __post_init__(self):
        check_modulus(self.modulus)
        object.__setattr__(self, "value", int(self.value) % self.modulus)

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ModulusMismatch(f"F_{self.modulus} vs F_{other.modulus}")
            return other
        if isinstance(other, int):
            return FieldElement(other, self.modulus)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value + o.value, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value - o.value, self.modulus)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(o.value - self.value, self.modulus)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * o.value, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.modulus)

    def inverse(self) -> "FieldElement":
        return FieldElement(inv_mod(self.value, self.modulus), self.modulus)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(pow(self.value, e, self.modulus), self.modulus)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.modulus})"


def field_arith(a: FieldElement, b: FieldElement | int | None, op: str) -> FieldElement:
    """Dispatch helper: op in {add, sub, mul, div, pow, inv}."""
    if op == "inv":
        return a.inverse()
    if op == "pow":
        return a ** int(b)
    if isinstance(b, FieldElement) and b.modulus != a.modulus:
        raise ModulusMismatch(f"F_{a.modulus} vs F_{b.modulus}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")
