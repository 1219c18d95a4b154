"""Modular arithmetic over Z_p.

Moduli are capped at 2**31 so every product of two residues fits in a
signed 64-bit integer.
"""
from __future__ import annotations

import math

MAX_MODULUS = 2**31


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def check_prime(p: int) -> int:
    """Validate ``p`` as a supported prime modulus and return it."""
    p = int(p)
    if not 2 <= p <= MAX_MODULUS:
        raise ValueError(f"modulus {p} outside supported range [2, 2**31]")
    if not is_prime(p):
        raise ValueError(f"modulus {p} is not prime")
    return p


def mod_inverse(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"no inverse: 0 mod {p}")
    return pow(a, -1, p)


def multiplicative_order(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ValueError("0 has no multiplicative order")
    n = p - 1
    order = n
    for q in _prime_factors(n):
        while order % q == 0 and pow(a, order // q, p) == 1:
            order //= q
    return order


def _prime_factors(n: int) -> list[int]:
    out = []
    q = 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group mod ``p``.

    For p = 2 the group is trivial and 1 is returned.
    """
    p = check_prime(p)
    if p == 2:
        return 1
    factors = _prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in factors):
            return g
    raise AssertionError("unreachable: every prime has a primitive root")


def primes_in_range(lo: float, hi: float) -> list[int]:
    """All primes r with lo < r < hi (both bounds strict)."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    start = math.floor(lo) + 1
    stop = math.ceil(hi) - 1
    if stop < 2 or start > stop:
        return []
    sieve = bytearray([1]) * (stop + 1)
    sieve[0] = 0
    if stop >= 1:
        sieve[1] = 0
    for q in range(2, math.isqrt(stop) + 1):
        if sieve[q]:
            sieve[q * q :: q] = bytearray(len(range(q * q, stop + 1, q)))
    return [r for r in range(max(start, 2), stop + 1) if sieve[r]]
