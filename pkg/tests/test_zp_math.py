import pytest
from hypothesis import given, strategies as st

from shallowfp.zp_math import check_prime, is_prime, mod_inverse, primes_in_range, primitive_root

from conftest import sieve


def exhaustive_order(g, p):
    x, k = g % p, 1
    while x != 1:
        x = x * g % p
        k += 1
    return k


class TestModInverse:
    def test_examples(self):
        assert mod_inverse(3, 17) == 6
        assert mod_inverse(1, 17) == 1
        assert mod_inverse(1, 1013) == 1

    def test_zero_has_no_inverse(self):
        with pytest.raises(ZeroDivisionError, match="no inverse"):
            mod_inverse(0, 17)

    @given(st.sampled_from([5, 17, 101, 1013, 2**31 - 1]), st.integers(min_value=1))
    def test_involution(self, p, a):
        a = a % p or 1
        b = mod_inverse(a, p)
        assert a * b % p == 1
        assert mod_inverse(b, p) == a


class TestPrimitiveRoot:
    @pytest.mark.parametrize("p, g", [(7, 3), (17, 3), (3, 2)])
    def test_examples(self, p, g):
        assert primitive_root(p) == g
        assert exhaustive_order(g, p) == p - 1

    def test_two_is_degenerate(self):
        assert primitive_root(2) == 1

    def test_order_and_minimality_up_to_1e4(self, primes_1e4):
        for p in primes_1e4[1:]:
            g = primitive_root(p)
            assert exhaustive_order(g, p) == p - 1
        # minimality, spot-checked exhaustively on small primes
        for p in primes_1e4[1:60]:
            g = primitive_root(p)
            assert all(exhaustive_order(h, p) < p - 1 for h in range(2, g))

    def test_rejects_composite(self):
        with pytest.raises(ValueError):
            primitive_root(15)


class TestPrimes:
    @pytest.mark.parametrize("lo, hi, expected", [
        (10, 20, [11, 13, 17, 19]),
        (2.5, 3.5, [3]),
        (14, 16, []),
        (11, 13, []),  # strict on both ends
    ])
    def test_examples(self, lo, hi, expected):
        assert primes_in_range(lo, hi) == expected

    def test_matches_sieve(self):
        ref = sieve(10**5)
        assert primes_in_range(1.5, 10**5 + 0.5) == ref
        assert primes_in_range(1000, 2000) == [q for q in ref if 1000 < q < 2000]

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            primes_in_range(5, 5)

    def test_is_prime_agrees_with_sieve(self):
        ref = set(sieve(20000))
        assert all(is_prime(n) == (n in ref) for n in range(20001))

    def test_check_prime_range(self):
        assert check_prime(2**31 - 1) == 2**31 - 1
        with pytest.raises(ValueError):
            check_prime(2**61 - 1)
