"""Seeded, platform-independent random streams.

Every random decision in the package (fold shuffles, synthetic pixel
noise, Hb jitter) goes through the two generators defined here:

* ``splitmix64`` expands a 64-bit seed into well-mixed 64-bit words. It is
  used to seed xoshiro state and to derive independent child seeds.
* ``xoshiro256**`` (Blackman & Vigna, 2018) produces the actual stream.

``Xoshiro256`` is the scalar generator; ``XoshiroLanes`` runs many
independent xoshiro256** streams side by side on numpy ``uint64`` arrays,
one lane per value that has to be drawn per step.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 generator."""

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next(self):
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix64(self.state)


def derive_seed(seed, *keys):
    """Derive a child seed from ``seed`` and a path of integer keys.

    ``derive_seed(s, i)`` is the seed for the i-th child stream of ``s``;
    further keys descend one more level each.
    """
    out = int(seed) & MASK64
    for key in keys:
        out = _mix64((out + (int(key) + 1) * GOLDEN_GAMMA) & MASK64)
    return out


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """Scalar xoshiro256** generator seeded through splitmix64."""

    def __init__(self, seed=None, state=None):
        if state is not None:
            s = [int(v) & MASK64 for v in state]
        else:
            sm = SplitMix64(seed)
            s = [sm.next() for _ in range(4)]
        if len(s) != 4 or not any(s):
            raise ValueError("xoshiro256 state must be four words, not all zero")
        self.s = s

    def next(self):
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self):
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next() >> 11) * (1.0 / (1 << 53))

    def below(self, bound):
        """Unbiased integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next()
            if r < limit:
                return r % bound

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def normal(self):
        """Standard normal via Box-Muller (cosine branch only)."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items):
        """In-place Fisher-Yates shuffle (descending index form)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def permutation(n, seed):
    """Seeded uniform random permutation of ``range(n)``."""
    return Xoshiro256(seed).shuffle(list(range(n)))


_U64 = np.uint64


def _mix64_array(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def _rotl_array(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


class XoshiroLanes:
    """``n_lanes`` independent xoshiro256** streams advanced in lockstep.

    Lane ``j`` is seeded with splitmix64 outputs ``4j+1 .. 4j+4`` of the
    stream started at ``seed``, so lane ``j`` is identical to
    ``Xoshiro256(state=...)`` built from those four words.
    """

    def __init__(self, seed, n_lanes):
        base = np.arange(n_lanes, dtype=np.uint64) * _U64(4)
        gamma = _U64(GOLDEN_GAMMA)
        seed = _U64(int(seed) & MASK64)
        with np.errstate(over="ignore"):
            self.s = [_mix64_array(seed + (base + _U64(k + 1)) * gamma) for k in range(4)]
        self.n_lanes = n_lanes

    def next(self):
        s0, s1, s2, s3 = self.s
        with np.errstate(over="ignore"):
            result = _rotl_array(s1 * _U64(5), 7) * _U64(9)
        t = s1 << _U64(17)
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = _rotl_array(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self):
        return (self.next() >> _U64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def normal(self):
        """One standard normal per lane; consumes two steps of every lane."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
