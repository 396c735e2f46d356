"""Counter-based random number streams for reproducible Monte Carlo.

Variates are produced by the Philox 4x64-10 block cipher, so the t-th draw
of a stream is a pure function of ``(seed, stream_id, t)``.  Draws for any
subset of streams can therefore be generated in any order and in any batch
size and always replay identically, which is what makes multi-particle runs
reproducible regardless of scheduling.

The block function is bit-identical to ``numpy.random.Philox`` (verified in
the test suite); the cipher key carries the seed and the counter carries the
stream id and the draw position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "ParticleStreams", "SingleStream", "stream_tag"]

_MASK64 = 0xFFFFFFFFFFFFFFFF

# Philox 4x64 round multipliers and Weyl key increments.
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)

_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_ZERO = np.uint64(0)

_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_INV32 = 1.0 / 4294967296.0        # 2**-32

# splitmix64 mixing constants, used to derive child stream ids.
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    """splitmix64 finalizer; bijective on uint64 scalars or arrays."""
    z = (z ^ (z >> np.uint64(30))) * _SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SM_MUL2
    return z ^ (z >> np.uint64(31))


def _child_ids(stream_id, indices):
    """Stream ids of the children of ``stream_id`` at the given indices."""
    base = _mix64(np.asarray([stream_id & _MASK64], dtype=np.uint64))
    idx = np.asarray(indices, dtype=np.uint64)
    return _mix64(base + _SM_GAMMA * (idx + np.uint64(1)))


def stream_tag(name: str) -> int:
    """Map a label to a substream index, for namespacing by purpose."""
    h = np.zeros(1, dtype=np.uint64)
    for b in name.encode("utf-8"):
        h = _mix64(h ^ np.uint64(b))
    return int(h[0])


def _mulhilo(m, x):
    # 64x64 -> 128 bit multiply via 32-bit partial products.
    lo = m * x
    m_lo, m_hi = m & _MASK32, m >> _S32
    x_lo, x_hi = x & _MASK32, x >> _S32
    ll = m_lo * x_lo
    lh = m_lo * x_hi
    hl = m_hi * x_lo
    mid = (ll >> _S32) + (lh & _MASK32) + (hl & _MASK32)
    hi = m_hi * x_hi + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, lo


def philox_block(c0, c1, c2, c3, k0, k1):
    """Philox 4x64-10: four output words per counter block.

    Inputs are uint64 arrays (or scalars) and broadcast elementwise.  Matches
    ``numpy.random.Philox`` applied to the same counter and key.
    """
    # 1-d at minimum: numpy wraps array overflow silently but warns on scalars.
    c0, c1, c2, c3, k0, k1 = (
        np.atleast_1d(np.asarray(v, dtype=np.uint64)) for v in (c0, c1, c2, c3, k0, k1)
    )
    for r in range(10):
        if r:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _uniform53(words):
    # 53-bit uniforms on [0, 1), the same conversion numpy uses.
    return (words >> np.uint64(11)).astype(np.float64) * _INV53


def _normal(words):
    # One standard normal per word: Box-Muller on the two 32-bit halves.
    u1 = ((words >> _S32).astype(np.float64) + 0.5) * _INV32
    u2 = ((words & _MASK32).astype(np.float64) + 0.5) * _INV32
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class RngStream:
    """Identity of a random number stream.

    Distinct ``(seed, stream_id)`` pairs give statistically independent
    streams; equal pairs replay identically.  A stream is consumed through
    :class:`ParticleStreams` or :class:`SingleStream`; the value itself is
    just a name and is cheap to pass around.
    """

    seed: int
    stream_id: int = 0

    def substream(self, index: int) -> "RngStream":
        """Child stream at ``index``; children of distinct parents differ."""
        return RngStream(self.seed, int(_child_ids(self.stream_id, [index & _MASK64])[0]))


class ParticleStreams:
    """Vectorized per-lane streams, one child stream per lane.

    Lane ``j`` consumes the words of ``base.substream(j)`` in order, no
    matter how draws are batched across lanes.  ``rows`` arguments select
    the lanes taking part in a draw.
    """

    def __init__(self, base: RngStream, n: int):
        if n < 1:
            raise ValueError("need at least one lane")
        self.n = n
        self._k0 = np.uint64(base.seed & _MASK64)
        self._k1 = _ZERO
        self._sids = _child_ids(base.stream_id, np.arange(n))
        self._pos = np.zeros(n, dtype=np.uint64)  # next word index per lane

    def _words(self, rows, start, count):
        """Words ``start[j] .. start[j]+count-1`` for each selected lane."""
        first_block = start >> np.uint64(2)
        offset = (start & np.uint64(3)).astype(np.int64)
        nblocks = int((int(offset.max()) + count + 3) // 4)
        blocks = first_block[:, None] + np.arange(nblocks, dtype=np.uint64)[None, :]
        sids = self._sids[rows][:, None]
        w0, w1, w2, w3 = philox_block(blocks, _ZERO, sids, _ZERO, self._k0, self._k1)
        words = np.stack([w0, w1, w2, w3], axis=2).reshape(len(start), 4 * nblocks)
        take = offset[:, None] + np.arange(count, dtype=np.int64)[None, :]
        return np.take_along_axis(words, take, axis=1)

    def peek_words(self, rows, count):
        """Next ``count`` words per selected lane without consuming them."""
        return self._words(rows, self._pos[rows], count)

    def advance(self, rows, counts):
        """Consume ``counts`` words per selected lane (scalar or per-lane)."""
        self._pos[rows] += np.asarray(counts, dtype=np.uint64)

    def draw_words(self, rows, count):
        out = self.peek_words(rows, count)
        self.advance(rows, count)
        return out

    def standard_normal(self, rows):
        """One N(0,1) draw per selected lane."""
        return _normal(self.draw_words(rows, 1)[:, 0])

    def random(self, rows):
        """One uniform [0,1) draw per selected lane."""
        return _uniform53(self.draw_words(rows, 1)[:, 0])


class SingleStream:
    """A single stream consumed sequentially, in batches of any size."""

    def __init__(self, base: RngStream):
        self._k0 = np.uint64(base.seed & _MASK64)
        self._k1 = _ZERO
        self._sid = _child_ids(base.stream_id, [0])
        self._pos = np.zeros(1, dtype=np.uint64)

    def _draw(self, size):
        offset = int(self._pos[0] & np.uint64(3))
        nblocks = (offset + size + 3) // 4
        blocks = self._pos[:1] // np.uint64(4) + np.arange(nblocks, dtype=np.uint64)
        w0, w1, w2, w3 = philox_block(blocks, _ZERO, self._sid, _ZERO, self._k0, self._k1)
        words = np.stack([w0, w1, w2, w3], axis=1).reshape(4 * nblocks)
        self._pos += np.uint64(size)
        return words[offset:offset + size]

    def random(self, size: int) -> np.ndarray:
        return _uniform53(self._draw(size))

    def standard_normal(self, size: int) -> np.ndarray:
        return _normal(self._draw(size))


class PrefetchedDraws:
    """Draw context serving a fixed word budget, column by column.

    Used inside vectorized rejection sampling, where every attempt has a
    fixed per-lane word budget so attempts can be batched.  Raises if a
    sampler asks for more draws than the budget allows.
    """

    def __init__(self, words):
        self._words = words
        self._col = 0

    @property
    def size(self) -> int:
        return self._words.shape[0]

    def _next(self):
        if self._col >= self._words.shape[1]:
            raise RuntimeError(
                "draw budget exceeded: model samplers may use at most one "
                "variate per state within a rejection window"
            )
        col = self._words[:, self._col]
        self._col += 1
        return col

    def standard_normal(self) -> np.ndarray:
        return _normal(self._next())

    def random(self) -> np.ndarray:
        return _uniform53(self._next())


class LiveDraws:
    """Draw context pulling variates on demand for a fixed set of lanes."""

    def __init__(self, streams: ParticleStreams, rows):
        self._streams = streams
        self._rows = rows

    @property
    def size(self) -> int:
        return len(self._rows)

    def standard_normal(self) -> np.ndarray:
        return self._streams.standard_normal(self._rows)

    def random(self) -> np.ndarray:
        return self._streams.random(self._rows)
