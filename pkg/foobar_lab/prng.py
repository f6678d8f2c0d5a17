#!/usr/bin/env python
# coding: utf8

"""
Seeded pseudo random generator shared by every stochastic step of the
laboratory (weight initialization, batch order, fault decisions).

The generator is splitmix64 used in counter mode: the i-th output (1-based)
of a generator seeded with ``s`` is ``mix(s + i * GAMMA)`` where ``mix`` is

```
z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
z = (z ^ (z >> 27)) * 0x94D049BB133111EB
z = z ^ (z >> 31)
```

all arithmetic being modulo 2^64. Uniform reals are ``(z >> 11) * 2^-53``.
Any implementation of these few lines reproduces every draw of a run.
"""

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
MASK_64 = 0xFFFFFFFFFFFFFFFF

_U64 = np.uint64


def mix64(value):
    """Apply the splitmix64 finalizer to a python integer.

    Parameters
    ----------
    value:
        Integer state, reduced modulo 2^64.

    Returns
    -------
    mixed:
        Mixed 64 bits integer.
    """
    z = value & MASK_64
    z = ((z ^ (z >> 30)) * MIX_1) & MASK_64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK_64
    return z ^ (z >> 31)


def _mix64_array(states):
    with np.errstate(over='ignore'):
        z = states
        z = (z ^ (z >> _U64(30))) * _U64(MIX_1)
        z = (z ^ (z >> _U64(27))) * _U64(MIX_2)
        return z ^ (z >> _U64(31))


class SplitMix64(object):
    """Counter based splitmix64 stream.

    The stream position is the number of outputs drawn so far, so that
    drawing ``n`` values at once or one by one yields the same sequence.
    """

    def __init__(self, seed):
        """Default constructor.

        Parameters
        ----------
        seed:
            Non negative 64 bits seed.
        """
        if seed < 0 or seed > MASK_64:
            raise ValueError('Seed shall be an unsigned 64 bits integer')
        self.seed = int(seed)
        self.position = 0

    def derive(self, stream):
        """Create an independent generator for the given stream identifier.

        Parameters
        ----------
        stream:
            Small integer naming the sub stream.

        Returns
        -------
        generator:
            New generator, positioned at its start.
        """
        return SplitMix64(mix64(self.seed ^ ((stream * GAMMA) & MASK_64)))

    def next_uint64s(self, count):
        """Draw the next ``count`` raw outputs.

        Parameters
        ----------
        count:
            Number of outputs to draw.

        Returns
        -------
        values:
            numpy ``uint64`` array of length ``count``.
        """
        counters = np.arange(self.position + 1, self.position + count + 1,
                             dtype=np.uint64)
        with np.errstate(over='ignore'):
            states = _U64(self.seed) + counters * _U64(GAMMA)
        self.position += count
        return _mix64_array(states)

    def next_uint64(self):
        """Draw a single raw output as a python integer."""
        return int(self.next_uint64s(1)[0])

    def uniforms(self, count):
        """Draw ``count`` reals uniformly distributed in [0, 1)."""
        values = self.next_uint64s(count) >> _U64(11)
        return values.astype(np.float64) * (2.0 ** -53)

    def uniform(self, low=0.0, high=1.0, size=None):
        """Draw reals uniformly distributed in [low, high).

        Parameters
        ----------
        low:
            Lower bound.
        high:
            Upper bound.
        size:
            Output shape, a single float is returned if not specified.
        """
        if size is None:
            return low + (high - low) * float(self.uniforms(1)[0])
        count = int(np.prod(size))
        return (low + (high - low) * self.uniforms(count)).reshape(size)

    def shuffle(self, indices):
        """Fisher-Yates shuffle of the given sequence, returned as a new
        numpy array. Position ``i`` (from last to 1) is swapped with
        ``floor(u * (i + 1))``.
        """
        order = list(indices)
        count = len(order)
        if count < 2:
            return np.asarray(order, dtype=np.int64)
        draws = self.uniforms(count - 1)
        bounds = np.arange(count, 1, -1, dtype=np.float64)
        partners = np.floor(draws * bounds).astype(np.int64).tolist()
        for step, i in enumerate(range(count - 1, 0, -1)):
            j = partners[step]
            order[i], order[j] = order[j], order[i]
        return np.asarray(order, dtype=np.int64)
