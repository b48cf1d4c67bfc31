"""Positioned random-number streams for episode simulation.

Every random quantity an episode consumes is addressed by coordinates
instead of by draw order: reward noise by (round, player), policy samples
by (round, player, arm), tie-breaks by (round, player). The value at a
coordinate is a pure function of the stream key and the coordinate, so
iterating active players in a different order (or skipping inactive ones)
can never change anyone else's draw. This is what makes the within-round
simultaneity of the protocol testable.

Streams are backed by counter-based Philox generators: block b of a stream
is generated with the counter jumped to ``b << 128``, which keeps blocks
non-overlapping without serial state.
"""

import numpy as np
from scipy.special import ndtri

DEFAULT_BLOCK = 1024


def as_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class PositionedStream:
    """Uniform variates of a fixed per-round shape, addressable by round.

    Rounds are grouped in blocks of ``block`` consecutive rounds; one block
    is cached at a time, which keeps per-round access cheap for sequential
    sweeps while staying random-access correct.
    """

    def __init__(self, seed_seq, shape, block=DEFAULT_BLOCK):
        self._key = seed_seq.generate_state(2, np.uint64)
        self._shape = tuple(int(s) for s in shape)
        self._block = int(block)
        self._cached_block = -1
        self._uniforms = None
        self._normals = None

    def _load(self, block_index):
        bitgen = np.random.Philox(key=self._key, counter=block_index << 128)
        gen = np.random.Generator(bitgen)
        self._uniforms = gen.random((self._block,) + self._shape)
        self._normals = None
        self._cached_block = block_index

    @property
    def block_size(self):
        return self._block

    def uniform_block(self, block_index):
        """The whole uniform block covering rounds
        [block_index * block_size + 1, (block_index + 1) * block_size].
        Callers must treat the returned array as read-only."""
        if block_index != self._cached_block:
            self._load(block_index)
        return self._uniforms

    def uniforms(self, t):
        """Uniform[0,1) values for 1-based round ``t``, shape ``self._shape``."""
        b, off = divmod(t - 1, self._block)
        if b != self._cached_block:
            self._load(b)
        return self._uniforms[off]

    def normals(self, t):
        """Standard normals for round ``t`` via the inverse Gaussian CDF.

        Each normal is the ndtri image of the positioned uniform at the same
        coordinate, so one uniform backs exactly one normal.
        """
        b, off = divmod(t - 1, self._block)
        if b != self._cached_block:
            self._load(b)
        if self._normals is None:
            self._normals = ndtri(self._uniforms)
        return self._normals[off]


class EpisodeStreams:
    """The independent sub-streams one episode consumes.

    A single seed fans out to a reward stream keyed by (t, p), a policy
    sampling stream keyed by (t, p, i), and a tie-break stream keyed by
    (t, p). Distinct purposes never share draws.
    """

    def __init__(self, seed, num_players, num_arms, block=DEFAULT_BLOCK):
        root = as_seed_sequence(seed)
        reward_ss, policy_ss, tie_ss = root.spawn(3)
        self.reward = PositionedStream(reward_ss, (num_players,), block=block)
        self.policy = PositionedStream(policy_ss, (num_players, num_arms), block=block)
        self.tie = PositionedStream(tie_ss, (num_players,), block=block)
        self.num_players = num_players
        self.num_arms = num_arms
