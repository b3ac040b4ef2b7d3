"""Deterministic stream derivation on top of the Philox counter generator.

Stream policy ``philox-blocks-v1``: the root seed fills the 128-bit Philox
key, and a (role, step) pair selects one substream through the counter
words. A particle's draws are the rows of the block drawn from that
substream, so row r is the same no matter how many rows are requested, in
how many chunks they are generated, or how many worker threads consume
them: blocks are produced sequentially from a single substream and Philox
output is a pure function of (key, counter). Every reproducibility claim
downstream rests on this rule.
"""

import numpy as np

STREAM_POLICY = "philox-blocks-v1"

# Role words keep independent uses of one seed on disjoint counter ranges.
ROLE_INCREMENT = 1      # Euler-Maruyama Gaussian increments
ROLE_DRIFT = 2          # Monte-Carlo drift batches
ROLE_GROUND_TRUTH = 3   # ground-truth sampling
ROLE_PROJECTION = 4     # sliced-metric directions
ROLE_ULA_INIT = 5       # Langevin chain initialization
ROLE_ULA_STEP = 6       # Langevin iteration noise
ROLE_DERIVE = 7         # child-seed derivation (harness cells, noise floors)
ROLE_SEMIGROUP = 8      # direct heat-semigroup estimates
ROLE_PROBE = 9          # regularity probe points

_MASK64 = (1 << 64) - 1
MAX_SEED = (1 << 128) - 1


def check_seed(seed):
    """Validate a root seed and return it as a plain int."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if seed < 0 or seed > MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2**128), got {seed}")
    return seed


def substream(seed, role, step=0):
    """Generator for the (seed, role, step) substream.

    Args:
        seed: root seed, integer in [0, 2**128).
        role: one of the ROLE_* constants.
        step: step or iteration index within that role.
    """
    seed = check_seed(seed)
    if not 0 <= int(role) <= _MASK64 or not 0 <= int(step) <= _MASK64:
        raise ValueError("role and step must be non-negative 64-bit integers")
    key = np.array([seed & _MASK64, seed >> 64], dtype=np.uint64)
    counter = np.array([0, 0, int(role), int(step)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def normal_rows(seed, role, step, n_rows, row_shape=()):
    """Draw the first n_rows rows of a block, one row per particle index."""
    gen = substream(seed, role, step)
    return gen.standard_normal((int(n_rows),) + tuple(row_shape))


def normal_row(seed, role, step, row_index, row_shape=()):
    """Materialize the single row ``row_index`` of a block.

    Draws and discards the prefix, so the cost grows linearly with
    row_index. Meant for direct drift calls and spot checks on grid-sized
    index ranges, not for hot loops.
    """
    row_index = int(row_index)
    if row_index < 0:
        raise ValueError("row_index must be non-negative")
    width = 1
    for d in row_shape:
        width *= int(d)
    gen = substream(seed, role, step)
    if row_index:
        gen.standard_normal(row_index * width)
    return gen.standard_normal(width).reshape(tuple(row_shape))


def child_seeds(seed, step, count):
    """Derive ``count`` child seeds from (seed, step), for nested runs."""
    gen = substream(seed, ROLE_DERIVE, step)
    vals = gen.integers(0, 1 << 63, size=int(count), dtype=np.uint64)
    return [int(v) for v in vals]
