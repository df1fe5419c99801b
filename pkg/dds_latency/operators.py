"""
Stochastic event operators on the unacked-count distribution.

A publish convolves the distribution with the binomial count of lost fragments.
A heartbeat mixes the unchanged distribution with the retransmission kernel, weighted by
the probability that both the heartbeat and its AckNack get through.
"""
import math

import numpy as np
from scipy import sparse
from scipy.stats import binom

from logger import info_logger
from .errors import DomainError
from .model import UnackedDistribution

# Above this count the direct formula risks overflowing the binomial coefficient
_DIRECT_LIMIT = 1000


def pr_fail(x, y, p):
    """
    Probability that exactly x out of y packets fail.

    Params:
        x (int): Number of failed packets.
        y (int): Number of packets sent.
        p (float): Per-packet delivery probability.

    Returns:
        float: C(y, x) * p^(y-x) * (1-p)^x
    """
    if y < 0 or x < 0 or x > y:
        raise DomainError(f"pr_fail needs 0 <= x <= y, got x={x}, y={y}")
    if p == 1.0:
        return 1.0 if x == 0 else 0.0
    if y <= _DIRECT_LIMIT:
        return math.comb(y, x) * p ** (y - x) * (1.0 - p) ** x
    return float(binom.pmf(x, y, 1.0 - p))


def fail_row(y, p):
    """
    pr_fail(x, y, p) for every x = 0..y as an array.
    """
    if y <= _DIRECT_LIMIT:
        return np.array([pr_fail(x, y, p) for x in range(y + 1)])
    row = binom.pmf(np.arange(y + 1), y, 1.0 - p)
    row[0] = p ** y
    return row


def pub_apply(P, u, p):
    """
    Distribution after one publish of u packets.

    Params:
        P (UnackedDistribution): Distribution before the publish.
        u (int): Packets per publish.
        p (float): Per-packet delivery probability.

    Returns:
        UnackedDistribution: Support grows by u; index 0 equals P[0] * p^u exactly.
    """
    kernel = fail_row(u, p)
    probs = np.convolve(P.probs, kernel)
    return UnackedDistribution(probs, tail_mass=P.tail_mass)


def gamma_kernel(x, k, cap_M, p):
    """
    Probability that x unacked messages become k after one retransmission round.

    The x messages go out in f = ceil(x / cap_M) packets, the last of which carries
    n = x mod cap_M messages when n is not zero.

    Params:
        x (int): Unacked messages before the retransmission.
        k (int): Unacked messages after it.
        cap_M (int): Messages per retransmission packet.
        p (float): Per-packet delivery probability.

    Returns:
        float: The transition probability.
    """
    if k > x or k < 0:
        return 0.0
    f = -(-x // cap_M)
    n = x % cap_M
    if x == k:
        return (1.0 - p) ** f
    if n == 0:
        if k % cap_M:
            return 0.0
        return pr_fail(k // cap_M, f, p)
    total = 0.0
    # residual packet delivered, k/cap_M of the full packets lost
    if k % cap_M == 0:
        total += p * pr_fail(k // cap_M, f - 1, p)
    # residual packet lost
    if k >= n and (k - n) % cap_M == 0:
        total += (1.0 - p) * pr_fail((k - n) // cap_M, f - 1, p)
    return total


def _gamma_row(x, cap_M, p):
    # Nonzero targets and probabilities of gamma_kernel(x, ., cap_M, p)
    f = -(-x // cap_M)
    n = x % cap_M
    if n == 0:
        targets = np.arange(f + 1) * cap_M
        values = fail_row(f, p)
        values[f] = (1.0 - p) ** f
        return targets, values
    full = fail_row(f - 1, p)
    delivered = np.arange(f) * cap_M
    lost = n + np.arange(f) * cap_M
    targets = np.concatenate([delivered, lost])
    values = np.concatenate([p * full, (1.0 - p) * full])
    values[-1] = (1.0 - p) ** f
    return targets, values


class HeartbeatKernel:
    """
    Memoized retransmission matrix for one (cap_M, p) pair.

    The transposed kernel is kept in CSR form and grown to the next power of two
    whenever a longer distribution comes in.
    """

    def __init__(self, cap_M, p):
        self.cap_M = cap_M
        self.p = p
        self.size = 0
        self._transposed = None

    def _build(self, size):
        rows, cols, vals = [np.zeros(1, dtype=int)], [np.zeros(1, dtype=int)], [np.ones(1)]
        for x in range(1, size):
            targets, values = _gamma_row(x, self.cap_M, self.p)
            keep = values != 0.0
            cols.append(targets[keep])
            rows.append(np.full(int(keep.sum()), x))
            vals.append(values[keep])
        matrix = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(cols), np.concatenate(rows))), shape=(size, size)
        )
        info_logger.info(f"heartbeat kernel cap_M={self.cap_M} p={self.p:g} built for {size} states")
        return matrix

    def transposed(self, size):
        if size > self.size:
            self.size = 1 << max(6, math.ceil(math.log2(size)))
            self._transposed = self._build(self.size)
        return self._transposed

    def retransmit(self, probs):
        """
        Distribution of the unacked count after a retransmission round that surely happens.
        """
        size = probs.size
        padded = np.zeros(self.transposed(size).shape[0])
        padded[:size] = probs
        return (self._transposed @ padded)[:size]

    def matrix(self, size):
        """
        Dense Gamma matrix, G[x, k] = gamma_kernel(x, k), for inspection and tests.
        """
        return self.transposed(size)[:size, :size].T.toarray()


def hb_apply(P, cap_M, p, kernel=None):
    """
    Distribution after one heartbeat.

    Params:
        P (UnackedDistribution): Distribution before the heartbeat.
        cap_M (int): Messages per retransmission packet.
        p (float): Per-packet delivery probability.
        kernel (HeartbeatKernel): Memoized kernel to reuse across calls, built on the fly if omitted.

    Returns:
        UnackedDistribution: (1 - p^2) * P + p^2 * (P @ Gamma)
    """
    if kernel is None:
        kernel = HeartbeatKernel(cap_M, p)
    elif kernel.cap_M != cap_M or kernel.p != p:
        raise ValueError("heartbeat kernel built for other parameters")
    return UnackedDistribution(hb_step(P.probs, kernel), tail_mass=P.tail_mass)


def hb_step(probs, kernel):
    """
    hb_apply on a bare probability vector, for the inner loops of the solver and the latency series.
    """
    p = kernel.p
    moved = kernel.retransmit(probs)
    # written as P + p^2 (moved - P) so index 0 never decreases under rounding
    out = probs + p * p * (moved - probs)
    np.maximum(out, 0.0, out=out)
    return out

