"""Rejection-sampling estimates of conditional probabilities.

Sequences are drawn in fixed-size chunks.  Chunk ``i`` uses the ``i``-th
child of ``SeedSequence(seed)`` with a Philox generator, so the result does
not depend on how many workers process the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conditioning import PrefixQuery, region_mask
from .core import Pmf
from .feasible import FeasibleSet, type_mask

CHUNK = 100_000
WORKERS_ENV = "TYPESLAB_WORKERS"


@dataclass(frozen=True)
class MCEstimate:
    samples: int
    accepted: int
    hits: int
    estimate: float | None
    stderr: float | None

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.samples

    def z_score(self, exact) -> float:
        """Deviation from ``exact`` in standard errors (``inf`` if the error is 0 but off)."""
        if self.estimate is None:
            raise ValueError("no accepted samples, nothing to compare")
        diff = abs(self.estimate - float(exact))
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _run_chunk(seed_seq, size, q, s, n, query):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    m = len(q)
    seqs = rng.choice(m, size=(size, n), p=q)
    counts = np.stack([(seqs == x).sum(axis=1) for x in range(m)], axis=1)
    keep = type_mask(s, counts)
    if isinstance(query, PrefixQuery):
        hit = np.all(seqs[keep, : query.t] == np.array(query.letters), axis=1)
    else:
        hit = region_mask(query, counts[keep])
    return int(keep.sum()), int(hit.sum())


def mc_conditional(q: Pmf, s: FeasibleSet, n: int, query, samples: int, seed: int,
                   workers: int | None = None) -> MCEstimate:
    """Estimate ``pi(query | type in s)`` from ``samples`` iid length-n sequences.

    ``query`` is a region (ball, type list, feasible set) or a
    :class:`PrefixQuery`.  With no accepted sequence the estimate is ``None``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if isinstance(query, PrefixQuery):
        query.check(s.m, n)
    qa = q.as_array()
    qa = qa / qa.sum()
    chunk = max(1, min(CHUNK, 5_000_000 // (n * len(q))))
    sizes = [chunk] * (samples // chunk)
    if samples % chunk:
        sizes.append(samples % chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(c, size, qa, s, n, query) for c, size in zip(children, sizes)]
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda job: _run_chunk(*job), jobs))
    else:
        results = [_run_chunk(*job) for job in jobs]
    accepted = sum(a for a, _ in results)
    hits = sum(h for _, h in results)
    if accepted == 0:
        return MCEstimate(samples, 0, 0, None, None)
    p = hits / accepted
    return MCEstimate(samples, accepted, hits, p, math.sqrt(p * (1 - p) / accepted))
