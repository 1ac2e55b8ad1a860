"""Randomly shifted line quadrature in the plane.

For kernels depending on |x - y|^{-2-s} the planar double integral splits
into lines: int_0^pi dtheta int dp L1(theta, p), where L1 is the 1-D
interaction of the traces on the line {p n(theta) + t d(theta)}.  Lines are
laid out on a jittered (theta, p) lattice over the family of lines hitting
a disk; independent shifts give replicate estimates and an error bar.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._chords import LineBatch


def thread_count(requested: int = 0) -> int:
    if requested and requested > 0:
        return int(requested)
    env = os.environ.get("FRACGEOM_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


@dataclass
class LineLayout:
    n_theta: int
    n_p: int
    replicates: int

    @property
    def n_lines(self):
        return self.n_theta * self.n_p * self.replicates


def layout(mc_samples: int, replicates: int, theta_share: float = 0.5) -> LineLayout:
    per = max(4, mc_samples // replicates)
    n_theta = max(2, int(round(per ** theta_share / 2)))
    n_p = max(2, int(math.ceil(per / n_theta)))
    return LineLayout(n_theta, n_p, replicates)


def crofton(fn, center, radius, quad, theta_share=0.5):
    """Integrate per-line values ``fn(lines) -> (k, m)`` over all lines.

    Returns ``(mean, err, replicate_values)`` with shapes (m,), (m,), (K, m).
    ``center, radius`` must bound the support of the integrand.
    """
    lay = layout(quad.mc_samples, quad.replicates, theta_share)
    rng = np.random.default_rng(quad.rng_seed)
    c = np.asarray(center, dtype=float)
    shifts = [(rng.random(), rng.random(lay.n_theta)) for _ in range(lay.replicates)]
    jobs = [(r, j) for r in range(lay.replicates) for j in range(lay.n_theta)]
    grid = (np.arange(lay.n_p)[None, :])

    def run(job):
        r, j = job
        ut, up = shifts[r]
        th = (j + ut) * math.pi / lay.n_theta
        d = np.array([math.cos(th), math.sin(th)])
        nrm = np.array([-d[1], d[0]])
        p = (c @ nrm) - radius + (grid[0] + up[j]) * (2 * radius / lay.n_p)
        O = p[:, None] * nrm[None, :] + (c @ d) * d[None, :]
        vals = np.asarray(fn(LineBatch(O, d)))
        return vals.sum(axis=0)

    nt = thread_count(quad.threads)
    if nt > 1:
        with ThreadPoolExecutor(nt) as ex:
            sums = list(ex.map(run, jobs))
    else:
        sums = [run(j) for j in jobs]
    sums = np.asarray(sums).reshape(lay.replicates, lay.n_theta, -1)
    w = (math.pi / lay.n_theta) * (2 * radius / lay.n_p)
    reps = w * sums.sum(axis=1)
    mean = reps.mean(axis=0)
    err = reps.std(axis=0, ddof=1) / math.sqrt(lay.replicates)
    return mean, err, reps
