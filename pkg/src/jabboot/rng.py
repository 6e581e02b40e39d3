"""Splittable counter-based random streams.

Every random draw in this package is made from a :class:`Stream`, a
counter-based Philox generator keyed by an integer seed plus a path of
integer ids (e.g. ``(pass, run, replicate)``).  Two streams with the same
key produce identical draws regardless of creation order, thread or
process, which is what makes the simulation harness reproducible under
any worker count.

Key layout used by the harness (documented here so results can be
re-derived):

* ``Stream(seed).child(pass_id, run_id)`` is the per-run stream,
* ``child(0)``   of a run stream drives series generation,
* ``child(1)``   drives the main bootstrap ensemble, replicate ``k``
  drawing from ``child(1, k)``,
* ``child(2, ci, i)`` drives jackknife deletion point ``i`` for the
  ``ci``-th deletion-width constant, replicate ``k`` of a fresh or
  top-up draw using ``child(2, ci, i, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


@dataclass(frozen=True)
class Stream:
    """A reproducible random stream identified by (seed, path)."""

    seed: int
    path: tuple[int, ...] = ()

    def child(self, *ids: int) -> "Stream":
        """Derive a sub-stream; distinct id paths give independent streams."""
        return Stream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> Generator:
        """Materialize a numpy Generator positioned at the stream start."""
        return Generator(Philox(SeedSequence(entropy=[self.seed, *self.path])))


def as_stream(obj: "Stream | int") -> Stream:
    """Coerce a raw integer seed to a root Stream."""
    if isinstance(obj, Stream):
        return obj
    return Stream(int(obj))
