"""Named, counter-based random streams.

Every generator and the trainer draw randomness through :class:`SeededRng`
so that a (seed, stream-label) pair always yields the same values, no matter
in which order the streams are consumed or on which platform. Streams are
backed by Philox, keyed by a hash of the label path, so sub-streams can be
split freely without coordination.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def _stream_key(seed: int, stream: str) -> int:
    digest = hashlib.blake2b(
        f"{seed:#x}:{stream}".encode("utf-8"), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeededRng:
    """A named draw stream derived from (seed, stream label).

    `generator()` returns a fresh numpy Generator positioned at the start of
    the stream; calling it twice gives identical draw sequences.
    """

    seed: int
    stream: str = "root"

    def child(self, *labels: object) -> "SeededRng":
        path = "/".join(str(x) for x in labels)
        return SeededRng(self.seed, f"{self.stream}/{path}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=_stream_key(self.seed, self.stream)))
