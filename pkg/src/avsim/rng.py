"""Named deterministic random streams.

Every consumer of randomness pulls from its own named stream so that adding
or removing one consumer never shifts the draws seen by another. Stream
seeds are derived from the master seed by a domain-separated hash:

    material = blake2b(stream_name, key=little_endian_u64(seed),
                       person=b"avsim.rng", digest_size=32)

and the 8 little-endian u32 words of the digest feed a numpy SeedSequence
backing a PCG64 generator. Streams materialize on first use; the full set
of materialized stream states is snapshot/restorable bit-exactly.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _stream_words(seed: int, name: str) -> list[int]:
    digest = hashlib.blake2b(
        name.encode("utf-8"),
        key=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"),
        person=b"avsim.rng",
        digest_size=32,
    ).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]


class NamedStreams:
    """Lazily materialized, independently seeded PCG64 streams."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gens: dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        gen = self._gens.get(name)
        if gen is None:
            seq = np.random.SeedSequence(_stream_words(self.seed, name))
            gen = np.random.Generator(np.random.PCG64(seq))
            self._gens[name] = gen
        return gen

    def choice_index(self, name: str, n: int) -> int:
        """Uniform draw in [0, n) from the named stream."""
        if n <= 0:
            raise ValueError("empty choice")
        return int(self.stream(name).integers(n))

    def state_dict(self) -> dict:
        states = {}
        for name in sorted(self._gens):
            st = self._gens[name].bit_generator.state
            states[name] = {
                "state": int(st["state"]["state"]),
                "inc": int(st["state"]["inc"]),
                "has_uint32": int(st["has_uint32"]),
                "uinteger": int(st["uinteger"]),
            }
        return {"seed": self.seed, "streams": states}

    @classmethod
    def from_state_dict(cls, data: dict) -> "NamedStreams":
        rng = cls(int(data["seed"]))
        for name, st in data["streams"].items():
            gen = np.random.Generator(np.random.PCG64())
            gen.bit_generator.state = {
                "bit_generator": "PCG64",
                "state": {"state": int(st["state"]), "inc": int(st["inc"])},
                "has_uint32": int(st["has_uint32"]),
                "uinteger": int(st["uinteger"]),
            }
            rng._gens[name] = gen
        return rng
