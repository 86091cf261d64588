# src/netsim/beacon.py
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from src.utils.logger import get_logger

logger = get_logger(__name__)


class BeaconDraw(NamedTuple):
    index: int
    kind: str
    value: object
    purpose: str


class RunStreams(NamedTuple):
    """Independent random streams of one run."""
    measurement: np.random.Generator
    beacon: np.random.Generator
    protocol: np.random.Generator
    adversary: np.random.Generator


def run_streams(seed: int, adv_seed: Optional[int] = None) -> RunStreams:
    """
    Splits a run seed into measurement, beacon and protocol streams. The
    adversary stream comes from its own seed so strategy randomness never
    shifts honest sampling.
    """
    measurement, beacon, protocol = np.random.SeedSequence(seed).spawn(3)
    adversary = np.random.SeedSequence(seed if adv_seed is None else adv_seed).spawn(4)[3]
    return RunStreams(np.random.default_rng(measurement), np.random.default_rng(beacon),
                      np.random.default_rng(protocol), np.random.default_rng(adversary))


class Beacon:
    """
    Public source of randomness. Every draw is logged; all nodes see the
    same values because there is exactly one stream.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.log: List[BeaconDraw] = []

    def _record(self, kind: str, value, purpose: str):
        self.log.append(BeaconDraw(len(self.log), kind, value, purpose))
        logger.debug(f"Beacon {kind} for {purpose}: {value}")
        return value

    def draw_bit(self, purpose: str = "") -> int:
        return self._record("bit", int(self.rng.integers(2)), purpose)

    def draw_node(self, n: int, exclude: Sequence[int] = (), purpose: str = "") -> int:
        """Uniform node id from [n] minus `exclude`; falls back to all of [n] when everything is excluded."""
        candidates = [i for i in range(1, n + 1) if i not in set(exclude)] or list(range(1, n + 1))
        return self._record("node", int(candidates[int(self.rng.integers(len(candidates)))]), purpose)

    def draw_subset(self, population: Sequence[int], size: int, purpose: str = "") -> List[int]:
        population = list(population)
        if size > len(population):
            raise ValueError(f"cannot choose {size} of {len(population)}")
        picked = self.rng.choice(len(population), size=size, replace=False)
        return self._record("subset", sorted(int(population[i]) for i in picked), purpose)
