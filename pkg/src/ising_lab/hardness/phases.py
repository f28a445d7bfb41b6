"""Gadget phases and phase vectors of composite configurations."""
from typing import Sequence, Tuple, Union

import numpy as np

from src.ising_lab.core.models import Graph, SpinConfig
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.hardness.gadget import Gadget

Spins = Union[SpinConfig, np.ndarray, Sequence[int]]


def _as_array(config: Spins) -> np.ndarray:
    if isinstance(config, SpinConfig):
        return config.as_array()
    return np.asarray(config, dtype=np.int8)


def phase_of_block(spins: np.ndarray, gadget: Gadget, offset: int = 0) -> int:
    """+1 if the U0 spins sum to more than zero, -1 if less; ties take the spin of u1."""
    total = int(spins[offset + np.asarray(gadget.u0, dtype=np.int64)].sum(dtype=np.int64))
    if total > 0:
        return 1
    if total < 0:
        return -1
    return int(spins[offset + gadget.u1])


def phase(gadget: Gadget, config: Spins) -> int:
    spins = _as_array(config)
    if len(spins) != gadget.graph.n:
        raise InvalidInputError(f"config has {len(spins)} spins but the gadget has {gadget.graph.n} vertices")
    return phase_of_block(spins, gadget)


def phase_vector(gadget: Gadget, h: int, config: Spins) -> Tuple[int, ...]:
    """Phase of every gadget copy in a composite whose copy x occupies vertices x*n_G .. (x+1)*n_G - 1."""
    spins = _as_array(config)
    n_G = gadget.graph.n
    if len(spins) < h * n_G:
        raise InvalidInputError(f"config has {len(spins)} spins, fewer than {h} gadget copies of {n_G}")
    return tuple(phase_of_block(spins, gadget, x * n_G) for x in range(h))


def cut_of_phase_vector(host: Graph, phases: Sequence[int]) -> int:
    """Number of host edges whose endpoints are in different phases."""
    if len(phases) != host.n:
        raise InvalidInputError(f"phase vector has {len(phases)} entries but the host has {host.n} vertices")
    return sum(1 for x, y in host.edges if phases[x] != phases[y])
