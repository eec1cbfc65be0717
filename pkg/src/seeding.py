"""Module for deriving named random streams from a single run seed.

"""
import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Get the random generator of a named substream.

    Stages draw from their own substream so that any stage can be rerun
    on its own and still reproduce its outputs.

    Parameters
    ----------
    seed : int
        The run seed.
    name : str
        The substream name (e.g. "data", "init", "pgd").

    Returns
    -------
    np.random.Generator
        The generator of the substream.

    """
    return np.random.default_rng(
        np.random.SeedSequence([seed, zlib.crc32(name.encode('utf-8'))]))
