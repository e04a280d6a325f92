import functools

from tractdim.tractgeom import bundled_constants as _bundled


@functools.lru_cache(maxsize=None)
def bundled_constants(p: float):
    """Cached access to the calibrated constants shipped with the package."""
    return _bundled(p)
