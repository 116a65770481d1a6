import numpy as np
import pytest

from localcap import MapExtent, SirParams


@pytest.fixture
def params10_4():
    return SirParams(K=10.0, alpha=4.0)


@pytest.fixture
def desk_extent():
    return MapExtent(1000.0)


def random_config(rng, n=8, scale=100.0, alpha=4.0):
    """Small random transmitter set wrapped in a FieldContext."""
    from localcap import FieldContext, TransmitterSet

    pts = rng.uniform(-scale / 2, scale / 2, size=(n, 2))
    ts = TransmitterSet(pts, MapExtent(scale))
    return FieldContext(ts, SirParams(K=10.0, alpha=alpha),
                        interference_cutoff=np.inf)
