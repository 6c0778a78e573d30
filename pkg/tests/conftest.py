import pytest

from orienteer import Instance


@pytest.fixture
def four_node():
    """Depot s=(0,0), a=(1,0), b=(0,1), c=(-1,0) at 60 km/h: one km per minute."""
    return Instance(
        coords=((0, 0), (1, 0), (0, 1), (-1, 0)),
        scores=(0, 5, 3, 4),
        depot=0,
        velocity_kmh=60.0,
        budget_min=3.5,
    )


@pytest.fixture
def two_cluster():
    """A cheap score-rich pair far from the depot plus one heavy node on the other side.

    Without cuts the best flow is depot->d->depot plus the detached 2-cycle
    b<->c; after cutting {b, c} the optimum is the tour through the pair.
    """
    return Instance(
        coords=((0, 0), (1, 0), (1, 0.05), (-1, 0)),
        scores=(0, 6, 6, 10),
        depot=0,
        velocity_kmh=60.0,
        budget_min=2.15,
    )
