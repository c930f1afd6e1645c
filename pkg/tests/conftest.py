import pytest

from bikevolume.core import Window
from bikevolume.ingest import SyntheticConfig, generate_synthetic_city, reconstruct_trips
from bikevolume.pipeline import assemble, clean_trips, route_trips

CITY_SEED = 7


def cleaned_trips(bundle):
    trips = list(bundle.trips) + reconstruct_trips(bundle.snapshots)
    return clean_trips(route_trips(bundle.street_graph, trips))


@pytest.fixture(scope="session")
def city():
    """The default synthetic city (20 long-term stations x 200 days)."""
    return generate_synthetic_city(CITY_SEED)


@pytest.fixture(scope="session")
def city_trips(city):
    return cleaned_trips(city[0])


@pytest.fixture(scope="session")
def city_table(city, city_trips):
    return assemble(city[0], city_trips[0], Window.FULL_DAY)


@pytest.fixture(scope="session")
def daytime_table(city, city_trips):
    return assemble(city[0], city_trips[0], Window.DAYTIME)


@pytest.fixture(scope="session")
def small_city():
    cfg = SyntheticConfig(n_long=6, n_short=2, n_days=24, n_paired=2, grid_lines=6, trips_per_day=15,
                          n_poi=80, n_detectors=6, short_term_dates=4)
    return generate_synthetic_city(3, cfg)


@pytest.fixture(scope="session")
def small_table(small_city):
    bundle = small_city[0]
    return assemble(bundle, cleaned_trips(bundle)[0], Window.FULL_DAY)


# (criterion, verdict line) collected by the acceptance suite, shown after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
