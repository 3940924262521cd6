import datetime as dt

import pytest

from polab.synth import RegimeSpec, generate


@pytest.fixture(scope="session")
def small_scenario(tmp_path_factory):
    """A compact two-day, twelve-stock Poisson scenario shared across tests."""
    out = tmp_path_factory.mktemp("scenario")
    regime = RegimeSpec(
        "flow",
        buy_rate=1.1,
        sell_rate=0.9,
        mean_fills=1.6,
        coupling=1.5,
        bars=tuple(range(1, 238, 3)),
    )
    files, truth = generate(
        regime,
        n_stocks=12,
        dates=[dt.date(2015, 5, 4), dt.date(2015, 5, 5)],
        seed=99,
        out_dir=out,
    )
    return files, truth


@pytest.fixture(scope="session")
def small_panel(small_scenario):
    from polab.panel import PolarityPanel

    files, _ = small_scenario
    return PolarityPanel.from_transactions(files.transactions)
