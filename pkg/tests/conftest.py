from pathlib import Path

import numpy as np
import pytest

from datamarket.core import DataSet, Provenance, Role
from datamarket.flow import BuySpec, Market, SellSpec
from datamarket.licensing import License, Lifespan, Purpose
from datamarket.risk import HarmImpactVector

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GOLDEN = SCENARIOS / "golden.json"
GOLDEN_EXCLUSIVE = SCENARIOS / "golden_exclusive.json"

FIG2 = HarmImpactVector(4, 5, 2)


def make_dataset(n=200, seed=0, category="activity/walking",
                 provenance=Provenance.DIRECTLY_PROVIDED, fields=2):
    rng = np.random.default_rng(seed)
    values = rng.normal(50.0, 10.0, (n, fields))
    names = [f"f{i}" for i in range(fields)]
    return DataSet(np.arange(n), values, names, category, provenance)


def make_license(exclusive=False, lifespan=Lifespan.of(90), uses=None, resale=False,
                 third_party=False, **kw):
    if uses is None:
        uses = {Purpose.PRODUCT_OPTIMIZATION, Purpose.RESEARCH_AGGREGATE}
    uses = set(uses)
    if resale:
        uses.add(Purpose.RESALE)
    if third_party:
        uses.add(Purpose.THIRD_PARTY_INFERENCE)
    return License(kw.pop("license_id", "lic"), exclusive, lifespan, frozenset(uses),
                   resale, third_party, **kw)


@pytest.fixture
def market():
    m = Market()
    m.register("seller", [Role.SELLER])
    m.register("seller2", [Role.SELLER])
    m.register("buyer", [Role.BUYER])
    m.register("buyer2", [Role.BUYER])
    return m


def list_product(market, seller="seller", n=200, noise=0.0, exclusive=False, seed=0,
                 data=None, **kw):
    market.identify(seller)
    data = data if data is not None else make_dataset(n, seed)
    spec = SellSpec(seller, data, FIG2, noise, make_license(exclusive=exclusive), **kw)
    return market.generate_product(spec)


def buy_spec(buyer="buyer", **kw):
    kw.setdefault("max_price_per_point", 100.0)
    return BuySpec(buyer, kw.pop("category", "activity/walking"), **kw)


# -- acceptance summary: one pass/fail line per criterion ---------------------

_criteria: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = {}
_owner: dict[str, int] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            number, title = mark.args
            _criteria[number] = title
            _owner[item.nodeid] = number


def pytest_runtest_logreport(report):
    number = _owner.get(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _outcomes.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _outcomes.get(number)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status:<7} {_criteria[number]}")
