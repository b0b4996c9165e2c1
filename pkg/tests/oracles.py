"""Independent reference implementations used by several test modules."""

import itertools

from datamarket.licensing import Purpose


def oracle(purpose, resale_ok, third_ok, other_uses, lifespan, granted_at, tick):
    """Truth table written out as ordered rules, first match wins."""
    permitted = set(other_uses)
    if resale_ok:
        permitted.add("Resale")
    if third_ok:
        permitted.add("ThirdPartyInference")
    expired = lifespan is not None and tick >= granted_at + lifespan
    rules = [
        (expired, "Expired"),
        (purpose == "Resale" and not resale_ok, "ProhibitedResale"),
        (purpose == "ThirdPartyInference" and not third_ok, "ThirdPartyExtraction"),
        (purpose not in permitted, "UnpermittedPurpose"),
    ]
    for hit, name in rules:
        if hit:
            return name
    return None


USE_SETS = [("ProductOptimization",), ("MarketingAnalytics", "ResearchAggregate"),
            ("ProductOptimization", "MarketingAnalytics", "ResearchAggregate")]


def verdict_grid():
    for purpose, resale_ok, third_ok, uses, lifespan, tick in itertools.product(
            [p.value for p in Purpose], (False, True), (False, True), USE_SETS,
            (None, 0, 1, 10), (3, 4, 12, 13, 100)):
        yield purpose, resale_ok, third_ok, uses, lifespan, tick
