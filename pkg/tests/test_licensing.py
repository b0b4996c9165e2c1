import pytest

from datamarket.licensing import (
    COMPLIANT,
    ComplianceVerdict,
    InvalidLicense,
    License,
    Lifespan,
    NotYetGranted,
    Outcome,
    Purpose,
    UnrelatedActor,
    ViolationKind,
    check_action,
    check_seller_double_sale,
    is_active,
)
from conftest import make_license
from oracles import oracle, verdict_grid


def granted(lic, at=0, buyer="b", seller="s"):
    return License(lic.license_id, lic.exclusive, lic.lifespan, lic.permitted_uses,
                   lic.resale_allowed, lic.third_party_extraction_allowed,
                   seller_id=seller, buyer_id=buyer, category="cat", granted_at=at)


def test_perpetual_never_expires():
    lic = granted(make_license(lifespan=Lifespan.perpetual()))
    assert is_active(lic, 10**9)


def test_ticks_boundary_is_exclusive():
    lic = granted(make_license(lifespan=Lifespan.of(100)), at=0)
    assert is_active(lic, 99)
    assert not is_active(lic, 100)


def test_unsettled_license():
    with pytest.raises(NotYetGranted):
        is_active(make_license(), 0)


def test_purpose_flag_invariants():
    with pytest.raises(InvalidLicense):
        License("x", False, Lifespan.of(5), frozenset({Purpose.RESALE}), resale_allowed=False)
    with pytest.raises(InvalidLicense):
        License("x", False, Lifespan.of(5), frozenset({Purpose.PRODUCT_OPTIMIZATION}),
                third_party_extraction_allowed=True)
    with pytest.raises(InvalidLicense):
        License("x", False, Lifespan.of(5), frozenset())


def test_verdict_invariant():
    with pytest.raises(ValueError):
        ComplianceVerdict(Outcome.COMPLIANT, ViolationKind.EXPIRED)
    with pytest.raises(ValueError):
        ComplianceVerdict(Outcome.VIOLATION)


def test_resale_prohibited():
    lic = granted(make_license())
    v = check_action(lic, "b", (Purpose.RESALE, 10))
    assert v.violation_kind is ViolationKind.PROHIBITED_RESALE


def test_permitted_use():
    lic = granted(make_license())
    assert check_action(lic, "b", (Purpose.PRODUCT_OPTIMIZATION, 10)) == COMPLIANT


def test_third_party_extraction():
    lic = granted(make_license())
    v = check_action(lic, "b", (Purpose.THIRD_PARTY_INFERENCE, 10))
    assert v.violation_kind is ViolationKind.THIRD_PARTY_EXTRACTION


def test_unpermitted_purpose():
    lic = granted(make_license())
    v = check_action(lic, "b", (Purpose.MARKETING_ANALYTICS, 10))
    assert v.violation_kind is ViolationKind.UNPERMITTED_PURPOSE


def test_unrelated_actor_and_early_action():
    lic = granted(make_license(), at=5)
    with pytest.raises(UnrelatedActor):
        check_action(lic, "stranger", (Purpose.PRODUCT_OPTIMIZATION, 10))
    with pytest.raises(NotYetGranted):
        check_action(lic, "b", (Purpose.PRODUCT_OPTIMIZATION, 4))


def test_exhaustive_verdict_grid():
    n = 0
    for purpose, resale_ok, third_ok, uses, lifespan, tick in verdict_grid():
        lic = granted(make_license(uses={Purpose(u) for u in uses}, resale=resale_ok,
                                   third_party=third_ok,
                                   lifespan=Lifespan(lifespan)), at=3)
        got = check_action(lic, "b", (Purpose(purpose), tick))
        want = oracle(purpose, resale_ok, third_ok, uses, lifespan, 3, tick)
        assert (got.violation_kind.value if got.violation_kind else None) == want
        n += 1
    assert n == 5 * 2 * 2 * 3 * 4 * 5


def test_double_sale_active_exclusive():
    lic = granted(make_license(exclusive=True), at=0, seller="s")
    v = check_seller_double_sale([lic], "s", "cat", now=10)
    assert v.violation_kind is ViolationKind.SELLER_DOUBLE_SALE


def test_double_sale_non_exclusive_ok():
    lic = granted(make_license(exclusive=False), seller="s")
    assert check_seller_double_sale([lic], "s", "cat", now=10).compliant


def test_double_sale_after_expiry_ok():
    lic = granted(make_license(exclusive=True, lifespan=Lifespan.of(90)), at=0, seller="s")
    assert check_seller_double_sale([lic], "s", "cat", now=90).compliant
    assert not check_seller_double_sale([lic], "s", "cat", now=89).compliant


def test_double_sale_other_category_or_seller():
    lic = granted(make_license(exclusive=True), seller="s")
    assert check_seller_double_sale([lic], "s", "other", now=1).compliant
    assert check_seller_double_sale([lic], "t", "cat", now=1).compliant


def test_record_round_trip():
    lic = granted(make_license(exclusive=True, lifespan=Lifespan.perpetual(), resale=True))
    assert License.from_record(lic.to_record()) == lic


def test_lifespan_covers():
    assert Lifespan.perpetual().covers(Lifespan.of(10**6))
    assert Lifespan.of(10).covers(Lifespan.of(10))
    assert not Lifespan.of(10).covers(Lifespan.perpetual())
