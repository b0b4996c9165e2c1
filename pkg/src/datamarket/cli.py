"""Command-line front door.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .core import EventLedger, MarketError
from .licensing import License, Lifespan, Purpose, check_action
from .pricing import (
    PricingParams,
    buyer_effective_price,
    enforced_listing_price,
    recommend_price,
)
from .risk import HarmImpactVector, InvalidScore, RiskAssessment, assess_risk, risk_band
from .sim.config import load_config
from .sim.metrics import compute_metrics, metrics_json, metrics_text
from .sim.scenario import run_scenario, write_outputs


def _emit(fmt: str, record: dict[str, Any], text: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(record, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def _lifespan(value: str) -> Lifespan:
    if value.lower() == "perpetual":
        return Lifespan.perpetual()
    try:
        return Lifespan.of(int(value))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a tick count or 'perpetual', got {value!r}")


def cmd_assess_risk(args: argparse.Namespace) -> int:
    ra = assess_risk(HarmImpactVector(args.distortion, args.revelation, args.intrusion))
    text = (f"raw score   {ra.raw_score}/30\n"
            f"normalized  {ra.normalized:.4f} ({ra.normalized:.1%})\n"
            f"band        {ra.band.value}\n")
    _emit(args.format, ra.to_record(), text)
    return 0


def cmd_price(args: argparse.Namespace) -> int:
    if args.risk is not None:
        if not 0.0 <= args.risk <= 1.0:
            raise InvalidScore(f"risk {args.risk} outside [0, 1]")
        risk = RiskAssessment(HarmImpactVector(0, 0, 0), round(args.risk * 30), args.risk,
                              risk_band(args.risk))
    else:
        risk = assess_risk(HarmImpactVector(args.distortion, args.revelation, args.intrusion))
    uses = {Purpose.PRODUCT_OPTIMIZATION}
    if args.resale:
        uses.add(Purpose.RESALE)
    lic = License("cli", args.exclusive, args.lifespan, frozenset(uses), args.resale)
    params = PricingParams()
    quote = recommend_price(args.unit_value, args.quantity, risk, args.noise, lic,
                            args.demand, params)
    record: dict[str, Any] = quote.to_record()
    lines = [f"recommended  {quote.recommended:.4f}"]
    lines += [f"  {name:<16} {value:.6g}" for name, value in quote.factors.items()]
    if args.ask is not None:
        listing = enforced_listing_price(args.ask, args.noise, params)
        record["listing_price"] = listing
        lines.append(f"listing      {listing:.4f}  (ask {args.ask:g}, noise discount applied)")
        if args.buyer_reputation is not None:
            eff = buyer_effective_price(listing, args.buyer_reputation, params)
            record["buyer_effective_price"] = eff
            lines.append(f"buyer pays   {eff:.4f}  (reputation {args.buyer_reputation:g})")
    _emit(args.format, record, "\n".join(lines) + "\n")
    return 0


def cmd_license_check(args: argparse.Namespace) -> int:
    rec = json.loads(Path(args.license).read_text())
    lic = License.from_record(rec)
    actor = args.actor or lic.buyer_id
    verdict = check_action(lic, actor, (Purpose(args.purpose), args.tick))
    text = verdict.outcome.value
    if verdict.violation_kind:
        text += f" ({verdict.violation_kind.value})"
    _emit(args.format, verdict.to_record(), text + "\n")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    ledger, metrics = run_scenario(config)
    paths = write_outputs(args.out, ledger, metrics)
    if args.format == "json":
        sys.stdout.write(metrics_json(metrics))
    else:
        sys.stdout.write(metrics_text(metrics))
        for name, path in paths.items():
            sys.stdout.write(f"wrote {name:<12} {path}\n")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    ledger = EventLedger.read_jsonl(args.ledger)
    metrics = compute_metrics(ledger)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(metrics_json(metrics))
    sys.stdout.write(metrics_json(metrics) if args.format == "json" else metrics_text(metrics))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datamarket",
                                     description="Personal-data marketplace toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.set_defaults(func=func)
        return p

    p = add("assess-risk", cmd_assess_risk, "score a harm-impact vector")
    for name in ("distortion", "revelation", "intrusion"):
        p.add_argument(f"--{name}", type=int, required=True)

    p = add("price", cmd_price, "recommend a price with factor audit")
    p.add_argument("--unit-value", type=float, required=True)
    p.add_argument("--quantity", type=int, required=True)
    p.add_argument("--risk", type=float, help="normalized risk; overrides impact flags")
    for name in ("distortion", "revelation", "intrusion"):
        p.add_argument(f"--{name}", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--exclusive", action="store_true")
    p.add_argument("--resale", action="store_true")
    p.add_argument("--lifespan", type=_lifespan, default=Lifespan.of(0),
                   help="ticks (days) or 'perpetual'")
    p.add_argument("--demand", type=float, default=1.0)
    p.add_argument("--ask", type=float, help="seller ask; prints the enforced listing price")
    p.add_argument("--buyer-reputation", type=float)

    p = add("license-check", cmd_license_check, "evaluate a use against a licence")
    p.add_argument("--license", required=True)
    p.add_argument("--purpose", required=True, choices=[x.value for x in Purpose])
    p.add_argument("--tick", type=int, required=True)
    p.add_argument("--actor", help="defaults to the licence's buyer")

    p = add("simulate", cmd_simulate, "run a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)

    p = add("report", cmd_report, "recompute metrics from a ledger")
    p.add_argument("--ledger", required=True)
    p.add_argument("--out")
    return parser


def execute(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except MarketError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
