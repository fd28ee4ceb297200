#!/usr/bin/env python3
"""Reproduce the four-span round-trip latency table and its overhead budget."""

import argparse
import json
from importlib import resources

from metrotwin.cli import render_report
from metrotwin.scenario import run_scenario, scenario_from_dict


def shipped(name):
    return json.loads((resources.files("metrotwin") / "scenarios" / name)
                      .read_text())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--length-km", type=float, action="append", metavar="KM",
                    help="replace the shipped span lengths (repeatable)")
    ap.add_argument("--format", choices=("table", "csv", "json"),
                    default="table")
    args = ap.parse_args()

    doc = shipped("paper_table2.json")
    if args.length_km:
        doc["latency"]["cases"] = [{"length_km": km} for km in args.length_km]
    report = run_scenario(scenario_from_dict(doc))
    print(render_report(report, args.format), end="")

    if args.format == "table":
        budget = report.results["latency"]["budget"]
        parts = "  ".join(f"{name}={us} us" for name, us
                          in sorted(budget["components_us"].items()))
        print(f"\nfitted overhead budget: {parts}"
              f"  (residual rms {budget['residual_rms_us']} us)")


if __name__ == "__main__":
    main()
