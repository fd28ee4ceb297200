#!/usr/bin/env python3
"""Dump the per-second SNR/BER trace of one degradation episode as CSV."""

import argparse
import csv
import json
import sys
from importlib import resources

from metrotwin.scenario import run_scenario, scenario_from_dict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--case", type=int, default=1, metavar="N",
                    help="1-based index into the shipped cases (default 1)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default="-", metavar="PATH",
                    help="CSV destination, - for stdout (default)")
    args = ap.parse_args()

    doc = json.loads((resources.files("metrotwin") / "scenarios"
                      / "paper_softfail.json").read_text())
    section = doc["softfail"]
    if not 1 <= args.case <= len(section["cases"]):
        ap.error(f"--case must be in 1..{len(section['cases'])}")
    section["cases"] = [section["cases"][args.case - 1]]
    section["emit_trace"] = True
    section["repetitions"] = 1
    if args.seed is not None:
        doc["seed"] = args.seed

    report = run_scenario(scenario_from_dict(doc))
    case = report.results["softfail"]["cases"][0]
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.writer(fh)
    writer.writerow(["t_since_ramp_s", "snr_db", "pre_fec_ber"])
    writer.writerows(case["trace"])
    if fh is not sys.stdout:
        fh.close()
        print(f"{len(case['trace'])} samples -> {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
