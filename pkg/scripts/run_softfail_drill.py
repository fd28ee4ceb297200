#!/usr/bin/env python3
"""Sweep attenuation ramp rates and summarise detection vs restoration."""

import argparse
import json
from importlib import resources

from metrotwin.scenario import run_scenario, scenario_from_dict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rate", type=float, action="append", metavar="DB_PER_S",
                    help="ramp rates to drill (default: the shipped cases)")
    ap.add_argument("--repeat", type=int, metavar="N",
                    help="repetitions per case")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    doc = json.loads((resources.files("metrotwin") / "scenarios"
                      / "paper_softfail.json").read_text())
    section = doc["softfail"]
    section["emit_trace"] = False
    if args.rate:
        template = dict(section["cases"][0])
        section["cases"] = [dict(template, rate_db_per_s=r, name=f"rate-{r:g}")
                            for r in args.rate]
    if args.repeat:
        section["repetitions"] = args.repeat
    if args.seed is not None:
        doc["seed"] = args.seed

    report = run_scenario(scenario_from_dict(doc))
    reps = section["repetitions"]
    for case in report.results["softfail"]["cases"]:
        print(f"{case['name']:>12}  rate {case['rate_db_per_s']} dB/s  "
              f"detect {case['detection_time_s']} s  "
              f"anticipate {case['anticipation_s']} s  "
              f"snr@detect {case['mean_detection_snr_db']} dB  "
              f"restored {case['restored']}/{reps}")


if __name__ == "__main__":
    main()
