#!/usr/bin/env python3
"""Recompute a report CSV's aggregate rows from its run rows.

Reads the CSV written by `smlab run` (or write_report_csv), recomputes every
aggregate cell from the raw run rows, and compares against the aggregate rows
in the file. Exits 0 when every cell agrees within the tolerance, 1 otherwise.

Aggregation rules (documented in the CSV header):
  * stability% is the share of stable runs among successful ones,
  * doi/roi/md average (population std) over unstable runs only,
  * regret/egalitarian/set_equality average over all successful runs
    (regret over the runs where it is defined),
  * msm% is the share of median stable matchings among runs where the flag is
    defined; mm% is the mean median-match fraction, as a percentage.
"""

import argparse
import csv
import math
import sys

COLUMNS = [
    "row_type", "instance_seed", "repeat", "run_seed", "algorithm", "ok",
    "stable", "blocking_pairs", "doi", "roi", "md", "regret", "egalitarian",
    "set_equality", "is_msm", "mm_fraction", "episodes", "wall_clock_s",
]


def mean_std(values):
    if not values:
        return None, None
    m = sum(values) / len(values)
    var = sum((v - m) ** 2 for v in values) / len(values)
    return m, math.sqrt(var)


def parse(path):
    runs, aggs = [], {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            if row[0] == "row_type":
                if row != COLUMNS:
                    sys.exit(f"unexpected column layout: {row}")
                continue
            rec = dict(zip(COLUMNS, row))
            if rec["row_type"] == "run":
                runs.append(rec)
            else:
                aggs[rec["row_type"]] = rec
    return runs, aggs


def recompute(runs):
    ok = [r for r in runs if r["ok"] == "1"]
    stable = [r for r in ok if r["stable"] == "1"]
    unstable = [r for r in ok if r["stable"] == "0"]

    expected = {name: {} for name in (
        "agg_pct", "agg_mean_unstable", "agg_std_unstable",
        "agg_mean_all", "agg_std_all")}
    if ok:
        expected["agg_pct"]["stable"] = 100.0 * len(stable) / len(ok)
        msm = [r["is_msm"] for r in ok if r["is_msm"] != ""]
        if msm:
            expected["agg_pct"]["is_msm"] = 100.0 * msm.count("1") / len(msm)
        mm = [float(r["mm_fraction"]) for r in ok if r["mm_fraction"] != ""]
        if mm:
            expected["agg_pct"]["mm_fraction"] = 100.0 * sum(mm) / len(mm)

    for col in ("doi", "roi", "md"):
        m, s = mean_std([float(r[col]) for r in unstable])
        if m is not None:
            expected["agg_mean_unstable"][col] = m
            expected["agg_std_unstable"][col] = s

    regrets = [float(r["regret"]) for r in ok if r["regret"] != ""]
    m, s = mean_std(regrets)
    if m is not None:
        expected["agg_mean_all"]["regret"] = m
        expected["agg_std_all"]["regret"] = s
    for col in ("egalitarian", "set_equality"):
        m, s = mean_std([float(r[col]) for r in ok])
        if m is not None:
            expected["agg_mean_all"][col] = m
            expected["agg_std_all"][col] = s
    return expected


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv_path")
    ap.add_argument("--tolerance", type=float, default=1e-9)
    args = ap.parse_args()

    runs, aggs = parse(args.csv_path)
    if not runs:
        sys.exit("no run rows found")
    expected = recompute(runs)

    problems = []
    for row_type, cells in expected.items():
        if row_type not in aggs:
            problems.append(f"missing aggregate row {row_type}")
            continue
        got_row = aggs[row_type]
        for col in COLUMNS[5:16]:
            want = cells.get(col)
            got = got_row.get(col, "")
            if want is None:
                if got != "":
                    problems.append(f"{row_type}.{col}: expected empty, got {got}")
            elif got == "":
                problems.append(f"{row_type}.{col}: expected {want}, got empty")
            elif abs(float(got) - want) > args.tolerance:
                problems.append(
                    f"{row_type}.{col}: |{float(got)} - {want}| > {args.tolerance}")

    if problems:
        print("\n".join(problems))
        sys.exit(1)
    print(f"aggregates agree within {args.tolerance} ({len(runs)} runs)")


if __name__ == "__main__":
    main()
