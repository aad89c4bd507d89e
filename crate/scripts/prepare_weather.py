#!/usr/bin/env python3
"""Turns the raw weatherAUS.csv into the numeric table the pipeline reads.

Drops Date and Location, maps Yes/No to 1/0 and wind directions to compass
indices 0..15. Missing cells stay NA; the loader imputes them.
"""
import csv
import sys

DIRS = ["N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW"]
WIND = {"WindGustDir", "WindDir9am", "WindDir3pm"}
FLAGS = {"RainToday", "RainTomorrow"}
DROP = {"Date", "Location", "RISK_MM"}


def convert(col, v):
    v = v.strip()
    if v in ("", "NA"):
        return "NA"
    if col in WIND:
        return str(DIRS.index(v))
    if col in FLAGS:
        return {"Yes": "1", "No": "0"}[v]
    return v


def main(src, dst):
    with open(src, newline="") as f, open(dst, "w", newline="") as g:
        r = csv.DictReader(f)
        cols = [c for c in r.fieldnames if c not in DROP]
        w = csv.writer(g)
        w.writerow(cols)
        for row in r:
            w.writerow([convert(c, row[c]) for c in cols])


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: prepare_weather.py weatherAUS.csv weather.csv")
    main(sys.argv[1], sys.argv[2])
