#!/usr/bin/env python3
"""Regenerates the small offline fixtures under fixtures/data.

redwine_small.csv is the first 240 rows of the real red wine file. The
white wine, weather and YouTube fixtures are synthetic: they share the
public files' schemas and rough marginals but are not real observations. The weather fixture mimics the output of
prepare_weather.py (0/1 rain flags, wind directions as compass indices).
"""
import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "data"
WINE_COLS = [
    "fixed acidity", "volatile acidity", "citric acid", "residual sugar", "chlorides",
    "free sulfur dioxide", "total sulfur dioxide", "density", "pH", "sulphates", "alcohol", "quality",
]


def red_subset():
    with open(ROOT / "data" / "winequality-red.csv", newline="") as f:
        rows = list(csv.reader(f))
    with open(OUT / "redwine_small.csv", "w", newline="") as f:
        csv.writer(f).writerows(rows[:241])


def white(rng, n=300):
    z = rng.normal(size=n)
    cols = {
        "fixed acidity": rng.normal(6.85, 0.84, n),
        "volatile acidity": np.abs(rng.normal(0.28, 0.1, n) - 0.03 * z),
        "citric acid": np.abs(rng.normal(0.33, 0.12, n)),
        "residual sugar": rng.gamma(1.5, 4.2, n),
        "chlorides": np.abs(rng.normal(0.046, 0.02, n) - 0.006 * z),
        "free sulfur dioxide": rng.gamma(5.0, 7.0, n),
        "total sulfur dioxide": rng.normal(138, 42, n),
        "density": 0.994 - 0.0015 * z + rng.normal(0, 0.0015, n),
        "pH": rng.normal(3.19, 0.15, n),
        "sulphates": np.abs(rng.normal(0.49, 0.11, n) + 0.02 * z),
        "alcohol": 10.5 + 1.0 * z + rng.normal(0, 0.5, n),
    }
    quality = np.clip(np.rint(5.9 + 0.75 * z + rng.normal(0, 0.5, n)), 3, 9).astype(int)
    with open(OUT / "whitewine_synthetic.csv", "w", newline="") as f:
        w = csv.writer(f, delimiter=";")
        w.writerow(WINE_COLS)
        for i in range(n):
            w.writerow([f"{cols[c][i]:.4g}" for c in WINE_COLS[:-1]] + [quality[i]])


def weather(rng, n=400):
    rain_tomorrow = rng.random(n) < 0.22
    rain_today = rng.random(n) < np.where(rain_tomorrow, 0.45, 0.15)
    shift = rain_tomorrow.astype(float)
    hum3 = np.clip(rng.normal(48 + 22 * shift, 18, n), 0, 100)
    hum9 = np.clip(rng.normal(67 + 10 * shift, 18, n), 0, 100)
    temp9 = rng.normal(17 - 0.5 * shift, 6.5, n)
    cols = {
        "MinTemp": temp9 - rng.gamma(2.0, 2.0, n),
        "MaxTemp": temp9 + rng.gamma(3.0, 2.5, n) - 3 * shift,
        "Rainfall": np.where(rain_today, rng.gamma(1.2, 8.0, n) + 1.1, rng.random(n) * 0.9),
        "Evaporation": rng.gamma(2.0, 2.7, n),
        "Sunshine": np.clip(rng.normal(8.0 - 3.0 * shift, 3.2, n), 0, 14),
        "WindGustDir": rng.integers(0, 16, n),
        "WindGustSpeed": rng.normal(40 + 6 * shift, 13, n),
        "WindDir9am": rng.integers(0, 16, n),
        "WindDir3pm": rng.integers(0, 16, n),
        "WindSpeed9am": rng.gamma(2.0, 7.0, n),
        "WindSpeed3pm": rng.gamma(3.0, 6.5, n),
        "Humidity9am": hum9,
        "Humidity3pm": hum3,
        "Pressure9am": rng.normal(1017.6 - 3.5 * shift, 7.0, n),
        "Pressure3pm": rng.normal(1015.3 - 4.0 * shift, 7.0, n),
        "Cloud9am": np.clip(np.rint(rng.normal(4.4 + 2 * shift, 2.8, n)), 0, 8),
        "Cloud3pm": np.clip(np.rint(rng.normal(4.5 + 2 * shift, 2.7, n)), 0, 8),
        "Temp9am": temp9,
        "Temp3pm": temp9 + rng.normal(4.5 - 2 * shift, 3.0, n),
    }
    names = list(cols) + ["RainToday", "RainTomorrow"]
    with open(OUT / "weather_synthetic.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names)
        for i in range(n):
            row = []
            for c in cols:
                v = cols[c][i]
                # sparse gaps, heavier on the sunshine/evaporation columns as in the real file
                p = 0.25 if c in ("Sunshine", "Evaporation") else 0.02
                row.append("NA" if rng.random() < p else f"{v:.1f}")
            row.append(int(rain_today[i]))
            row.append(int(rain_tomorrow[i]))
            w.writerow(row)


SPAM = [
    "check out my channel", "please subscribe to my channel", "check out this video http://example.com/v",
    "subscribe and i will subscribe back", "free gift cards at http://example.com/free", "check my new song cover",
    "please check out my music", "win free stuff click here", "hey guys check out my channel please",
]
HAM = [
    "love this song", "best song ever", "beautiful voice", "2 billion views wow", "this song never gets old",
    "who is still listening in 2015", "i love her voice", "the dance is amazing", "great video",
]
FILLER = ["lol", "so", "really", "guys", "omg", "haha", "this", "the", "wow", "ever", "just", "now", "still"]


def youtube(rng, n=200):
    with open(OUT / "youtube_synthetic.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["COMMENT_ID", "AUTHOR", "DATE", "CONTENT", "CLASS"])
        for i in range(n):
            spam = rng.random() < 0.5
            base = (SPAM if spam else HAM)[rng.integers(0, 9)]
            # some comments carry no keyword at all
            if rng.random() < 0.35:
                base = " ".join(rng.choice(FILLER, size=4))
            words = base.split() + list(rng.choice(FILLER, size=rng.integers(0, 4)))
            w.writerow([f"c{i:04d}", f"user{rng.integers(0, 500)}", "2015-01-01", " ".join(words).capitalize(), int(spam)])


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20210601)
    red_subset()
    white(rng)
    weather(rng)
    youtube(rng)


if __name__ == "__main__":
    main()
