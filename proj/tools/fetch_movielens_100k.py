#!/usr/bin/env python3
"""Fetch MovieLens 100K and write it as data/ml-100k/ratings.csv.

The GroupLens site is not always reachable from build machines, so this
pulls the copy bundled with the RecBole wheel on PyPI and rewrites it in the
MovieLens `ratings.csv` layout (userId,movieId,rating,timestamp; header row;
ordered by userId, then movieId).
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k/ratings.csv")
    parser.add_argument("--wheel", help="use an already downloaded recbole wheel")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "recbole==1.2.1",
                 "--no-deps", "-d", tmp],
                check=True)
            wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        text = zipfile.ZipFile(wheel).read(MEMBER).decode("utf-8")

    rows = []
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        user, item, rating, ts = line.split("\t")
        rows.append((int(user), int(item), int(float(rating)), int(float(ts))))
    rows.sort(key=lambda r: (r[0], r[1]))

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="\n") as f:
        f.write("userId,movieId,rating,timestamp\n")
        for r in rows:
            f.write(f"{r[0]},{r[1]},{r[2]},{r[3]}\n")
    print(f"wrote {len(rows)} ratings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
