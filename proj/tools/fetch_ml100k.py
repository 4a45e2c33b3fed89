#!/usr/bin/env python3
"""Materialize MovieLens 100K `u.data` for local experiments.

GroupLens downloads are not always reachable, so this pulls the copy of the
ratings table bundled in the pytorch-widedeep wheel and writes it back out in
the original tab-separated layout (user, item, rating, timestamp).
"""
import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/ml-100k/u.data")
    ap.add_argument("--wheel", help="use an already downloaded pytorch-widedeep wheel")
    args = ap.parse_args()

    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                 "pytorch-widedeep==1.7.0", "-d", tmp],
                check=True)
            wheel = next(pathlib.Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            df = pd.read_parquet(io.BytesIO(zf.read(MEMBER)))

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    df = df[["user_id", "movie_id", "rating", "timestamp"]]
    df.to_csv(out, sep="\t", header=False, index=False)
    print(f"wrote {len(df)} ratings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
