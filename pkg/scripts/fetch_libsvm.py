"""Download the real-sim, w8a and phishing binary datasets into a cache directory.

    python scripts/fetch_libsvm.py --data-dir ~/.cache/ftrlm

The directory defaults to $FTRLM_DATA_DIR. Files already present are kept.
"""

import argparse
import bz2
import os
import shutil
import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/"
DATASETS = {
    "real-sim": "real-sim.bz2",
    "w8a": "w8a",
    "phishing": "phishing",
}


def fetch(name: str, target: Path) -> Path:
    out = target / name
    if out.exists():
        print(f"{name}: already present")
        return out
    remote = DATASETS[name]
    tmp = target / (remote + ".part")
    print(f"{name}: downloading {BASE + remote}")
    with urllib.request.urlopen(BASE + remote) as resp, open(tmp, "wb") as fh:
        shutil.copyfileobj(resp, fh)
    if remote.endswith(".bz2"):
        with bz2.open(tmp, "rb") as src, open(out, "wb") as dst:
            shutil.copyfileobj(src, dst)
        tmp.unlink()
    else:
        tmp.rename(out)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", default=os.environ.get("FTRLM_DATA_DIR"))
    parser.add_argument("names", nargs="*", default=list(DATASETS))
    args = parser.parse_args(argv)
    if not args.data_dir:
        parser.error("pass --data-dir or set FTRLM_DATA_DIR")
    target = Path(args.data_dir).expanduser()
    target.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        if name not in DATASETS:
            parser.error(f"unknown dataset {name!r}")
        fetch(name, target)
    return 0


if __name__ == "__main__":
    sys.exit(main())
