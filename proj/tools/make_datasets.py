#!/usr/bin/env python3
"""Regenerate the LIBSVM-format benchmark files under data/.

The LIBSVM mirror is not reachable from every build machine, so the files are
rebuilt from copies of the same UCI data that ship inside package archives:

  * keel-ds (PyPI wheel): heart, wisconsin (breast-cancer), pima (diabetes),
    australian
  * xgboost-sys (crates.io): agaricus.txt.train / agaricus.txt.test, the
    mushrooms data already one-hot encoded in LIBSVM format

Usage:
  pip download --no-deps keel-ds -d /tmp/keel
  cargo fetch   # in any crate depending on xgboost-sys = "0.1.2"
  python3 tools/make_datasets.py --keel-wheel /tmp/keel/keel_ds-*.whl \
      --agaricus-dir $CARGO_HOME/registry/src/*/xgboost-sys-0.1.2/xgboost/demo/data

Labels are written as +1/-1. Feature values are left unscaled in <name>.libsvm;
heart, breast-cancer, diabetes and australian also get a <name>_scale.libsvm
copy with every feature mapped linearly onto [-1, 1] (the svm-scale default,
absent entries counting as 0), matching the _scale files on the LIBSVM site.

  python3 tools/make_datasets.py --scale-only   # rebuild only the _scale files
"""

import argparse
import pathlib
import zipfile


def keel_rows(wheel, name):
    with zipfile.ZipFile(wheel) as z:
        text = z.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    return [line.split(",") for line in text.splitlines()
            if line.strip() and not line.startswith("@")]


def fmt(v):
    s = f"{v:.6g}"
    return s


def write(path, records):
    with open(path, "w") as out:
        for label, values in records:
            feats = " ".join(f"{i}:{fmt(v)}" for i, v in enumerate(values, 1)
                             if v != 0.0)
            out.write(f"{'+1' if label > 0 else '-1'}" +
                      (f" {feats}" if feats else "") + "\n")


def scale(src, dst):
    rows = []
    for line in src.read_text().splitlines():
        toks = line.split()
        if toks:
            rows.append((toks[0], {int(k): float(v) for k, v in (t.split(":") for t in toks[1:])}))
    keys = sorted({k for _, f in rows for k in f})
    lo = {k: min(f.get(k, 0.0) for _, f in rows) for k in keys}
    hi = {k: max(f.get(k, 0.0) for _, f in rows) for k in keys}
    with open(dst, "w") as out:
        for label, f in rows:
            feats = []
            for k in keys:
                if hi[k] == lo[k]:
                    continue
                v = -1.0 + 2.0 * (f.get(k, 0.0) - lo[k]) / (hi[k] - lo[k])
                if v != 0.0:
                    feats.append(f"{k}:{fmt(v)}")
            out.write(label + (" " + " ".join(feats) if feats else "") + "\n")


SCALED = ("heart", "breast-cancer", "diabetes", "australian")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--keel-wheel")
    ap.add_argument("--agaricus-dir")
    ap.add_argument("--scale-only", action="store_true")
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not args.scale_only:
        if not (args.keel_wheel and args.agaricus_dir):
            ap.error("--keel-wheel and --agaricus-dir are required unless --scale-only")
        build_raw(args, out)
    for name in SCALED:
        scale(out / f"{name}.libsvm", out / f"{name}_scale.libsvm")


def build_raw(args, out):
    # Statlog heart: class 2 (presence) -> +1. KEEL stores oldpeak (column 10)
    # without its decimal point; every value has exactly one decimal digit.
    recs = []
    for row in keel_rows(args.keel_wheel, "heart"):
        vals = [float(x) for x in row[:-1]]
        vals[9] /= 10.0
        recs.append((+1 if row[-1].strip() == "2" else -1, vals))
    write(out / "heart.libsvm", recs)

    # Wisconsin breast cancer (683 complete rows, no sample id): 4 (malignant) -> +1.
    recs = [(+1 if r[-1].strip() == "4" else -1, [float(x) for x in r[:-1]])
            for r in keel_rows(args.keel_wheel, "wisconsin")]
    write(out / "breast-cancer.libsvm", recs)

    # Pima diabetes: tested_negative -> +1 (matches the LIBSVM class counts 500/268).
    recs = [(+1 if r[-1].strip() == "tested_negative" else -1, [float(x) for x in r[:-1]])
            for r in keel_rows(args.keel_wheel, "pima")]
    write(out / "diabetes.libsvm", recs)

    # Statlog australian: class 1 -> +1. The KEEL copy dropped the decimal
    # points of the continuous attributes; values are kept as shipped.
    recs = [(+1 if r[-1].strip() == "1" else -1, [float(x) for x in r[:-1]])
            for r in keel_rows(args.keel_wheel, "australian")]
    write(out / "australian.libsvm", recs)

    # Mushrooms: agaricus train + test concatenated, 0/1 labels -> -1/+1.
    agar = pathlib.Path(args.agaricus_dir)
    lines = []
    for part in ("agaricus.txt.train", "agaricus.txt.test"):
        lines += [l.split() for l in (agar / part).read_text().splitlines() if l.strip()]
    with open(out / "mushrooms.libsvm", "w") as f:
        for toks in lines:
            f.write(("+1" if toks[0] == "1" else "-1") + " " + " ".join(toks[1:]) + "\n")


if __name__ == "__main__":
    main()
