#!/usr/bin/env python3
"""Recompute run metrics from frames.csv and compare with metrics.json.

usage: recompute_metrics.py RUN_DIR [--tol 1e-9]
"""
import argparse
import csv
import json
import math
import sys
from pathlib import Path

AXES = ["x_cm", "y_cm", "z_cm", "psi_deg"]


def wrap_deg(d):
    return math.degrees(math.remainder(math.radians(d), 2 * math.pi))


def recompute(rows):
    errs = {a: [] for a in AXES}
    stages = {"none": 0, "S1": 0, "S2": 0, "S3": 0}
    bridges = lost = 0
    coasting = {"large": False, "small": False}
    for r in rows:
        stages[r["stage"]] += 1
        for mk in ("large", "small"):
            ev = r["event_" + mk]
            lost += ev == "lost"
            bridges += ev == "update" and coasting[mk]
            coasting[mk] = ev == "coast"
        if r["fused_x_cm"] == "":
            continue
        for a in AXES:
            d = float(r["fused_" + a]) - float(r["true_" + a])
            errs[a].append(wrap_deg(d) if a == "psi_deg" else d)
    n_out = len(errs["x_cm"])
    p2p = {a: (max(v) - min(v)) if v else 0.0 for a, v in errs.items()}
    rmse = {a: math.sqrt(sum(e * e for e in v) / n_out) if v else 0.0 for a, v in errs.items()}
    return {
        "frames": len(rows),
        "frames_with_output": n_out,
        "peak_to_peak": p2p,
        "rmse": rmse,
        "stage_occupancy": {k: c / len(rows) for k, c in stages.items()},
        "dropout_bridges": bridges,
        "track_lost": lost,
    }


def compare(want, got, tol, path=""):
    bad = []
    if isinstance(want, dict):
        for k in want:
            bad += compare(want[k], got.get(k), tol, f"{path}.{k}")
    elif isinstance(want, (int, float)):
        if got is None or abs(want - got) > tol:
            bad.append(f"{path}: csv {want!r} vs json {got!r}")
    return bad


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()
    with open(args.run_dir / "frames.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    metrics = json.loads((args.run_dir / "metrics.json").read_text())
    bad = compare(recompute(rows), metrics, args.tol)
    for b in bad:
        print(b, file=sys.stderr)
    print(f"{len(rows)} frames, {'mismatch' if bad else 'metrics agree'}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
