#!/usr/bin/env python3
"""Plot objective gap and dictionary sizes from `sepdict learn --oracle-gap` logs."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def read_log(path):
    with open(path) as fh:
        meta = fh.readline().lstrip("# ").split()
    info = dict(kv.split("=", 1) for kv in meta)
    frame = pd.read_csv(path, skiprows=1)
    if "gap" not in frame:
        raise SystemExit(f"{path}: no gap column, rerun learn with --oracle-gap")
    star = float(info["objective_star"])
    frame["rel_gap"] = frame["gap"].clip(lower=1e-16) / star
    return info, frame


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("logs", nargs="+")
    ap.add_argument("--out", default="gap.png")
    args = ap.parse_args()

    fig, (ax_gap, ax_size) = plt.subplots(1, 2, figsize=(11, 4))
    for path in args.logs:
        info, frame = read_log(path)
        label = f"lambda={float(info['lambda']):g}"
        ax_gap.semilogy(frame["iter_total"], frame["rel_gap"], marker=".", label=label)
        ax_size.plot(frame["round"], frame["r1"], label=f"r1 {label}")
        ax_size.plot(frame["round"], frame["r2"], linestyle="--", label=f"r2 {label}")
    ax_gap.set_xlabel("descent sweeps")
    ax_gap.set_ylabel("relative gap to optimum")
    ax_size.set_xlabel("outer round")
    ax_size.set_ylabel("atoms")
    ax_gap.legend()
    ax_size.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
