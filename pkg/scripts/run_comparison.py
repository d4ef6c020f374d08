#!/usr/bin/env python3
"""End-to-end comparison run: train both network arms, then compare.

Reuses checkpoints if they already exist in the output directory, so a
finished run can be re-compared cheaply.  Expect roughly half an hour of
training per missing checkpoint on one CPU core at the defaults.
"""

import argparse
import os
import sys

from cscgi.cli import main as cli


def run(*argv):
    code = cli(list(argv))
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="runs")
    parser.add_argument("--epochs", type=int, default=48)
    parser.add_argument("--train-size", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--frames", default="100,200,300,400")
    args = parser.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    cscnn = os.path.join(args.out_dir, "cscnn.csnn")
    dl = os.path.join(args.out_dir, "dl.csnn")
    for path, mr in ((cscnn, "0.25"), (dl, "1.0")):
        if os.path.exists(path):
            print(f"reusing {path}")
            continue
        run("train", "--mode", "mixed", "--mr", mr,
            "--train-size", str(args.train_size),
            "--epochs", str(args.epochs), "--seed", str(args.seed),
            "--out", path)
    run("compare", "--model", cscnn, "--dl-model", dl,
        "--frames", args.frames, "--seed", str(args.seed),
        "--out-dir", args.out_dir)


if __name__ == "__main__":
    main()
