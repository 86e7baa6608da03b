"""Runs the CLI end to end and recomputes its summary from the CSVs."""
import csv
import json
import math
import os
import shutil
import statistics
import subprocess
import sys
import tempfile
import xml.etree.ElementTree as ET

HEADER = ["iteration", "return", "pop_mean", "pop_max", "sigma", "alpha",
          "inner_evals", "lookahead_evals", "seed"]


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == HEADER, rows[0]
    return [[float(x) for x in r] for r in rows[1:]]


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    cli = sys.argv[1]
    out = tempfile.mkdtemp(prefix="bierl_check_")
    try:
        cmd = [cli, "run", "-o", out, "--seeds", "1,2,3",
               "-s", "run.total_iterations=30", "-s", "warm_start.meta_updates=1",
               "-s", "task.kind=shifted_sphere_nonstationary", "-s", "task.shift_every=10"]
        subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        with open(os.path.join(out, "summary.json")) as f:
            summary = json.load(f)
        assert summary["seeds"] == [1, 2, 3]
        paths = []
        for mode, info in summary["modes"].items():
            finals, aucs = [], []
            for seed in summary["seeds"]:
                p = os.path.join(out, f"{mode}_seed{seed}.csv")
                paths.append(p)
                rows = read(p)
                assert len(rows) == 30
                assert [r[0] for r in rows] == list(range(30))
                assert all(r[8] == seed for r in rows)
                assert all(r[4] > 0 and r[5] > 0 for r in rows)
                assert all(b[6] >= a[6] and b[7] >= a[7] for a, b in zip(rows, rows[1:]))
                finals.append(rows[-1][1])
                aucs.append(math.fsum(r[1] for r in rows))
            fr = info["final_return"]
            assert fr["values"] == finals, (mode, fr["values"], finals)
            assert close(fr["mean"], statistics.fmean(finals)), mode
            assert close(fr["std"], statistics.stdev(finals)), mode
            assert close(info["auc"]["mean"], statistics.fmean(aucs)), mode
            assert close(info["auc"]["std"], statistics.stdev(aucs)), mode
            assert info["total_evals"] == info["inner_evals"] + info["lookahead_evals"] + info["pretrain_evals"]
            assert info["inner_evals"] == 30 * info["population"] == rows[-1][6]
            assert info["lookahead_evals"] == rows[-1][7]

        svg = os.path.join(out, "curves.svg")
        subprocess.run([cli, "plot", *paths, "-o", svg], check=True, stdout=subprocess.DEVNULL)
        root = ET.parse(svg).getroot()
        ns = "{http://www.w3.org/2000/svg}"
        assert root.tag == ns + "svg"
        assert len(root.findall(f".//{ns}polyline")) == len(summary["modes"])

        bad = subprocess.run([cli, "run", "-o", out, "-s", "es.population=0"],
                             stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        assert bad.returncode == 1, bad.returncode
        missing = subprocess.run([cli, "run", "--resume", os.path.join(out, "none.ckpt")],
                                 stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        assert missing.returncode == 3, missing.returncode
        print("outputs consistent")
    finally:
        shutil.rmtree(out, ignore_errors=True)


if __name__ == "__main__":
    main()
