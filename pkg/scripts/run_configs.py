"""Run the CLI over every preset in configs/ and print one summary line per run.

    python3 scripts/run_configs.py [--out out] [--grid-nx 128 --grid-ny 64 --modes 16]
"""

import argparse
import contextlib
import io
from pathlib import Path

from fbstab.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
RUNS = [
    ("flat_critical.yaml", "verify"),
    ("flat_critical.yaml", "sweep"),
    ("curved_matched.yaml", "verify"),
    ("water_wave.yaml", "wave"),
    ("water_wave_degenerate.yaml", "wave"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out")
    ap.add_argument("--grid-nx", type=int, default=None)
    ap.add_argument("--grid-ny", type=int, default=None)
    ap.add_argument("--modes", type=int, default=None)
    args = ap.parse_args()
    for cfg, cmd in RUNS:
        out = Path(args.out) / f"{Path(cfg).stem}_{cmd}"
        argv = [cmd, "--config", str(ROOT / "configs" / cfg), "--out", str(out)]
        if args.grid_nx:
            argv += ["--grid-nx", str(args.grid_nx)]
        if args.grid_ny:
            argv += ["--grid-ny", str(args.grid_ny)]
        if args.modes:
            argv += ["--modes", str(args.modes)]
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(buf):
            code = cli_main(argv)
        failed = [ln for ln in buf.getvalue().splitlines() if ln.startswith(("FAIL", "ConfigInvalid"))]
        print(f"{cfg:28s} {cmd:8s} exit={code}  failed={len(failed)}  -> {out}")
        for ln in failed:
            print("    " + ln)


if __name__ == "__main__":
    main()
