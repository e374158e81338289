"""Run every bundled experiment config through the CLI and summarize exit codes."""
import argparse
import sys
import time
from pathlib import Path

from hardylab.cli import load_config, main as cli_main

HERE = Path(__file__).resolve().parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=Path, default=HERE / "configs")
    ap.add_argument("--out", type=Path, default=Path("out"))
    args = ap.parse_args(argv)

    failed = 0
    for cfg in sorted(args.configs.glob("*.toml")):
        t0 = time.perf_counter()
        command = load_config(cfg)["command"]
        code = cli_main([command, "--config", str(cfg), "--out", str(args.out / cfg.stem)])
        failed += code != 0
        print(f"{cfg.stem:28s} {command:12s} exit={code}  {time.perf_counter() - t0:6.2f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
