"""Run every recipe in recipes/ and collect the CSVs under results/.

    python scripts/reproduce_figures.py            # everything
    python scripts/reproduce_figures.py --skip-mc  # density evolution only
    python scripts/reproduce_figures.py fig7 table1
"""

import argparse
import sys
import time
from pathlib import Path

from cpsres import cli

ROOT = Path(__file__).resolve().parent.parent
MC_RECIPES = {"fig8"}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="recipe names (default: all)")
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    ap.add_argument("--skip-mc", action="store_true", help="skip Monte-Carlo recipes")
    args = ap.parse_args(argv)

    recipes = sorted((ROOT / "recipes").glob("*.cfg"))
    if args.names:
        recipes = [r for r in recipes if r.stem in args.names]
    if args.skip_mc:
        recipes = [r for r in recipes if r.stem not in MC_RECIPES]

    status = 0
    for recipe in recipes:
        t0 = time.perf_counter()
        code = cli.main(["--config", str(recipe), "--out-dir", args.out_dir])
        print(f"[{recipe.stem}] exit={code} {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
