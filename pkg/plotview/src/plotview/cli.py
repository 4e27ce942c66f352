"""plotview <kind> --in DIR --out FILE"""

import argparse
import sys
from pathlib import Path

from .figures import plot_arrival, plot_correlation, plot_pemit
from .reader import SchemaMismatch

KINDS = {
    "arrival": plot_arrival,
    "correlation": plot_correlation,
    "pemit": plot_pemit,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotview",
        description="Render photonsource analysis outputs as figures.")
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("--in", dest="in_dir", type=Path, required=True,
                        help="directory with analyze outputs")
    parser.add_argument("--out", type=Path, required=True,
                        help="output image path")
    args = parser.parse_args(argv)
    try:
        out = KINDS[args.kind](args.in_dir, args.out)
    except (SchemaMismatch, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
