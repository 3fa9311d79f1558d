'''
Command-line entry point for the scattering toolkit.

Examples (run from the repository root):

  uv run python code/core/01_scatter.py spectrum --scene scenes/one_disc.scn --n-psi 200 --n-phi 200 --out s.csv
  uv run python code/core/01_scatter.py santalo --scene scenes/one_disc.scn --n-psi 400 --n-phi 400
  uv run python code/core/01_scatter.py compare --scene-a a.scn --scene-b b.scn --tol 1e-7

Exit codes: 0 success / indistinguishable, 2 input error, 3 "Different",
4 internal invariant violation.
'''

from __future__ import annotations

from pathlib import Path
import sys

CODE_ROOT = Path(__file__).resolve().parents[1]
if str(CODE_ROOT) not in sys.path:
    sys.path.insert(0, str(CODE_ROOT))

from _cli import main


if __name__ == "__main__":
    raise SystemExit(main())
