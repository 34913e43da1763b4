#!/usr/bin/env python3
"""Launch the dialogue shell with the repo fixtures.

Examples:
    python scripts/run_shell.py                        # interactive REPL
    python scripts/run_shell.py --script fixtures/golden_script.txt
    python scripts/run_shell.py --serve 8765           # WebSocket bridge
Extra flags are passed straight through to parley-shell.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from parley.shell import main  # noqa: E402

FIXTURES = ROOT / "fixtures"

DEFAULTS = [
    "--grammar", str(FIXTURES / "grammar.gram"),
    "--flow", str(FIXTURES / "flow.txt"),
    "--ontology", str(FIXTURES / "ontology.txt"),
    "--domain", str(FIXTURES / "schedule.csv"),
    "--scenario", str(FIXTURES / "scenario.txt"),
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
