#!/usr/bin/env python3
"""Generate a labeled synthetic corpus directory (thin wrapper over the CLI).

    python scripts/make_corpus.py --seed 0 --systems 8 --classes 200 --out build/corpus
"""

from __future__ import annotations

import sys

from smellkit.cli import main

if __name__ == "__main__":
    sys.exit(main(["synth"] + sys.argv[1:]))
