"""
Driving runs from configuration files
=====================================

The ``wide-solver`` command reads a JSON configuration, writes CSV/JSON
outputs and gates its exit code on the checks.  This script calls the same
entry point in-process on the shipped configurations.
"""

import tempfile
from pathlib import Path

from wide_solver.cli import main

configs = Path(__file__).resolve().parents[1] / "configs"
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    print("exit", main(["solve", "--config", str(configs / "wave_mode1.json"), "--out", str(out / "wave")]))
    print("exit", main(["sweep", "--config", str(configs / "wave_sweep.json"), "--out", str(out / "sweep")]))
    print((out / "sweep" / "convergence.csv").read_text())
    # a second identical run reproduces every CSV byte for byte
    main(["solve", "--config", str(configs / "wave_mode1.json"), "--out", str(out / "again")])
    print("exit", main(["compare", str(out / "wave"), str(out / "again"), "--tol", "0"]))
    print("exit", main(["plotdata", str(out / "wave")]))
