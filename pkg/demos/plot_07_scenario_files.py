"""
Running a packaged scenario
===========================

Scenarios are JSON files validated against a schema. Running one writes a
CSV per path and a JSON summary, both stamped with the resolved config and
seed. The same thing is available as ``funcgen generate --config NAME``.
"""
import json
import tempfile
from pathlib import Path

from funcgen.cli import load_config, packaged_scenarios, resolve, run_scenario

print("packaged scenarios:", packaged_scenarios())
out = Path(tempfile.mkdtemp())
summary = run_scenario(resolve(load_config("quadratic_gbm")), out)
print("written:", sorted(p.name for p in out.iterdir()))
print(json.dumps(summary["residuals"], indent=1))
print((out / summary["csv_files"][0]).read_text().splitlines()[3])
