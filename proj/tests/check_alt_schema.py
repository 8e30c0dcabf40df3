"""Validates `arc parse` output for every corpus program against schema/alt.schema.json."""
import glob
import json
import subprocess
import sys

import jsonschema

arc, source = sys.argv[1], sys.argv[2]
validator = jsonschema.Draft202012Validator(json.load(open(f"{source}/schema/alt.schema.json")))
failures = checked = 0
for path in sorted(glob.glob(f"{source}/corpus/fixtures/*/*.arc") + glob.glob(f"{source}/corpus/fixtures/*/*.sql")):
    run = subprocess.run([arc, "parse", path], capture_output=True, text=True)
    if run.returncode != 0:
        continue  # diagnostic fixtures that do not parse or translate
    checked += 1
    for error in validator.iter_errors(json.loads(run.stdout)):
        failures += 1
        print(f"{path}: {'/'.join(map(str, error.path))}: {error.message}")
        break
print(f"{checked} documents checked, {failures} invalid")
sys.exit(1 if failures or checked == 0 else 0)
