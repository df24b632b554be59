#!/usr/bin/env python3
"""Validates configs/ against schemas/config.schema.json; files under configs/invalid/ must be rejected."""
import json
import pathlib
import sys

import jsonschema

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    schema = json.loads((ROOT / "schemas" / "config.schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for path in sorted((ROOT / "configs").rglob("*.json")):
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        expect_invalid = "invalid" in path.parts
        if bool(errors) != expect_invalid:
            bad += 1
            print(f"{path.relative_to(ROOT)}: expected {'invalid' if expect_invalid else 'valid'}")
            for e in errors:
                print(f"  {'/'.join(map(str, e.path))}: {e.message}")
    print("schema check:", "ok" if bad == 0 else f"{bad} mismatches")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
