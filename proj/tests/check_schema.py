"""Validates the run-spec schema and every shipped spec with the jsonschema package."""
import json
import pathlib
import sys

import jsonschema


def main(schema_path, specs_dir):
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft7Validator.check_schema(schema)
    validator = jsonschema.Draft7Validator(schema)
    failed = 0
    for spec in sorted(pathlib.Path(specs_dir).glob("*.json")):
        errors = list(validator.iter_errors(json.loads(spec.read_text())))
        for e in errors:
            print(f"{spec.name}: /{'/'.join(map(str, e.absolute_path))}: {e.message}")
        failed += bool(errors)
    bad = json.loads((pathlib.Path(specs_dir) / "alpha_scan_chain.json").read_text())
    bad["alphas"] = []
    if validator.is_valid(bad):
        print("empty alpha list accepted")
        failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
