"""Validate every *.json report in a directory against the report schema."""

import json
import pathlib
import sys

import jsonschema


def main() -> int:
    schema = json.loads(pathlib.Path(sys.argv[1]).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    reports = sorted(pathlib.Path(sys.argv[2]).glob("*.json"))
    if not reports:
        print("no reports found")
        return 1
    failed = 0
    for path in reports:
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        for err in errors:
            print(f"{path.name}: {err.json_path}: {err.message}")
        failed += bool(errors)
        print(f"{path.name}: {'ok' if not errors else 'INVALID'}")
        # The schema must also reject a report missing its claims.
        broken = json.loads(path.read_text())
        broken.pop("claims", None)
        if validator.is_valid(broken):
            print(f"{path.name}: schema accepted a report without claims")
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
