"""Regenerate the committed OpenAPI document from the service app."""

import json
import sys
import tempfile
from pathlib import Path

from singan.service import create_app


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("docs/openapi.json")
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(Path(tmp))
        out.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
