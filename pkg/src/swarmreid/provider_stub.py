"""Reference provider served over stdin/stdout.

Run as ``python -m swarmreid.provider_stub``; reads one JSON request per
line and writes one JSON response per line. Useful as a subprocess provider
target in tests and as a template for wiring in real models.
"""

from __future__ import annotations

import json
import sys

from .providers import handle_request


def main() -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"error": f"bad JSON: {exc}"}
        else:
            response = handle_request(request)
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
