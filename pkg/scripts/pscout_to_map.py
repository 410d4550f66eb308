#!/usr/bin/env python3
"""Convert a PScout-style mapping dump to the libtrend permission-map TSV.

Input blocks look like::

    Permission:android.permission.ACCESS_NETWORK_STATE
    12 Callers:
    <android.net.ConnectivityManager: android.net.NetworkInfo getActiveNetworkInfo()> (3 callers)

Every ``<class: rettype method(args)>`` line under a permission header
becomes one API row.  An API listed under several permissions is emitted as
a single any-of group, the maximal reading for static analysis: without
control flow we cannot tell which alternative a call path exercises.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

PERMISSION_RE = re.compile(r"^Permission:(?:android\.permission\.)?([A-Za-z_.]+)\s*$")
CALLER_RE = re.compile(r"^<([\w.$]+):\s+\S+\s+([\w$<>]+)\(([^)]*)\)>")


def convert(text: str) -> list[tuple[str, str]]:
    permission: str | None = None
    apis: dict[str, set[str]] = {}
    for raw in text.split("\n"):
        line = raw.strip()
        header = PERMISSION_RE.match(line)
        if header:
            permission = header.group(1).upper().replace(".", "_")
            continue
        caller = CALLER_RE.match(line)
        if caller and permission:
            cls, method, args = caller.groups()
            signature = f"{cls}.{method}({args.replace(' ', '')})"
            apis.setdefault(signature, set()).add(permission)
    return [(api, "|".join(sorted(perms))) for api, perms in sorted(apis.items())]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("input", type=Path, help="PScout mapping dump")
    parser.add_argument("-o", "--output", type=Path, help="TSV output (default: stdout)")
    args = parser.parse_args(argv)
    rows = convert(args.input.read_text("utf-8", errors="replace"))
    body = "".join(f"{api}\t{perms}\n" for api, perms in rows)
    if args.output:
        args.output.write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)
    return 0


if __name__ == "__main__":
    sys.exit(main())
