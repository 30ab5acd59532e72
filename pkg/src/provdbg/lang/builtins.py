"""Loading of the builtin effect/nondeterminism spec table."""

from __future__ import annotations

import json
from importlib import resources

from .ir import LibSpec

FREE_BUILTINS = ("now", "rand", "input")
STRUCT_KINDS = ("list", "map", "queue")


def _parse_entry(name: str, raw: dict) -> LibSpec:
    return LibSpec(
        name=name,
        base_effects=tuple(raw.get("base", [])),
        ret_write=bool(raw.get("ret", False)),
        ret_star=raw.get("retStar"),
        arg_star=tuple(raw.get("argStar", [])),
        nondet=bool(raw.get("nondet", False)),
        witness=raw.get("witness", "none"),
        blocking=bool(raw.get("blocking", False)),
    )


def core_libspecs() -> dict[str, LibSpec]:
    text = resources.files("provdbg.lang").joinpath("data/builtins.json").read_text()
    raw = json.loads(text)
    return {name: _parse_entry(name, entry) for name, entry in raw.items()}


def method_names() -> set[str]:
    """Unqualified method names of the structure builtins (e.g. 'put', 'poll')."""
    out = set()
    for key in core_libspecs():
        if "." in key:
            out.add(key.split(".", 1)[1])
    return out
