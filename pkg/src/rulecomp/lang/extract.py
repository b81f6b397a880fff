"""Pull the program text out of a model response."""

from __future__ import annotations

import re

from .nodes import Assign, FunctionDef, Module
from .parser import parse

_FENCE = re.compile(r"^[ \t]*(```+|~~~+)[^\n]*$", re.MULTILINE)


def fenced_blocks(response: str) -> list[str]:
    """Contents of every fenced block, in order.  An unclosed final fence runs to the end."""
    blocks: list[str] = []
    marks = list(_FENCE.finditer(response))
    i = 0
    while i < len(marks):
        opener = marks[i]
        fence = opener.group(1)
        closer = None
        for j in range(i + 1, len(marks)):
            cand = marks[j]
            if cand.group(1)[0] == fence[0] and len(cand.group(1)) >= len(fence) and not cand.group(0).strip()[len(cand.group(1)):]:
                closer = j
                break
        start = opener.end() + 1
        if closer is None:
            blocks.append(response[start:])
            break
        blocks.append(response[start : marks[closer].start()])
        i = closer + 1
    return blocks


def _looks_like_program(module: Module) -> bool:
    return any(isinstance(stmt, (FunctionDef, Assign)) for stmt in module.body)


def extract_code_block(response: str) -> str | None:
    """The last fenced code block; else the whole response if it parses as a
    program (defines or assigns something); else ``None``."""
    blocks = fenced_blocks(response)
    if blocks:
        return blocks[-1]
    outcome = parse(response)
    if outcome.ok and _looks_like_program(outcome.result):
        return response
    return None
