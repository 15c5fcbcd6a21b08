"""Shared pass/fail report entries for the property-check batteries."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["CheckEntry", "format_report", "all_passed"]


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    detail: str


def all_passed(entries) -> bool:
    return all(e.passed for e in entries)


def format_report(entries) -> str:
    lines = []
    for e in entries:
        lines.append(f"[{'PASS' if e.passed else 'FAIL'}] {e.name}: {e.detail}")
    return "\n".join(lines)
