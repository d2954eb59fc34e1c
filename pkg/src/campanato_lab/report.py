"""Shared result containers for verification suites and norm computations."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction


@dataclass
class Check:
    """One verified statement: a measured quantity against a threshold."""

    name: str
    anchor: str
    measured: dict
    threshold: str
    passed: bool
    witness: object = None

    def to_dict(self):
        return {
            "name": self.name,
            "anchor": self.anchor,
            "measured": _jsonable(self.measured),
            "threshold": self.threshold,
            "passed": self.passed,
            "witness": _jsonable(self.witness),
        }


@dataclass
class VerificationReport:
    """A named suite of checks; fails iff any check fails."""

    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _jsonable(obj):
    """Recursively convert report payloads to JSON-serializable values.

    Fractions become "p/q" strings so exact-mode results stay exact in the
    report; floats pass through (Python's repr round-trips them).
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if hasattr(obj, "__float__"):
        return float(obj)
    return str(obj)


def jsonable(obj):
    return _jsonable(obj)


def canonical_json(payload):
    """Deterministic JSON text: sorted keys, no whitespace surprises."""
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2)


def content_hash(payload, exclude=("generated_at", "content_hash")):
    """SHA-256 of the canonical JSON with volatile fields removed."""
    if isinstance(payload, dict):
        payload = {k: v for k, v in payload.items() if k not in exclude}
    digest = hashlib.sha256(canonical_json(payload).encode("utf-8"))
    return digest.hexdigest()
