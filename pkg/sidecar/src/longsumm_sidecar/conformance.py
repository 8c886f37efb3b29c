"""Protocol conformance checker.

Replays the golden request fixtures against a live service and validates
every response against a typed schema, reporting the exact JSON path of the
first mismatch. Requests are serialized canonically (sorted keys, compact
separators) and sent byte-for-byte, so two conforming services see identical
request bodies.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from importlib import resources

import httpx

__all__ = ["CheckResult", "ConformanceReport", "conformance_check", "main"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConformanceReport:
    target: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(check.passed for check in self.checks)

    def render(self) -> str:
        lines = [f"conformance against {self.target}: {'PASS' if self.passed else 'FAIL'}"]
        for check in self.checks:
            status = "ok  " if check.passed else "FAIL"
            suffix = f" ({check.detail})" if check.detail else ""
            lines.append(f"  {status} {check.name}{suffix}")
        return "\n".join(lines)


def _schema_errors(value, schema: dict, path: str) -> list[str]:
    """Validate ``value`` against a minimal typed schema; return mismatch paths."""
    kind = schema.get("type")
    if kind == "object":
        if not isinstance(value, dict):
            return [f"{path}: expected object, got {type(value).__name__}"]
        errors = []
        for key, sub in schema.get("required", {}).items():
            if key not in value:
                errors.append(f"{path}.{key}: missing required field")
            else:
                errors.extend(_schema_errors(value[key], sub, f"{path}.{key}"))
        return errors
    if kind == "array":
        if not isinstance(value, list):
            return [f"{path}: expected array, got {type(value).__name__}"]
        errors = []
        if "length" in schema and len(value) != schema["length"]:
            errors.append(f"{path}: expected length {schema['length']}, got {len(value)}")
        if "min_items" in schema and len(value) < schema["min_items"]:
            errors.append(f"{path}: expected at least {schema['min_items']} items")
        item_schema = schema.get("items")
        if item_schema:
            for i, item in enumerate(value):
                errors.extend(_schema_errors(item, item_schema, f"{path}[{i}]"))
        return errors
    if kind == "string":
        if not isinstance(value, str):
            return [f"{path}: expected string, got {type(value).__name__}"]
        return []
    if kind in ("integer", "number"):
        ok = isinstance(value, int) and not isinstance(value, bool)
        if kind == "number":
            ok = ok or isinstance(value, float)
        if not ok:
            return [f"{path}: expected {kind}, got {type(value).__name__}"]
        errors = []
        if "equals" in schema and value != schema["equals"]:
            errors.append(f"{path}: expected {schema['equals']}, got {value}")
        if "minimum" in schema and value < schema["minimum"]:
            errors.append(f"{path}: expected >= {schema['minimum']}, got {value}")
        return errors
    return [f"{path}: unknown schema type {kind!r}"]


def _load_fixtures() -> list[dict]:
    raw = resources.files("longsumm_sidecar").joinpath("data/golden_fixtures.json")
    return json.loads(raw.read_text(encoding="utf-8"))["fixtures"]


def _substitute(value, replacements: dict[str, str]):
    if isinstance(value, str):
        for placeholder, actual in replacements.items():
            value = value.replace(placeholder, actual)
        return value
    if isinstance(value, list):
        return [_substitute(item, replacements) for item in value]
    if isinstance(value, dict):
        return {k: _substitute(v, replacements) for k, v in value.items()}
    return value


def _discover_models(client: httpx.Client, base_url: str) -> dict[str, str]:
    response = client.get(f"{base_url}/v1/models")
    response.raise_for_status()
    profiles = response.json()["profiles"]
    replacements = {}
    for profile in profiles:
        if profile.get("role") == "extractive" and "{extractive_model}" not in replacements:
            replacements["{extractive_model}"] = profile["model_id"]
        if profile.get("role") == "abstractive" and "{abstractive_model}" not in replacements:
            replacements["{abstractive_model}"] = profile["model_id"]
    return replacements


def _extra_checks(name: str, body: dict, request: dict | None) -> list[str]:
    if name == "embed-three-texts":
        vectors = body.get("vectors", [])
        dim = body.get("dim")
        errors = []
        if request and len(vectors) != len(request["texts"]):
            errors.append(
                f".vectors: expected {len(request['texts'])} vectors, got {len(vectors)}"
            )
        for i, vector in enumerate(vectors):
            if isinstance(vector, list) and isinstance(dim, int) and len(vector) != dim:
                errors.append(f".vectors[{i}]: length {len(vector)} does not match dim {dim}")
        return errors
    return []


def conformance_check(base_url: str, client: httpx.Client | None = None) -> ConformanceReport:
    """Replay the golden fixtures against ``base_url``."""
    base_url = base_url.rstrip("/")
    report = ConformanceReport(target=base_url)
    owns_client = client is None
    client = client or httpx.Client(timeout=60.0)
    try:
        try:
            replacements = _discover_models(client, base_url)
        except Exception as exc:
            report.checks.append(
                CheckResult("models-endpoint", False, f"GET /v1/models failed: {exc}")
            )
            return report
        for fixture in _load_fixtures():
            name = fixture["name"]
            path = fixture["path"]
            request_body = _substitute(fixture.get("request"), replacements)
            try:
                if fixture["method"] == "GET":
                    response = client.get(f"{base_url}{path}")
                else:
                    payload = json.dumps(
                        request_body, sort_keys=True, separators=(",", ":")
                    ).encode("utf-8")
                    response = client.post(
                        f"{base_url}{path}",
                        content=payload,
                        headers={"Content-Type": "application/json"},
                    )
            except Exception as exc:
                report.checks.append(CheckResult(name, False, f"{path}: {exc}"))
                continue
            if response.status_code != fixture["expect_status"]:
                report.checks.append(
                    CheckResult(
                        name,
                        False,
                        f"endpoint {path}: HTTP {response.status_code}, "
                        f"expected {fixture['expect_status']}",
                    )
                )
                continue
            try:
                body = response.json()
            except ValueError:
                report.checks.append(CheckResult(name, False, f"{path}: non-JSON response"))
                continue
            errors = _schema_errors(body, fixture["response_schema"], "")
            errors.extend(_extra_checks(name, body, request_body))
            if errors:
                report.checks.append(CheckResult(name, False, "; ".join(errors)))
            else:
                report.checks.append(CheckResult(name, True))
    finally:
        if owns_client:
            client.close()
    return report


def main(argv: list[str] | None = None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    if len(argv) != 1:
        print("usage: python -m longsumm_sidecar.conformance BASE_URL", file=sys.stderr)
        return 2
    report = conformance_check(argv[0])
    print(report.render())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
