"""Schema documents: the measurement vocabulary as data.

Each schema ships as a JSON document naming its properties, their types and
units, and the returned shape. The registry loads every document once at
import and is closed afterwards, so validation behavior cannot change
mid-run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Optional

from falcon.core.types import InvariantViolation

_DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class PropertySpec:
    """One property of a schema: wire name, type, and constraints."""

    name: str
    type: str
    required: bool
    description: str = ""
    units: Optional[str] = None
    #: Element type for arrays ("items" in the document).
    element_type: Optional[str] = None
    #: Value type for objects ("additionalProperties" in the document).
    value_type: Optional[str] = None
    #: Value substituted when an optional property is absent.
    default: object = None
    has_default: bool = False


@dataclass(frozen=True)
class ReturnsSpec:
    type: str
    description: str = ""


@dataclass(frozen=True)
class SchemaDoc:
    """A named, versioned measurement schema."""

    id: str
    version: int
    description: str
    properties: tuple[PropertySpec, ...]
    returns: ReturnsSpec
    source: dict = field(compare=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.version, int) or self.version < 1:
            raise InvariantViolation(
                f"schema {self.id!r} version must be a positive integer"
            )
        names = [spec.name for spec in self.properties]
        if len(names) != len(set(names)):
            raise InvariantViolation(f"schema {self.id!r} has duplicate properties")
        for spec in self.properties:
            if spec.required and not spec.type:
                raise InvariantViolation(
                    f"schema {self.id!r} property {spec.name!r} is required"
                    " but has no type"
                )

    def property(self, name: str) -> Optional[PropertySpec]:
        for spec in self.properties:
            if spec.name == name:
                return spec
        return None


def _parse_property(name: str, raw: dict) -> PropertySpec:
    if not isinstance(raw, dict) or not isinstance(raw.get("type"), str):
        raise InvariantViolation(f"schema property {name!r} must declare a type")
    items = raw.get("items")
    additional = raw.get("additionalProperties")
    return PropertySpec(
        name=name,
        type=raw["type"],
        required=bool(raw.get("required", False)),
        description=raw.get("description", ""),
        units=raw.get("units"),
        element_type=items.get("type") if isinstance(items, dict) else None,
        value_type=additional.get("type") if isinstance(additional, dict) else None,
        default=raw.get("default"),
        has_default="default" in raw,
    )


def parse_schema_doc(document: dict) -> SchemaDoc:
    """Build a SchemaDoc from its JSON document form."""
    title = document.get("title")
    if not isinstance(title, str) or not title:
        raise InvariantViolation("schema document must carry a nonempty title")
    raw_properties = document.get("properties")
    if not isinstance(raw_properties, dict):
        raise InvariantViolation(f"schema {title!r} must declare properties")
    raw_returns = document.get("returns", {})
    returns = ReturnsSpec(
        type=raw_returns.get("type", ""),
        description=raw_returns.get("description", ""),
    )
    return SchemaDoc(
        id=title,
        version=document.get("version", 1),
        description=document.get("description", ""),
        properties=tuple(
            _parse_property(name, raw) for name, raw in raw_properties.items()
        ),
        returns=returns,
        source=document,
    )


def _load_registry() -> Mapping[str, SchemaDoc]:
    docs = {}
    for path in sorted(_DATA_DIR.glob("*.json")):
        doc = parse_schema_doc(json.loads(path.read_text(encoding="utf-8")))
        if doc.id in docs:
            raise InvariantViolation(f"duplicate schema id {doc.id!r}")
        docs[doc.id] = doc
    return MappingProxyType(docs)


#: All shipped schemas, loaded once and read-only afterwards.
SCHEMA_REGISTRY: Mapping[str, SchemaDoc] = _load_registry()


def schema_ids() -> tuple[str, ...]:
    return tuple(sorted(SCHEMA_REGISTRY))


def get_schema(schema_id: str) -> Optional[SchemaDoc]:
    return SCHEMA_REGISTRY.get(schema_id)


def _describe_type(spec: PropertySpec) -> str:
    if spec.type == "array" and spec.element_type:
        return f"array of {spec.element_type}"
    if spec.type == "object" and spec.value_type:
        return f"object of target -> {spec.value_type}"
    return spec.type


def reference_text() -> str:
    """A human-readable reference for every registered schema."""
    lines = ["Measurement schema reference", "============================", ""]
    for schema_id in schema_ids():
        doc = SCHEMA_REGISTRY[schema_id]
        heading = f"{doc.id} (version {doc.version})"
        lines.append(heading)
        lines.append("-" * len(heading))
        if doc.description:
            lines.append(doc.description)
        lines.append("")
        lines.append("Properties:")
        for spec in doc.properties:
            flags = ["required" if spec.required else "optional"]
            if spec.units:
                flags.append(spec.units)
            if spec.has_default:
                flags.append(f"default {spec.default!r}")
            lines.append(f"  {spec.name}: {_describe_type(spec)} ({', '.join(flags)})")
            if spec.description:
                lines.append(f"      {spec.description}")
        lines.append(f"Returns: {doc.returns.type}")
        if doc.returns.description:
            lines.append(f"      {doc.returns.description}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
