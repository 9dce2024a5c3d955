"""Measurement schemas: the vocabulary shared by runtime, hub, and server."""

from falcon.schemas.docs import (
    PropertySpec,
    ReturnsSpec,
    SCHEMA_REGISTRY,
    SchemaDoc,
    get_schema,
    parse_schema_doc,
    reference_text,
    schema_ids,
)
from falcon.schemas.requests import (
    GetSetRequest,
    MeasurementResponse,
    Sweep1DRequest,
    ValidationIssue,
    ValidationResult,
    canonicalize,
    validate_request,
)

__all__ = [
    "GetSetRequest",
    "MeasurementResponse",
    "PropertySpec",
    "ReturnsSpec",
    "SCHEMA_REGISTRY",
    "SchemaDoc",
    "Sweep1DRequest",
    "ValidationIssue",
    "ValidationResult",
    "canonicalize",
    "get_schema",
    "parse_schema_doc",
    "reference_text",
    "schema_ids",
    "validate_request",
]
