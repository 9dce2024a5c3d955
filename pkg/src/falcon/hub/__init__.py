"""Instrument registry, job tracking, and dataset persistence."""

from falcon.hub.client import HubClient, JobOutcome, device_states_payload
from falcon.hub.core import HubError, InstrumentHub, SubmitOutcome
from falcon.hub.datasets import (
    DatasetColumn,
    DatasetIntegrityError,
    DatasetManifest,
    load_dataset,
    write_dataset,
)
from falcon.hub.records import (
    InstrumentParameter,
    InstrumentRecord,
    JobRecord,
    JobStatus,
    parse_instrument_document,
    transition_allowed,
)
from falcon.hub.service import HubService

__all__ = [
    "DatasetColumn",
    "DatasetIntegrityError",
    "DatasetManifest",
    "HubClient",
    "HubError",
    "HubService",
    "InstrumentHub",
    "InstrumentParameter",
    "InstrumentRecord",
    "JobOutcome",
    "JobRecord",
    "JobStatus",
    "SubmitOutcome",
    "device_states_payload",
    "load_dataset",
    "parse_instrument_document",
    "transition_allowed",
    "write_dataset",
]
