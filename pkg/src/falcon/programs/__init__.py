"""Shipped example programs and the default run configuration."""

from __future__ import annotations

import importlib.resources


def program_source(name: str) -> str:
    """Return the text of a shipped .fal program by file name."""
    return (
        importlib.resources.files("falcon.programs").joinpath(name).read_text(encoding="utf-8")
    )


def check_plunger_gates_source() -> str:
    return program_source("check_plunger_gates.fal")


def charge_configuration_tuner_source() -> str:
    return program_source("charge_configuration_tuner.fal")


def default_config_text() -> str:
    return (
        importlib.resources.files("falcon.programs")
        .joinpath("default_config.json")
        .read_text(encoding="utf-8")
    )
