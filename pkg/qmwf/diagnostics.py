"""Structured diagnostic records for loaders and filters."""

import logging
from typing import Optional

from pydantic import BaseModel, Field

logger = logging.getLogger("qmwf.diagnostics")


class Diagnostic(BaseModel):
    """One count emitted by a loader or filter step."""

    source: str = Field(description="Step that produced the count (e.g. load_tsv)")
    event: str = Field(description="What was counted (e.g. malformed_lines)")
    count: int = Field(ge=0)
    path: Optional[str] = None
    samples: list[str] = Field(default_factory=list, description="A few offending inputs")


def emit(
    source: str,
    event: str,
    count: int,
    path: Optional[str] = None,
    samples: Optional[list[str]] = None,
    warn: bool = False,
) -> Diagnostic:
    """Log a diagnostic record as one JSON line and return it."""
    record = Diagnostic(
        source=source,
        event=event,
        count=count,
        path=path,
        samples=list(samples or [])[:5],
    )
    level = logging.WARNING if warn and count else logging.INFO
    logger.log(level, record.model_dump_json())
    return record
