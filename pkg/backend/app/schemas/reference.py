from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class ReferenceSegment(BaseModel):
    t_start: float = Field(ge=0)
    y_r: float

    model_config = {"frozen": True}


class ReferenceSchedule(BaseModel):
    """Piecewise-constant y_r(t); each segment holds from its t_start onward."""

    segments: tuple[ReferenceSegment, ...]

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_ordering(self) -> ReferenceSchedule:
        if not self.segments:
            raise ValueError("reference schedule needs at least one segment")
        if self.segments[0].t_start != 0:
            raise ValueError("first reference segment must start at t=0")
        for prev, nxt in zip(self.segments, self.segments[1:], strict=False):
            if nxt.t_start <= prev.t_start:
                raise ValueError(
                    f"segment start times must strictly increase ({prev.t_start} -> {nxt.t_start})"
                )
        return self

    @classmethod
    def constant(cls, y_r: float) -> ReferenceSchedule:
        return cls(segments=(ReferenceSegment(t_start=0.0, y_r=y_r),))

    def bounds(self, t_end: float) -> list[tuple[float, float]]:
        """[start, end) of every segment, the last one closed at t_end."""
        starts = [s.t_start for s in self.segments]
        return list(zip(starts, [*starts[1:], t_end], strict=True))
