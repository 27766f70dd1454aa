from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, model_validator


class TransferFunction(BaseModel):
    """SISO rational function num(s)/den(s), coefficients in descending powers.

    Leading zeros are stripped and den is normalised to be monic on
    construction; improper functions are rejected.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]

    model_config = {"frozen": True}

    @model_validator(mode="before")
    @classmethod
    def normalise(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        num = np.trim_zeros(np.asarray(data.get("num", ()), dtype=float), "f")
        den = np.trim_zeros(np.asarray(data.get("den", ()), dtype=float), "f")
        if den.size == 0:
            raise ValueError("denominator is the zero polynomial")
        if num.size == 0:
            num = np.zeros(1)
        if num.size > den.size:
            raise ValueError(
                f"improper transfer function: deg(num)={num.size - 1} > deg(den)={den.size - 1}"
            )
        lead = den[0]
        return {
            "num": tuple(float(c) for c in num / lead),
            "den": tuple(float(c) for c in den / lead),
        }

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        if not any(self.num):
            return self.order
        return len(self.den) - len(self.num)

    @property
    def is_strictly_proper(self) -> bool:
        return self.relative_degree >= 1

    def evaluate(self, s: complex) -> complex:
        return complex(np.polyval(self.num, s) / np.polyval(self.den, s))


class SprVerdict(str, Enum):
    STRICTLY_POSITIVE_REAL = "StrictlyPositiveReal"
    POSITIVE_REAL_ONLY = "PositiveRealOnly"
    NOT_POSITIVE_REAL = "NotPositiveReal"


class SprCertificate(BaseModel):
    hurwitz: bool
    # p(x), descending powers of x = ω²
    realpart_poly: list[float]
    min_nonneg_value: float
    relative_degree: int
    verdict: SprVerdict
    reason: str | None = None

    model_config = {"frozen": True, "ser_json_inf_nan": "constants"}

    @property
    def is_spr(self) -> bool:
        return self.verdict is SprVerdict.STRICTLY_POSITIVE_REAL

    def describe_poly(self) -> str:
        """Render p(x) in ascending order, e.g. ``24010000 + 2450x``."""
        terms = []
        for power, coeff in enumerate(reversed(self.realpart_poly)):
            if coeff == 0 and len(self.realpart_poly) > 1:
                continue
            mag = f"{abs(coeff):.12g}"
            body = mag if power == 0 else f"{mag}x" if power == 1 else f"{mag}x^{power}"
            if not terms:
                terms.append(body if coeff >= 0 else f"-{body}")
            else:
                terms.append(f"{'+' if coeff >= 0 else '-'} {body}")
        return " ".join(terms) if terms else "0"
