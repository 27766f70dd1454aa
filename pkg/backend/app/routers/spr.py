from __future__ import annotations

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field, ValidationError

from app.schemas.lti import SprCertificate, TransferFunction
from app.services import lti_service
from app.services.config_service import describe_validation_error

router = APIRouter()


class SprRequest(BaseModel):
    num: list[float] = Field(min_length=1)
    den: list[float] = Field(min_length=1)


class SprResponse(BaseModel):
    certificate: SprCertificate
    realpart_poly_text: str
    is_spr: bool


@router.post("/spr", response_model=SprResponse)
def spr_check(body: SprRequest) -> SprResponse:
    try:
        tf = TransferFunction(num=tuple(body.num), den=tuple(body.den))
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=describe_validation_error(e)) from e
    cert = lti_service.spr_test(tf)
    return SprResponse(
        certificate=cert, realpart_poly_text=cert.describe_poly(), is_spr=cert.is_spr
    )
