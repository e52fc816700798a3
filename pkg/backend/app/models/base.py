from typing import Optional, Dict, Any
from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.exceptions import InvalidParameters


class FrozenModel(BaseModel):
    """Immutable value model; numpy arrays are allowed as field types"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @classmethod
    def build(cls, **data: Any):
        """Validate and construct, translating pydantic errors into InvalidParameters"""
        try:
            return cls(**data)
        except ValidationError as e:
            raise InvalidParameters(f"Invalid {cls.__name__}: {e.errors()[0]['msg']}") from e


class BaseResponse(BaseModel):
    """Base response model"""
    success: bool = True
    message: str = "Operation completed successfully"
    data: Optional[Dict[str, Any]] = None
