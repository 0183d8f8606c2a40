from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

Method = Literal["sd", "primal", "dual"]


class ComplexityConfig(BaseModel):
    """Problem dimensions and timing parameters of one benchmark case"""
    height: int = Field(8, ge=1)
    width: int = Field(8, ge=1)
    kernel_size: int = Field(3, ge=1)
    in_channels: int = Field(4, ge=1)
    out_channels: int = Field(3, ge=1)
    samples: int = Field(2, ge=1)
    iterations: int = Field(5, ge=1)
    method: Method = "sd"
    repetitions: int = Field(5, ge=3)
    warmup: int = Field(2, ge=0)
    dtype: Literal["float64", "float32"] = "float64"
    seed: int = 0

    @field_validator("kernel_size")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {value}")
        return value


class BenchRecord(BaseModel):
    config: ComplexityConfig
    time_ns_median: Optional[float] = None
    time_ns_min: Optional[float] = None
    flop_estimate: int
    skipped: Optional[str] = None


class SweepResult(BaseModel):
    method: Method
    axis: str
    values: List[int]
    records: List[BenchRecord]
    time_slope: Optional[float] = None
    flop_slope: Optional[float] = None
    parity_error: Optional[float] = None
