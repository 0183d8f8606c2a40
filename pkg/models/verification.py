from typing import List, Literal

from pydantic import BaseModel, Field

Suite = Literal["adjoint", "oracle", "gradcheck", "woodbury"]


class SuiteResult(BaseModel):
    """Pass/fail count of one property suite and its worst observed error"""
    suite: Suite
    cases: int = Field(ge=0)
    passed: int = Field(ge=0)
    failed: int = Field(ge=0)
    max_error: float = Field(ge=0)
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.failed == 0


class VerifyReport(BaseModel):
    seed: int
    suites: List[SuiteResult]

    @property
    def ok(self) -> bool:
        return all(result.ok for result in self.suites)
