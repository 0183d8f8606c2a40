from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class RunManifest(BaseModel):
    """What a CLI run read, how it was configured and what it wrote"""
    subcommand: str
    inputs: List[str] = []
    config: Dict[str, Any] = {}
    outputs: List[str] = []
    seed: Optional[int] = None
