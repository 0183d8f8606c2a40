from typing import Callable, List, TypeVar

T = TypeVar("T")


def parse_list(text: str, cast: Callable[[str], T] = float) -> List[T]:
    """Split a comma separated flag value"""
    return [cast(item.strip()) for item in text.split(",") if item.strip()]
