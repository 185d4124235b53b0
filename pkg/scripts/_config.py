"""Tiny helper: expose a dataclass's fields as argparse flags."""

from __future__ import annotations

import argparse
import dataclasses
from typing import TypeVar

T = TypeVar("T")


def parse_config(cls: type[T], description: str) -> T:
    parser = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, bool):
            parser.add_argument(flag, action=argparse.BooleanOptionalAction, default=default)
        elif isinstance(default, tuple):
            parser.add_argument(flag, nargs="*", default=default)
        else:
            parser.add_argument(flag, type=type(default), default=default)
    ns = parser.parse_args()
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in vars(ns).items()})
