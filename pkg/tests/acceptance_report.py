"""Collects one pass/fail line per acceptance criterion."""

import time
from contextlib import contextmanager

RESULTS: dict[int, str] = {}


@contextmanager
def criterion(number: int, title: str):
    details: dict = {}
    start = time.perf_counter()
    ok = False
    try:
        yield details
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        extra = ", ".join(f"{k}={v}" for k, v in details.items())
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title} [{elapsed:.2f} s{', ' + extra if extra else ''}]"
        RESULTS[number] = line
        print(line)
