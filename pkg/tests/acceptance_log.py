"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

LINES = []


def record(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    LINES.append(line)
    print(line)
    return ok
