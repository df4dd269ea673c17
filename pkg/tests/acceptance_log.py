"""Collects one summary line per acceptance criterion for the terminal report."""

LINES: list[str] = []


def record(label, ok, detail):
    status = "PASS" if ok else "FAIL"
    LINES.append(f"{label:<14} {status}  {detail}")
    return ok
