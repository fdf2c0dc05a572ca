"""Collects one verdict line per acceptance criterion for the terminal summary."""

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    return line


def lines():
    return [f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {d}" for n, (ok, d) in sorted(RESULTS.items())]
