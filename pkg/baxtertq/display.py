from __future__ import annotations

from tabulate import tabulate


def print_stage(name: str, seconds: float, detail: str = "") -> None:
    print(f"{name:<9} | {seconds:8.2f}s | {detail}")


def format_value(value) -> str:
    if value is None:
        return "-"
    return f"{value:.3e}"


def results_table(outcomes: dict) -> str:
    """
    The invariant battery as an outline table: one row per invariant with its status and measured value.
    """
    rows = []
    for name, outcome in outcomes.items():
        rows.append({
            "Invariant": name,
            "Status": outcome.status.upper(),
            "Value": format_value(outcome.value),
            "Detail": outcome.detail,
        })
    return tabulate(rows, headers="keys", tablefmt="outline", colalign=("left", "center", "right", "left"))


def format_runtime(total_runtime: float) -> str:
    hours, remainder = divmod(int(total_runtime), 3600)
    minutes, seconds = divmod(remainder, 60)

    if hours != 0:
        return f"{hours}h {minutes}m {seconds}s."
    elif minutes != 0:
        return f"{minutes}m {seconds}s."
    return f"{seconds}s."
