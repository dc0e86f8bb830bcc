#!/usr/bin/env python3
"""
Output formatting utilities for the command-line interface.

Key Features:
- Human and JSON output formats for operation results
- Structured success result creation
- Config validation summaries with line numbers
- Experiment report summaries with check marks
- Tuning sweep summaries
"""

from __future__ import annotations

import json
from typing import Any

from .bos_types import ExitCode, OperationResult
from .file_operations import to_jsonable


def output_result(result: OperationResult, format_type: str = "human", quiet: bool = False) -> None:
    """
    Output operation result in specified format.

    Parameters
    ----------
    result : OperationResult
        OperationResult object containing operation outcome and details
    format_type : str, optional
        Output format type, either "human" or "json", by default "human"
    quiet : bool, optional
        If True, suppress non-essential output in human format, by default False

    Examples
    --------
    >>> output_result(create_success_result("Report written"))
    ✓ Report written
    """
    if format_type == "json":
        output_data = {
            "success": result.success,
            "exit_code": result.exit_code.value,
            "message": result.message,
            "data": to_jsonable(result.data),
            "errors": result.errors,
            "warnings": result.warnings,
        }
        print(json.dumps(output_data, indent=2, sort_keys=True))
        return

    if quiet and result.success:
        return
    symbol = "✓" if result.success else "✗"
    print(f"{symbol} {result.message}")

    summary = result.data.get("summary")
    if summary and not quiet:
        print(summary)

    if result.warnings and not quiet:
        print("Warnings:")
        for warning in result.warnings:
            print(f"  ⚠ {warning}")

    if result.errors:
        print("Errors:")
        for error in result.errors:
            print(f"  ✗ {error}")


def create_success_result(
    message: str,
    data: dict[str, Any] | None = None,
    warnings: list[str] | None = None,
) -> OperationResult:
    """
    Create a structured success result.

    Parameters
    ----------
    message : str
        Success message describing the completed operation
    data : dict[str, Any] | None, optional
        Additional data related to the successful operation, by default None
    warnings : list[str] | None, optional
        Caveats of an otherwise successful operation, by default None

    Returns
    -------
    OperationResult
        Result with ``success=True`` and ``ExitCode.SUCCESS``
    """
    return OperationResult(
        success=True,
        exit_code=ExitCode.SUCCESS,
        message=message,
        data=data or {},
        errors=[],
        warnings=warnings or [],
    )


def format_report_summary(report: dict[str, Any]) -> str:
    """
    Format an experiment report's checks as indented check-mark lines.

    >>> print(format_report_summary({"experiment": "kanizsa", "checks": [
    ...     {"name": "count_1_into_pacman", "passed": True, "detail": "0.81"}]}))
    kanizsa
      ✓ count_1_into_pacman (0.81)
    """
    lines = [str(report.get("experiment", "report"))]
    for check in report.get("checks", []):
        symbol = "✓" if check["passed"] else "✗"
        detail = f" ({check['detail']})" if check.get("detail") else ""
        lines.append(f"  {symbol} {check['name']}{detail}")
    return "\n".join(lines)


def _number(value: float | None, spec: str = ".3g") -> str:
    return "n/a" if value is None else format(value, spec)


def format_tuning_summary(rows: list[dict[str, Any]], best: dict[str, Any] | None) -> str:
    """
    Format sweep rows as one line per setting, best setting marked.

    >>> row = {"potential_gain": 10.0, "potential_mode": "side_share", "sampling": "area",
    ...        "mean_improvement": 120.0, "regressions": 0, "overlap_fraction": 0.9,
    ...        "kanizsa_single_fraction": 0.75, "failed_checks": 1}
    >>> print(format_tuning_summary([row], row))
    ★ gain 10 side_share area: improved 120 %, 0 regressed, overlap 0.9, kanizsa 0.75, 1 failed
    """
    lines = []
    for row in rows:
        mark = "★" if row is best else " "
        lines.append(
            f"{mark} gain {_number(row['potential_gain'], 'g')} {row['potential_mode']} "
            f"{row['sampling']}: improved {_number(row['mean_improvement'])} %, "
            f"{row['regressions']} regressed, overlap {_number(row['overlap_fraction'])}, "
            f"kanizsa {_number(row['kanizsa_single_fraction'])}, {row['failed_checks']} failed"
        )
    return "\n".join(lines)
