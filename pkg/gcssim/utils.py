import json
import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from rich.table import Table

from .config import TIME_UNITS, NS, PS, REPORT_FLOAT_DIGITS
from .console import console
from .errors import ConfigError

_TIME_PATTERN = re.compile(r"^\s*([+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*(fs|ps|ns|us)\s*$")


@lru_cache(maxsize=None)
def _load_lang(lang: str) -> dict:
    path = Path(__file__).parent / f"lang/{lang}.json"
    if not path.exists():
        return {}
    try:
        with path.open(encoding="utf-8") as f:
            return json.load(f)
    except Exception:
        return {}


def localize(key: str, lang: str = "en") -> str:
    value = _load_lang(lang).get(key)
    if value is None and lang != "en":
        value = _load_lang("en").get(key)
    return key if value is None else value


def parse_time(text, key: str | None = None) -> int:
    """'10ps', '0.5 ps', '1000ns' -> integer femtoseconds. The unit is mandatory."""
    if isinstance(text, bool) or not isinstance(text, str):
        raise ConfigError(f"time value {text!r} needs a unit (fs, ps, ns or us)", key=key)
    match = _TIME_PATTERN.match(text)
    if match is None:
        raise ConfigError(f"cannot read time {text!r}; expected a number with fs, ps, ns or us", key=key)
    try:
        value = Decimal(match.group(1)) * TIME_UNITS[match.group(2)]
    except InvalidOperation as e:
        raise ConfigError(f"cannot read time {text!r}", key=key) from e
    if value != value.to_integral_value():
        raise ConfigError(f"time {text!r} is finer than 1 fs", key=key)
    return int(value)


def format_time(fs) -> str:
    """Human-readable time: whole ns when exact, otherwise ps."""
    value = Fraction(fs)
    if value and value % NS == 0 and abs(value) >= NS:
        return f"{value / NS} ns"
    ps = value / PS
    if ps.denominator == 1:
        return f"{ps} ps"
    return f"{float(ps):.{REPORT_FLOAT_DIGITS - 3}f} ps"


def quantize(value, places: int) -> Decimal:
    """Exact rational rounded to `places` decimals, as a Decimal."""
    return Decimal(round(Fraction(value) * 10 ** places)).scaleb(-places)


def fixed(value: Decimal) -> str:
    """Fixed-point text of a Decimal, never in exponent notation."""
    return format(value, "f")


def to_ps(fs) -> float:
    return round(float(Fraction(fs) / PS), REPORT_FLOAT_DIGITS)


def render_report(report, verdict, lang: str = "en", conditions=None):
    table = Table(title=f"⏱ {localize('report.title', lang)}: {report.scenario}")
    table.add_column(localize("table.metric", lang))
    table.add_column(localize("table.value", lang), justify="right")
    table.add_column(localize("table.bound", lang), justify="right")

    bounds = report.bounds
    table.add_row(localize("report.max_local", lang), format_time(report.max_local),
                  format_time(bounds.local_bound) if bounds else "-")
    table.add_row(localize("report.max_global", lang), format_time(report.max_global),
                  format_time(bounds.global_bound) if bounds else "-")
    if bounds is not None:
        table.add_row(localize("report.reference_global", lang), "", format_time(bounds.reference_global))
    table.add_row(localize("report.initial_global", lang), format_time(report.initial_global), "")
    stabilized = report.stabilization_time
    table.add_row(localize("report.stabilization", lang),
                  format_time(stabilized) if stabilized is not None else localize("report.none", lang),
                  format_time(report.stabilization_comparator))
    table.add_row(localize("report.violations", lang), str(len(report.violations)), "")
    console.print(table)

    for marker in report.markers:
        console.print(f"▪️ {marker.label} @ {format_time(marker.time)}: "
                      f"[cyan]{format_time(marker.local_before)}[/cyan] → "
                      f"[cyan]{format_time(marker.local_after)}[/cyan]")

    if conditions is not None:
        cond_table = Table(title=localize("conditions.title", lang))
        cond_table.add_column(localize("conditions.name", lang))
        cond_table.add_column(localize("conditions.checked", lang), justify="right")
        cond_table.add_column(localize("conditions.result", lang))
        for result in conditions.results.values():
            status = "[green]PASS[/green]" if result.passed else f"[red]FAIL[/red] {result.counterexample}"
            cond_table.add_row(result.name, str(result.checked), status)
        console.print(cond_table)

    color = "green" if verdict.passed else "red"
    console.print(f"\n[bold {color}]{localize('verdict.' + verdict.status.lower(), lang)}[/bold {color}]"
                  + (f": {verdict.detail}" if verdict.detail else ""))


def render_params(rows: list, lang: str = "en"):
    table = Table(title=f"🧮 {localize('params.title', lang)}")
    table.add_column(localize("table.metric", lang))
    table.add_column(localize("table.value", lang), justify="right")
    for key, value in rows:
        table.add_row(localize(f"params.{key}", lang), value)
    console.print(table)


def render_scenarios(entries: list, lang: str = "en"):
    table = Table(title=f"📚 {localize('scenarios.title', lang)}")
    table.add_column(localize("scenarios.name", lang))
    table.add_column(localize("scenarios.nodes", lang), justify="right")
    table.add_column(localize("scenarios.description", lang))
    for name, nodes, description in entries:
        table.add_row(name, str(nodes), description)
    console.print(table)


def render_sweep(frame, lang: str = "en"):
    table = Table(title=f"📈 {localize('sweep.title', lang)}")
    for column in frame.columns:
        table.add_column(localize(f"sweep.{column}", lang))
    for row in frame.itertuples(index=False):
        table.add_row(*("" if v is None else str(v) for v in row))
    console.print(table)


def render_explain(lines: list, lang: str = "en"):
    for key, value in lines:
        console.print(f"▪️ {localize(f'explain.{key}', lang)}: [cyan]{value}[/cyan]")


__all__ = [
    'localize', 'parse_time', 'format_time', 'quantize', 'fixed', 'to_ps',
    'render_report', 'render_params', 'render_scenarios', 'render_sweep', 'render_explain'
]
