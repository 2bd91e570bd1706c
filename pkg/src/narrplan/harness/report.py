"""Success-rate tables over attempt records."""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import mean

from .runner import SUCCESS, AttemptRecord


@dataclass(frozen=True)
class SummaryRow:
    domain: str
    params: str
    mode: str
    prompt_mode: str
    agent: str
    successes: int
    attempts: int
    mean_tokens: float | None
    mean_wall_time: float

    @property
    def rate(self) -> float:
        return round(self.successes / self.attempts, 4) if self.attempts else 0.0

    @property
    def cell(self) -> str:
        return f"{self.successes}/{self.attempts}"

    def to_dict(self) -> dict:
        return {
            "domain": self.domain, "params": self.params, "mode": self.mode,
            "prompt_mode": self.prompt_mode, "agent": self.agent,
            "successes": self.successes, "attempts": self.attempts, "rate": self.rate,
            "mean_tokens": self.mean_tokens, "mean_wall_time": round(self.mean_wall_time, 4),
        }


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[SummaryRow, ...]

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.rows], sort_keys=True, indent=1)

    def render(self) -> str:
        header = ("domain", "params", "mode", "prompt", "agent", "success", "rate", "tokens", "time(s)")
        body = [
            (r.domain, r.params, r.mode, r.prompt_mode, r.agent, r.cell, f"{r.rate:.4f}",
             "-" if r.mean_tokens is None else f"{r.mean_tokens:.0f}", f"{r.mean_wall_time:.2f}")
            for r in self.rows
        ]
        if not body:
            return "(no records)"
        widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
        lines.extend(fmt.format(*row) for row in body)
        return "\n".join(lines)


def _params_key(params) -> str:
    if not params:
        return "canonical"
    return ",".join(f"{k}={v}" for k, v in sorted(params.items()) if k not in ("domain", "seed"))


def aggregate(records: list[AttemptRecord]) -> SummaryTable:
    groups: dict[tuple, list[AttemptRecord]] = {}
    for r in records:
        key = (r.domain, _params_key(r.params), r.mode, r.prompt_mode, r.agent)
        groups.setdefault(key, []).append(r)
    rows = []
    for key in sorted(groups):
        rs = groups[key]
        toks = [(r.prompt_tokens or 0) + (r.completion_tokens or 0) for r in rs
                if r.prompt_tokens is not None or r.completion_tokens is not None]
        rows.append(SummaryRow(
            *key,
            successes=sum(r.outcome == SUCCESS for r in rs),
            attempts=len(rs),
            mean_tokens=mean(toks) if toks else None,
            mean_wall_time=mean(r.wall_time for r in rs),
        ))
    return SummaryTable(tuple(rows))
