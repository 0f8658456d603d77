"""Episode trajectory logs: line-delimited records, append-safe, replayable.

A log is one JSON object per line: a header (embedding the full scenario so
the file is self-contained), one record per step, and a footer of summary
metrics. Floats serialize at full precision via their shortest round-trip
repr, so replaying a log through a fresh simulation must reproduce every
observation and reward bit-for-bit. Wall-clock fields exist for interactive
sessions but stay null in batch runs, keeping batch logs byte-reproducible.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterable

FORMAT = "episode-log/1"


class LogFormatError(ValueError):
    """Malformed or future-versioned log stream."""


class PartialLogError(LogFormatError):
    """Stream ended mid-episode; ``last_good_step`` is the last intact record."""

    def __init__(self, message: str, last_good_step: int):
        self.last_good_step = last_good_step
        super().__init__(f"{message} (last intact step: {last_good_step})")


@dataclass
class EpisodeRecord:
    """One step of an episode, exactly as the environment reported it."""

    t: int
    observation: list[float]
    actions: list[int]
    applied: list[int]
    downgrades: list[list]
    cost_total: float
    reward: float
    budget_remaining: float
    new_failures: list[int]
    replacements: int
    true_ci: list[float] | None = None
    annotation: str | None = None
    suggested: list[int] | None = None
    suggestion_source: str | None = None
    ts: str | None = None


@dataclass
class EpisodeSummary:
    steps: int
    terminated: bool
    truncated: bool
    episode_return: float
    replacements_total: int
    failure_events: int
    spent_total: float
    allocated_total: float
    budget_utilization_pct: float
    ettf: float


@dataclass
class EpisodeLog:
    """Header + per-step records + summary footer for one episode."""

    scenario: dict
    fingerprint: str
    seed: int
    policy: str
    include_true_ci: bool = True
    started_at: str | None = None
    ended_at: str | None = None
    records: list[EpisodeRecord] = field(default_factory=list)
    summary: EpisodeSummary | None = None

    @property
    def steps(self) -> int:
        return len(self.records)


def _header_dict(log: EpisodeLog) -> dict:
    return {
        "kind": "header",
        "format": FORMAT,
        "scenario": log.scenario,
        "fingerprint": log.fingerprint,
        "seed": log.seed,
        "policy": log.policy,
        "include_true_ci": log.include_true_ci,
        "started_at": log.started_at,
    }


def write_episode_log(log: EpisodeLog, sink: str | Path | IO[str]) -> None:
    """Write the whole log as JSON lines (header, steps, footer)."""
    own = isinstance(sink, (str, Path))
    fh: IO[str] = open(sink, "w", encoding="utf-8") if own else sink  # type: ignore[arg-type]
    try:
        fh.write(json.dumps(_header_dict(log), sort_keys=True) + "\n")
        for rec in log.records:
            row = {"kind": "step", **asdict(rec)}
            fh.write(json.dumps(row, sort_keys=True) + "\n")
        footer = {"kind": "footer", "ended_at": log.ended_at}
        if log.summary is not None:
            footer["summary"] = asdict(log.summary)
        fh.write(json.dumps(footer, sort_keys=True) + "\n")
    finally:
        if own:
            fh.close()


def dumps_episode_log(log: EpisodeLog) -> str:
    buf = io.StringIO()
    write_episode_log(log, buf)
    return buf.getvalue()


def _parse_lines(lines: Iterable[str]) -> EpisodeLog:
    log: EpisodeLog | None = None
    saw_footer = False
    last_step = -1
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise PartialLogError(f"line {lineno}: undecodable record ({e.msg})", last_step)
        kind = obj.get("kind")
        if kind == "header":
            if obj.get("format") != FORMAT:
                raise LogFormatError(
                    f"unsupported log format {obj.get('format')!r}; this reader handles {FORMAT}"
                )
            log = EpisodeLog(
                scenario=obj["scenario"],
                fingerprint=obj["fingerprint"],
                seed=obj["seed"],
                policy=obj["policy"],
                include_true_ci=obj.get("include_true_ci", True),
                started_at=obj.get("started_at"),
            )
        elif kind == "step":
            if log is None:
                raise LogFormatError(f"line {lineno}: step record before header")
            obj.pop("kind")
            rec = EpisodeRecord(**obj)
            log.records.append(rec)
            last_step = rec.t
        elif kind == "footer":
            if log is None:
                raise LogFormatError(f"line {lineno}: footer before header")
            summary = obj.get("summary")
            log.summary = EpisodeSummary(**summary) if summary else None
            log.ended_at = obj.get("ended_at")
            saw_footer = True
        else:
            raise LogFormatError(f"line {lineno}: unknown record kind {kind!r}")
    if log is None:
        raise LogFormatError("empty stream: no header record")
    if not saw_footer:
        raise PartialLogError("stream ended before the footer", last_step)
    return log


def read_episode_log(source: str | Path | IO[str]) -> EpisodeLog:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return _parse_lines(fh)
    return _parse_lines(source)


def loads_episode_log(text: str) -> EpisodeLog:
    return _parse_lines(io.StringIO(text))


@dataclass
class ReplayResult:
    ok: bool
    steps_checked: int
    first_divergence_step: int | None = None
    field: str | None = None
    detail: str | None = None


def replay_episode(log: EpisodeLog) -> ReplayResult:
    """Re-run the logged actions through a fresh simulation and compare.

    Checks observations, rewards, and remaining budget per step at exact
    float equality; any mismatch reports the first divergent step and field.
    """
    from .scenario_io import scenario_from_dict
    from .simulator import Simulation

    config = scenario_from_dict(log.scenario)
    sim = Simulation(config)
    sim.reset(log.seed)
    for rec in log.records:
        try:
            result = sim.step(rec.actions)
        except Exception as e:
            return ReplayResult(
                ok=False,
                steps_checked=rec.t,
                first_divergence_step=rec.t,
                field="step",
                detail=str(e),
            )
        obs = result.observation.tolist()
        if obs != rec.observation:
            return ReplayResult(
                ok=False,
                steps_checked=rec.t,
                first_divergence_step=rec.t,
                field="observation",
                detail="observation vector mismatch",
            )
        if result.reward != rec.reward:
            return ReplayResult(
                ok=False,
                steps_checked=rec.t,
                first_divergence_step=rec.t,
                field="reward",
                detail=f"reward {result.reward!r} != logged {rec.reward!r}",
            )
        if result.info["budget_remaining"] != rec.budget_remaining:
            return ReplayResult(
                ok=False,
                steps_checked=rec.t,
                first_divergence_step=rec.t,
                field="budget_remaining",
                detail="budget mismatch",
            )
    if log.summary is not None and log.records:
        if sim.episode_return != log.summary.episode_return:
            return ReplayResult(
                ok=False,
                steps_checked=len(log.records),
                first_divergence_step=log.records[-1].t,
                field="episode_return",
                detail="summary return mismatch",
            )
    return ReplayResult(ok=True, steps_checked=len(log.records))
