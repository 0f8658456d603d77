"""Session-based HTTP facade over the simulator.

Each session owns one live simulation plus its growing expert log. Sessions
advance only through their own step endpoint; branching deep-copies the
simulation (random streams included) so what-if timelines evolve identically
under identical actions and never touch the parent. Sweeps run seeded
continuations on throwaway clones and report outcome distributions without
mutating anything.

Sessions live in memory; the durable artifact is the exported episode log.
An optional snapshot file persists sessions across restarts.
"""

from __future__ import annotations

import pickle
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from . import __version__
from .benchmarks import PREDEFINED, generate_predefined
from .episode_log import EpisodeLog, EpisodeRecord, dumps_episode_log
from .policies import Policy, context_from_simulation, parse_policy
from .scenario_io import fingerprint, scenario_from_dict, scenario_to_dict
from .simulator import Simulation

SWEEP_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class CreateSessionRequest(BaseModel):
    predefined: str | None = None
    scenario: dict | None = None
    seed: int | None = None
    policy: str | None = None
    include_true_ci: bool = True
    idempotency_key: str | None = None


class StepRequest(BaseModel):
    actions: list[int]
    annotation: str | None = None


class SweepRequest(BaseModel):
    policy: str | None = None
    plan: list[list[int]] | None = None
    n_seeds: int = Field(default=10)
    horizon: int | None = None


class Session:
    def __init__(
        self,
        sid: str,
        sim: Simulation,
        scenario: dict,
        seed: int,
        policy: Policy | None,
        policy_descriptor: str | None,
        include_true_ci: bool,
        parent: str | None = None,
    ):
        self.id = sid
        self.sim = sim
        self.scenario = scenario
        self.fingerprint = fingerprint(sim.config)
        self.seed = seed
        self.policy = policy
        self.policy_descriptor = policy_descriptor
        self.include_true_ci = include_true_ci
        self.parent = parent
        self.created_at = _now()
        self.records: list[EpisodeRecord] = []
        self.lock = threading.RLock()
        self.sweep_count = 0
        self.last_suggestion: list[int] | None = None
        if policy is not None:
            policy.reset(context_from_simulation(sim), seed=seed)
            self.last_suggestion = self._suggest()

    def _suggest(self) -> list[int] | None:
        if self.policy is None or self.sim.terminated or self.sim.truncated:
            return None
        return [int(a) for a in self.policy.act(self.sim.observe(), self.sim.t)]

    def lineage(self, store: "SessionStore") -> list[str]:
        chain = []
        cur = self.parent
        while cur is not None:
            chain.append(cur)
            cur = store.sessions[cur].parent if cur in store.sessions else None
        return chain

    def view(self, store: "SessionStore") -> dict:
        sim = self.sim
        return {
            "session_id": self.id,
            "name": sim.config.name,
            "t": sim.t,
            "horizon": sim.config.horizon,
            "n_components": sim.n,
            "observation": sim.observe().tolist(),
            "terminated": sim.terminated,
            "truncated": sim.truncated,
            "budget": {
                "remaining": sim.budget.remaining,
                "spent_total": sim.budget.spent_total,
                "allocated_total": sim.budget.allocated_total,
                "cycle": sim.budget.current_cycle,
                "model": scenario_to_dict(sim.config)["budget"],
            },
            "fingerprint": self.fingerprint,
            "seed": self.seed,
            "policy": self.policy_descriptor,
            "suggested_actions": self.last_suggestion,
            "parent": self.parent,
            "lineage": self.lineage(store),
            "steps_logged": len(self.records),
            "created_at": self.created_at,
        }


class SessionStore:
    def __init__(self, cap: int = 256):
        self.sessions: dict[str, Session] = {}
        self.cap = cap
        self._counter = 0
        self._lock = threading.Lock()
        self._idempotency: dict[str, str] = {}

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"s{self._counter:06d}"

    def add(self, session: Session) -> None:
        with self._lock:
            if len(self.sessions) >= self.cap:
                raise HTTPException(status_code=429, detail=f"session cap {self.cap} reached")
            self.sessions[session.id] = session

    def get(self, sid: str) -> Session:
        try:
            return self.sessions[sid]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no session {sid!r}") from None

    def delete(self, sid: str) -> None:
        with self._lock:
            if sid not in self.sessions:
                raise HTTPException(status_code=404, detail=f"no session {sid!r}")
            del self.sessions[sid]

    def snapshot(self, path: str | Path) -> None:
        payload = []
        for s in self.sessions.values():
            payload.append(
                {
                    "id": s.id,
                    "sim": s.sim,
                    "scenario": s.scenario,
                    "seed": s.seed,
                    "policy_descriptor": s.policy_descriptor,
                    "include_true_ci": s.include_true_ci,
                    "parent": s.parent,
                    "created_at": s.created_at,
                    "records": s.records,
                    "counter": self._counter,
                }
            )
        with open(path, "wb") as fh:
            pickle.dump({"sessions": payload, "counter": self._counter}, fh)

    def restore(self, path: str | Path) -> int:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
        for item in payload["sessions"]:
            policy = (
                parse_policy(item["policy_descriptor"]) if item["policy_descriptor"] else None
            )
            session = Session(
                sid=item["id"],
                sim=item["sim"],
                scenario=item["scenario"],
                seed=item["seed"],
                policy=policy,
                policy_descriptor=item["policy_descriptor"],
                include_true_ci=item["include_true_ci"],
                parent=item["parent"],
            )
            session.created_at = item["created_at"]
            session.records = item["records"]
            self.sessions[session.id] = session
        self._counter = payload["counter"]
        return len(payload["sessions"])


def _episode_log_for(session: Session) -> EpisodeLog:
    log = EpisodeLog(
        scenario=session.scenario,
        fingerprint=session.fingerprint,
        seed=session.seed,
        policy=session.policy_descriptor or "human",
        include_true_ci=session.include_true_ci,
        started_at=session.created_at,
    )
    log.records = session.records
    log.summary = session.sim.summary()
    return log


def _continuation_metrics(sim: Simulation, policy: Policy | None, plan, horizon: int) -> dict:
    base_failures = sim.failure_events
    base_return = sim.episode_return
    start_t = sim.t
    if policy is not None:
        policy.reset(context_from_simulation(sim), seed=sim.seed)
    exhausted_at: int | None = None
    obs = sim.observe()
    steps = 0
    while not (sim.terminated or sim.truncated) and sim.t < horizon:
        if policy is not None:
            actions = policy.act(obs, sim.t)
        elif plan and steps < len(plan):
            actions = np.asarray(plan[steps], dtype=np.int64)
        else:
            actions = np.zeros(sim.n, dtype=np.int64)
        result = sim.step(actions)
        obs = result.observation
        if exhausted_at is None and any(r == "budget" for _, r in result.info["downgrades"]):
            exhausted_at = sim.t
        steps += 1
    end = sim.t
    return {
        "return": sim.episode_return - base_return,
        "failures": sim.failure_events - base_failures,
        "ettf": float(np.mean(sim.failure_times_censored(horizon=end))),
        "budget_exhaustion_step": float(exhausted_at if exhausted_at is not None else end),
        "steps": end - start_t,
    }


def _summarize(values: list[float]) -> dict:
    arr = np.array(values, dtype=np.float64)
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "quantiles": {f"p{int(q * 100)}": float(np.quantile(arr, q)) for q in SWEEP_QUANTILES},
    }


def create_app(
    session_cap: int = 256,
    snapshot_path: str | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    store = SessionStore(cap=session_cap)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if snapshot_path and Path(snapshot_path).exists():
            store.restore(snapshot_path)
        yield
        if snapshot_path:
            store.snapshot(snapshot_path)

    app = FastAPI(title="infrasim session service", version=__version__, lifespan=lifespan)
    app.state.store = store

    # the dashboard may be served from a different origin (see --ui and ?api=)
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__, "sessions": len(store.sessions)}

    @app.get("/scenarios")
    def scenarios():
        return {"predefined": list(PREDEFINED)}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        if req.idempotency_key and req.idempotency_key in store._idempotency:
            sid = store._idempotency[req.idempotency_key]
            if sid in store.sessions:
                view = store.sessions[sid].view(store)
                view["reused"] = True
                return view
        if (req.predefined is None) == (req.scenario is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of 'predefined' or 'scenario'"
            )
        try:
            if req.predefined is not None:
                config = generate_predefined(req.predefined, seed=req.seed or 0)
            else:
                config = scenario_from_dict(req.scenario)
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e)) from None
        seed = req.seed if req.seed is not None else config.master_seed
        sim = Simulation(config)
        sim.reset(seed)
        policy = None
        if req.policy:
            try:
                policy = parse_policy(req.policy)
            except ValueError as e:
                raise HTTPException(status_code=422, detail=str(e)) from None
        session = Session(
            sid=store.next_id(),
            sim=sim,
            scenario=scenario_to_dict(config),
            seed=seed,
            policy=policy,
            policy_descriptor=req.policy,
            include_true_ci=req.include_true_ci,
        )
        store.add(session)
        if req.idempotency_key:
            store._idempotency[req.idempotency_key] = session.id
        return session.view(store)

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                {
                    "session_id": s.id,
                    "name": s.sim.config.name,
                    "t": s.sim.t,
                    "terminated": s.sim.terminated,
                    "truncated": s.sim.truncated,
                    "parent": s.parent,
                }
                for s in store.sessions.values()
            ]
        }

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return store.get(sid).view(store)

    @app.get("/sessions/{sid}/groups")
    def get_groups(sid: str):
        """Aggregated fleet view: hierarchy leaf groups when the scenario has
        a hierarchy, per-type rollups otherwise. Means cover observed
        components only (last_obs <= 100)."""
        session = store.get(sid)
        sim = session.sim
        groups: list[tuple[str, str, list[int]]] = []
        if sim.config.hierarchy:
            from .core import Hierarchy

            h = Hierarchy(sim.config.hierarchy)
            for node in sim.config.hierarchy:
                members = h.leaf_members(node.id)
                if members:
                    idx = [sim.id_to_index[m] for m in members]
                    groups.append((node.id, node.label or node.id, idx))
        else:
            by_type: dict[str, list[int]] = {}
            for i, comp in enumerate(sim.config.components):
                by_type.setdefault(comp.type_id, []).append(i)
            groups = [(k, k, idx) for k, idx in sorted(by_type.items())]
        rows = []
        obs = np.asarray(sim.last_obs)
        tau = np.asarray(sim.steps_since_inspection)
        for key, label, idx in groups:
            arr = obs[idx]
            seen = arr[arr <= 100]
            rows.append(
                {
                    "key": key,
                    "label": label,
                    "count": len(idx),
                    "observed": int(seen.size),
                    "mean_obs": float(seen.mean()) if seen.size else None,
                    "min_obs": int(seen.min()) if seen.size else None,
                    "mean_steps_since_inspection": float(tau[idx].mean()),
                }
            )
        return {"session_id": sid, "groups": rows}

    @app.get("/sessions/{sid}/components")
    def get_components(sid: str, offset: int = 0, limit: int = 100):
        session = store.get(sid)
        sim = session.sim
        if offset < 0 or limit < 1:
            raise HTTPException(status_code=422, detail="offset must be >= 0 and limit >= 1")
        hi = min(offset + limit, sim.n)
        available = sim.availability_mask()
        suggestion = session.last_suggestion
        rows = []
        for i in range(offset, hi):
            rows.append(
                {
                    "index": i,
                    "id": sim.ids[i],
                    "last_obs": int(sim.last_obs[i]),
                    "steps_since_inspection": int(sim.steps_since_inspection[i]),
                    "available": bool(available[i]),
                    "suggested": int(suggestion[i]) if suggestion else 0,
                }
            )
        return {"total": sim.n, "offset": offset, "rows": rows}

    @app.post("/sessions/{sid}/step")
    def step_session(sid: str, req: StepRequest):
        session = store.get(sid)
        with session.lock:
            sim = session.sim
            if sim.terminated or sim.truncated:
                raise HTTPException(
                    status_code=409, detail=f"session {sid} already finished at step {sim.t}"
                )
            if len(req.actions) != sim.n:
                raise HTTPException(
                    status_code=422,
                    detail=f"expected {sim.n} actions, got {len(req.actions)}",
                )
            if any(a not in (0, 1, 2, 3) for a in req.actions):
                raise HTTPException(status_code=422, detail="action codes must be in 0..3")
            t = sim.t
            suggested = session.last_suggestion
            result = sim.step(np.asarray(req.actions, dtype=np.int64))
            info = result.info
            session.records.append(
                EpisodeRecord(
                    t=t,
                    observation=result.observation.tolist(),
                    actions=list(req.actions),
                    applied=info["applied_actions"].tolist(),
                    downgrades=[[i, reason] for i, reason in info["downgrades"]],
                    cost_total=info["cost_total"],
                    reward=result.reward,
                    budget_remaining=info["budget_remaining"],
                    new_failures=info["new_failures"],
                    replacements=info["replacements"],
                    true_ci=info["true_ci"].tolist() if session.include_true_ci else None,
                    annotation=req.annotation,
                    suggested=suggested,
                    suggestion_source=session.policy_descriptor if suggested else None,
                    ts=_now(),
                )
            )
            session.last_suggestion = session._suggest()
            return {
                "session_id": sid,
                "t": sim.t,
                "observation": result.observation.tolist(),
                "reward": result.reward,
                "terminated": result.terminated,
                "truncated": result.truncated,
                "cost_total": info["cost_total"],
                "downgrades": [[i, reason] for i, reason in info["downgrades"]],
                "new_failures": info["new_failures"],
                "replacements": info["replacements"],
                "budget_remaining": info["budget_remaining"],
                "suggested_actions": session.last_suggestion,
            }

    @app.post("/sessions/{sid}/branch", status_code=201)
    def branch_session(sid: str):
        parent = store.get(sid)
        with parent.lock:
            clone = parent.sim.clone()
            policy = parse_policy(parent.policy_descriptor) if parent.policy_descriptor else None
            child = Session(
                sid=store.next_id(),
                sim=clone,
                scenario=parent.scenario,
                seed=parent.seed,
                policy=policy,
                policy_descriptor=parent.policy_descriptor,
                include_true_ci=parent.include_true_ci,
                parent=parent.id,
            )
            child.records = list(parent.records)
            child.last_suggestion = (
                list(parent.last_suggestion) if parent.last_suggestion else None
            )
            store.add(child)
            return child.view(store)

    @app.post("/sessions/{sid}/sweep")
    def sweep_session(sid: str, req: SweepRequest):
        session = store.get(sid)
        if req.n_seeds < 1:
            raise HTTPException(status_code=422, detail="n_seeds must be >= 1")
        if req.policy is not None and req.plan is not None:
            raise HTTPException(status_code=422, detail="give either a policy or a plan, not both")
        with session.lock:
            base = session.sim
            horizon = req.horizon if req.horizon is not None else base.config.horizon
            if horizon < base.t:
                raise HTTPException(
                    status_code=422, detail=f"horizon {horizon} is before current step {base.t}"
                )
            session.sweep_count += 1
            sweep_no = session.sweep_count
            clones = []
            for i in range(req.n_seeds):
                clone = base.clone()
                clone.reseed_future((session.seed, base.t, sweep_no, i))
                clones.append(clone)

        def run(i: int) -> dict:
            policy = parse_policy(req.policy) if req.policy else None
            return _continuation_metrics(clones[i], policy, req.plan, horizon)

        with ThreadPoolExecutor(max_workers=min(8, req.n_seeds)) as pool:
            outcomes = list(pool.map(run, range(req.n_seeds)))

        metrics = {}
        for key in ("return", "failures", "ettf", "budget_exhaustion_step", "steps"):
            metrics[key] = _summarize([o[key] for o in outcomes])
        return {
            "session_id": sid,
            "from_step": base.t,
            "horizon": horizon,
            "n_seeds": req.n_seeds,
            "policy": req.policy,
            "metrics": metrics,
        }

    @app.get("/sessions/{sid}/log", response_class=PlainTextResponse)
    def export_log(sid: str):
        session = store.get(sid)
        with session.lock:
            return dumps_episode_log(_episode_log_for(session))

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str):
        store.delete(sid)
        return {"deleted": sid}

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
