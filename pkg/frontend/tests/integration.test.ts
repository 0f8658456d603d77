// Dashboard flows against a live service: the suite spawns `infrasim serve`
// (the python package must be installed) and drives the real DOM app.

import { type ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Dashboard, type SessionTab } from "../src/app.js";

const PORT = 8690 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let api: ApiClient;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn("infrasim", ["serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForHealth();
  api = new ApiClient(BASE);
});

afterAll(() => {
  server?.kill();
});

function mount(): Dashboard {
  document.body.innerHTML = '<div id="app"></div>';
  return new Dashboard(api, document.getElementById("app")!);
}

function componentRows(tab: SessionTab): HTMLTableRowElement[] {
  return [...tab.root.querySelectorAll<HTMLTableRowElement>("tr.comp-row")];
}

function gaugeRemaining(tab: SessionTab): number {
  const label = tab.root.querySelector<HTMLElement>(".gauge-label");
  return Number(label?.dataset.remaining);
}

describe("dashboard against a live service", () => {
  let dashboard: Dashboard;

  beforeEach(() => {
    dashboard = mount();
  });

  it("creating a simple5 session renders 5 component rows", async () => {
    const tab = await dashboard.createSession({ predefined: "simple5", seed: 7 });
    const rows = componentRows(tab);
    expect(rows.length).toBe(5);
    // all unobserved at reset
    for (const row of rows) {
      expect(row.querySelector(".cell-obs")?.textContent).toBe("—");
    }
    expect(gaugeRemaining(tab)).toBe(2000);
  });

  it("submitting replace updates the observation to 100 and decrements the budget", async () => {
    const tab = await dashboard.createSession({ predefined: "simple5", seed: 7 });
    const before = gaugeRemaining(tab);
    tab.setAnnotation("replacing the worst pump");
    tab.stageAction(2, 3); // replace component index 2
    await tab.submitStep();

    const rows = componentRows(tab);
    expect(rows[2].querySelector(".cell-obs")?.textContent).toBe("100");
    expect(rows[2].querySelector<HTMLElement>(".cell-obs")?.dataset.lastObs).toBe("100");
    const after = gaugeRemaining(tab);
    expect(after).toBeLessThan(before);
    // the step counter advanced on the server and the header reflects it
    expect(tab.view.t).toBe(1);
    expect(tab.root.querySelector<HTMLElement>(".tab-status")?.dataset.t).toBe("1");
  });

  it("the exported log carries submitted actions with their annotations, in order", async () => {
    const tab = await dashboard.createSession({ predefined: "simple5", seed: 9 });
    tab.setAnnotation("inspect everything first");
    for (let i = 0; i < 5; i++) tab.stageAction(i, 1);
    await tab.submitStep();
    tab.setAnnotation("then replace #1");
    tab.stageAction(1, 3);
    await tab.submitStep();

    const text = await api.exportLog(tab.view.session_id);
    const lines = text.trim().split("\n").map((l) => JSON.parse(l));
    const steps = lines.filter((l) => l.kind === "step");
    expect(steps.length).toBe(2);
    expect(steps[0].actions).toEqual([1, 1, 1, 1, 1]);
    expect(steps[0].annotation).toBe("inspect everything first");
    expect(steps[1].actions).toEqual([0, 3, 0, 0, 0]);
    expect(steps[1].annotation).toBe("then replace #1");
  });

  it("a branch is an isolated tab whose steps never mutate the parent", async () => {
    const parent = await dashboard.createSession({ predefined: "simple5", seed: 11 });
    await parent.submitStep(); // all do-nothing, t -> 1
    const parentBudget = gaugeRemaining(parent);

    const branch = await dashboard.openBranch(parent);
    expect(branch.view.parent).toBe(parent.view.session_id);
    expect(branch.view.t).toBe(1);
    expect(dashboard.tabs.size).toBe(2);

    // spend heavily in the branch
    for (let i = 0; i < 5; i++) branch.stageAction(i, 3);
    await branch.submitStep();
    expect(gaugeRemaining(branch)).toBeLessThan(parentBudget);

    // parent unchanged on the server
    await parent.refresh();
    expect(parent.view.t).toBe(1);
    expect(gaugeRemaining(parent)).toBe(parentBudget);
  });

  it("identical actions keep a branch identical to its parent", async () => {
    const parent = await dashboard.createSession({ predefined: "simple5", seed: 13 });
    const branch = await dashboard.openBranch(parent);
    for (const tab of [parent, branch]) {
      tab.stageAction(0, 1);
      await tab.submitStep();
    }
    expect(parent.history[0].response.observation).toEqual(
      branch.history[0].response.observation,
    );
    expect(parent.history[0].response.reward).toBe(branch.history[0].response.reward);
  });

  it("stepping a finished session shows a blocking banner and changes nothing", async () => {
    // 2-component scenario with horizon 1, built from the documented schema
    const scenario = {
      budget: { kind: "fixed", amount: 100.0 },
      horizon: 1,
      components: [{ id: "a" }, { id: "b" }],
    };
    const tab = await dashboard.createSession({ scenario, seed: 1 });
    await tab.submitStep();
    expect(tab.view.truncated).toBe(true);
    const tBefore = tab.view.t;
    await tab.submitStep(); // second submit must be rejected by the server
    const banner = tab.root.querySelector(".banner");
    expect(banner?.classList.contains("hidden")).toBe(false);
    expect(banner?.textContent).toContain("finished");
    expect(tab.view.t).toBe(tBefore);
  });

  it("a risk sweep renders quantile bands and leaves the step counter alone", async () => {
    const tab = await dashboard.createSession({ predefined: "simple5", seed: 3 });
    await tab.runSweep("no-action", 6);
    const band = tab.root.querySelector<HTMLElement>('.sweep-metric[data-metric="ettf"]');
    expect(band).not.toBeNull();
    expect(Number(band!.dataset.p10)).toBeLessThanOrEqual(Number(band!.dataset.p90));
    expect(tab.view.t).toBe(0);
  });

  it("group rollup view renders aggregate rows", async () => {
    const tab = await dashboard.createSession({ predefined: "simple5", seed: 5 });
    tab.viewMode = "groups";
    await tab.refresh();
    const rows = tab.root.querySelectorAll("tr.group-row");
    expect(rows.length).toBe(5); // one type per component in simple5
  });
});
