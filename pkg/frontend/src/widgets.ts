// Budget gauge, step timeline, branch tree, and sweep quantile bands.
// All inputs are server responses; these functions only draw.

import { formatObservation, observationsDiverge, type TimelineEntry } from "./state.js";
import type { BudgetInfo, GroupRow, MetricSummary } from "./types.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBudgetGauge(container: HTMLElement, budget: BudgetInfo): void {
  container.innerHTML = "";
  container.className = "budget-gauge";
  const allocated = budget.allocated_total;
  const pct = allocated > 0 ? Math.max(0, Math.min(1, budget.remaining / allocated)) : 0;
  const bar = el("div", "gauge-bar");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${(pct * 100).toFixed(2)}%`;
  bar.appendChild(fill);
  const label = el(
    "div",
    "gauge-label",
    `budget ${budget.remaining.toLocaleString()} / ${allocated.toLocaleString()}`,
  );
  label.dataset.remaining = String(budget.remaining);
  label.dataset.allocated = String(allocated);
  container.appendChild(label);
  container.appendChild(bar);
  if (budget.model.kind === "cyclic" && budget.model.cycle_starts) {
    const cycles = el(
      "div",
      "gauge-cycles",
      `cycle ${budget.cycle + 1}/${budget.model.cycle_starts.length}` +
        ` (starts: ${budget.model.cycle_starts.join(", ")})`,
    );
    container.appendChild(cycles);
  }
}

export function renderTimeline(
  container: HTMLElement,
  history: TimelineEntry[],
  parentHistory?: TimelineEntry[],
): void {
  container.innerHTML = "";
  container.className = "timeline";
  if (history.length === 0) {
    container.appendChild(el("div", "timeline-empty", "no steps yet"));
    return;
  }
  for (const entry of [...history].reverse()) {
    const row = el("div", "timeline-entry");
    const parentEntry = parentHistory?.find((p) => p.t === entry.t);
    if (parentEntry && observationsDiverge(entry.response.observation, parentEntry.response.observation)) {
      row.classList.add("diverged");
    }
    const acted = entry.actions.filter((a) => a !== 0).length;
    row.appendChild(el("span", "timeline-t", `t=${entry.t}`));
    row.appendChild(
      el(
        "span",
        "timeline-facts",
        `reward ${entry.response.reward.toFixed(4)} · cost ${entry.response.cost_total.toFixed(1)}` +
          ` · ${acted} action${acted === 1 ? "" : "s"}` +
          (entry.response.new_failures.length
            ? ` · ${entry.response.new_failures.length} new failure(s)`
            : "") +
          (entry.response.downgrades.length
            ? ` · ${entry.response.downgrades.length} downgraded`
            : ""),
      ),
    );
    if (entry.annotation) {
      row.appendChild(el("span", "timeline-note", `“${entry.annotation}”`));
    }
    container.appendChild(row);
  }
}

export function renderBranchTree(
  container: HTMLElement,
  sessions: { session_id: string; parent: string | null; t: number }[],
  activeId: string,
  onSelect: (id: string) => void,
): void {
  container.innerHTML = "";
  container.className = "branch-tree";
  const byParent = new Map<string | null, typeof sessions>();
  for (const s of sessions) {
    const list = byParent.get(s.parent) ?? [];
    list.push(s);
    byParent.set(s.parent, list);
  }
  const renderLevel = (parent: string | null, target: HTMLElement) => {
    for (const s of byParent.get(parent) ?? []) {
      const node = el("div", "branch-node", `${s.session_id} (t=${s.t})`);
      node.dataset.sessionId = s.session_id;
      if (s.session_id === activeId) node.classList.add("active");
      node.addEventListener("click", () => onSelect(s.session_id));
      target.appendChild(node);
      const children = el("div", "branch-children");
      target.appendChild(children);
      renderLevel(s.session_id, children);
    }
  };
  renderLevel(null, container);
}

export function renderGroups(container: HTMLElement, groups: GroupRow[]): void {
  container.innerHTML = "";
  const table = document.createElement("table");
  table.className = "group-table";
  const head = document.createElement("tr");
  for (const h of ["group", "components", "observed", "mean CI", "min CI", "mean τ"]) {
    head.appendChild(el("th", undefined, h));
  }
  table.appendChild(head);
  for (const g of groups) {
    const tr = document.createElement("tr");
    tr.className = "group-row";
    tr.appendChild(el("td", undefined, g.label));
    tr.appendChild(el("td", undefined, String(g.count)));
    tr.appendChild(el("td", undefined, String(g.observed)));
    tr.appendChild(el("td", undefined, g.mean_obs === null ? "—" : g.mean_obs.toFixed(1)));
    tr.appendChild(el("td", undefined, g.min_obs === null ? "—" : formatObservation(g.min_obs)));
    tr.appendChild(el("td", undefined, g.mean_steps_since_inspection.toFixed(1)));
    table.appendChild(tr);
  }
  container.appendChild(table);
}

const SWEEP_METRICS: [string, string][] = [
  ["return", "episode return"],
  ["failures", "failures"],
  ["ettf", "time to failure"],
  ["budget_exhaustion_step", "budget exhausted at"],
];

export function renderSweepBands(
  container: HTMLElement,
  metrics: Record<string, MetricSummary>,
): void {
  container.innerHTML = "";
  container.className = "sweep-bands";
  for (const [key, label] of SWEEP_METRICS) {
    const m = metrics[key];
    if (!m) continue;
    const row = el("div", "sweep-metric");
    row.dataset.metric = key;
    row.dataset.p10 = String(m.quantiles.p10);
    row.dataset.p50 = String(m.quantiles.p50);
    row.dataset.p90 = String(m.quantiles.p90);
    row.appendChild(el("span", "sweep-label", label));
    const span = m.max - m.min;
    const bar = el("div", "sweep-bar");
    const band = el("div", "sweep-band");
    const inner = el("div", "sweep-band-inner");
    const median = el("div", "sweep-median");
    if (span > 0) {
      const pos = (v: number) => ((v - m.min) / span) * 100;
      band.style.left = `${pos(m.quantiles.p10)}%`;
      band.style.width = `${pos(m.quantiles.p90) - pos(m.quantiles.p10)}%`;
      inner.style.left = `${pos(m.quantiles.p25)}%`;
      inner.style.width = `${pos(m.quantiles.p75) - pos(m.quantiles.p25)}%`;
      median.style.left = `${pos(m.quantiles.p50)}%`;
    } else {
      band.style.left = "50%";
      band.style.width = "0%";
      inner.style.left = "50%";
      inner.style.width = "0%";
      median.style.left = "50%";
    }
    bar.appendChild(band);
    bar.appendChild(inner);
    bar.appendChild(median);
    row.appendChild(bar);
    row.appendChild(
      el(
        "span",
        "sweep-numbers",
        `p50 ${m.quantiles.p50.toFixed(2)} (p10 ${m.quantiles.p10.toFixed(2)}, ` +
          `p90 ${m.quantiles.p90.toFixed(2)}, σ ${m.std.toFixed(2)})`,
      ),
    );
    container.appendChild(row);
  }
}
