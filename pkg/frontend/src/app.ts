// Dashboard wiring: session tabs, the action entry flow, what-if branching,
// and the sweep panel. State shown to the expert always comes from the last
// service response; a failed request leaves the view untouched.

import { ApiClient, ApiError } from "./api.js";
import {
  ActionStaging,
  defaultViewMode,
  formatObservation,
  type TimelineEntry,
} from "./state.js";
import { VirtualComponentTable } from "./table.js";
import {
  renderBranchTree,
  renderBudgetGauge,
  renderGroups,
  renderSweepBands,
  renderTimeline,
} from "./widgets.js";
import { ACTION_NAMES, type ComponentRow, type SessionView } from "./types.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class SessionTab {
  readonly root: HTMLElement;
  readonly staging = new ActionStaging();
  history: TimelineEntry[] = [];
  view: SessionView;
  viewMode: "table" | "groups";
  pending = false;
  private table: VirtualComponentTable;
  private header: HTMLElement;
  private banner: HTMLElement;
  private gauge: HTMLElement;
  private fleet: HTMLElement;
  private timelineEl: HTMLElement;
  private sweepEl: HTMLElement;
  private annotationInput: HTMLTextAreaElement;
  private pendingBadge: HTMLElement;
  private sweepAbort: AbortController | null = null;

  constructor(
    private api: ApiClient,
    view: SessionView,
    private dashboard: Dashboard,
  ) {
    this.view = view;
    this.viewMode = defaultViewMode(view.n_components);
    this.root = el("section", "session-tab");
    this.root.dataset.sessionId = view.session_id;

    this.header = el("header", "tab-header");
    this.banner = el("div", "banner hidden");
    this.gauge = el("div");
    this.fleet = el("div", "fleet-view");
    this.timelineEl = el("div");
    this.sweepEl = el("div", "sweep-panel");

    const controls = el("div", "controls");
    this.annotationInput = document.createElement("textarea");
    this.annotationInput.className = "annotation";
    this.annotationInput.placeholder = "why this decision? (logged with the step)";
    this.pendingBadge = el("span", "pending-badge hidden", "submitting…");

    const submit = el("button", "submit-step", "submit step") as HTMLButtonElement;
    submit.addEventListener("click", () => void this.submitStep());
    const branchBtn = el("button", "branch-btn", "branch (what-if)") as HTMLButtonElement;
    branchBtn.addEventListener("click", () => void this.dashboard.openBranch(this));
    const closeBtn = el("button", "close-btn", "close tab") as HTMLButtonElement;
    closeBtn.addEventListener("click", () => this.dashboard.closeTab(this.view.session_id));

    const sweepControls = el("div", "sweep-controls");
    const sweepPolicy = document.createElement("input");
    sweepPolicy.className = "sweep-policy";
    sweepPolicy.value = "no-action";
    const sweepSeeds = document.createElement("input");
    sweepSeeds.className = "sweep-seeds";
    sweepSeeds.type = "number";
    sweepSeeds.value = "10";
    const sweepBtn = el("button", "sweep-btn", "run risk sweep") as HTMLButtonElement;
    sweepBtn.addEventListener("click", () =>
      void this.runSweep(sweepPolicy.value, parseInt(sweepSeeds.value, 10) || 10),
    );
    const sweepCancel = el("button", "sweep-cancel", "cancel") as HTMLButtonElement;
    sweepCancel.addEventListener("click", () => this.cancelSweep());
    sweepControls.append(sweepPolicy, sweepSeeds, sweepBtn, sweepCancel);

    const viewToggle = el("button", "view-toggle", "table / groups") as HTMLButtonElement;
    viewToggle.addEventListener("click", () => {
      this.viewMode = this.viewMode === "table" ? "groups" : "table";
      void this.renderFleet();
    });

    controls.append(this.annotationInput, submit, this.pendingBadge, branchBtn, viewToggle, closeBtn);

    this.table = new VirtualComponentTable(
      async (offset, limit) => (await this.api.components(this.view.session_id, offset, limit)).rows,
      (tr, row) => this.decorateRow(tr, row),
    );
    this.fleet.appendChild(this.table.root);

    this.root.append(
      this.header,
      this.banner,
      this.gauge,
      controls,
      this.fleet,
      el("h3", undefined, "timeline"),
      this.timelineEl,
      sweepControls,
      this.sweepEl,
    );
  }

  get parentTab(): SessionTab | undefined {
    return this.view.parent ? this.dashboard.tabs.get(this.view.parent) : undefined;
  }

  private decorateRow(tr: HTMLTableRowElement, row: ComponentRow): void {
    const obs = el("td", "cell-obs", formatObservation(row.last_obs));
    obs.dataset.lastObs = String(row.last_obs);
    const cells = [
      el("td", "cell-id", row.id),
      obs,
      el("td", "cell-tau", String(row.steps_since_inspection)),
      el("td", "cell-avail", row.available ? "" : "unavailable"),
      el("td", "cell-suggested", row.suggested ? ACTION_NAMES[row.suggested] : ""),
    ];
    const actionCell = el("td", "cell-action");
    const select = document.createElement("select");
    for (let code = 0; code < 4; code++) {
      const opt = document.createElement("option");
      opt.value = String(code);
      opt.textContent = ACTION_NAMES[code];
      select.appendChild(opt);
    }
    select.value = String(this.staging.get(row.index));
    select.disabled = !row.available;
    select.addEventListener("change", () => {
      this.stageAction(row.index, parseInt(select.value, 10));
    });
    actionCell.appendChild(select);
    cells.push(actionCell);
    tr.append(...cells);
    if (!row.available) tr.classList.add("row-unavailable");
  }

  stageAction(index: number, code: number): void {
    this.staging.stage(index, code);
    this.renderHeader();
  }

  setAnnotation(text: string): void {
    this.annotationInput.value = text;
  }

  /** Action entry flow: default do-nothing vector plus per-component
   * overrides; on success the staging and annotation reset and every panel
   * re-renders from the response. Server rejection changes nothing. */
  async submitStep(): Promise<void> {
    if (this.pending) return;
    const actions = this.staging.buildVector(this.view.n_components);
    const annotation = this.annotationInput.value.trim() || null;
    this.pending = true;
    this.pendingBadge.classList.remove("hidden");
    try {
      const response = await this.api.step(this.view.session_id, actions, annotation);
      this.history.push({ t: response.t - 1, actions, annotation, response });
      this.staging.reset();
      this.annotationInput.value = "";
      await this.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.showBanner(`session finished: ${err.detail}`);
      } else {
        this.showBanner(String(err));
      }
    } finally {
      this.pending = false;
      this.pendingBadge.classList.add("hidden");
    }
  }

  async runSweep(policy: string, nSeeds: number): Promise<void> {
    this.cancelSweep();
    this.sweepAbort = new AbortController();
    this.sweepEl.textContent = `sweeping ${nSeeds} seeds…`;
    try {
      const result = await this.api.sweep(
        this.view.session_id,
        { policy, n_seeds: nSeeds },
        this.sweepAbort.signal,
      );
      renderSweepBands(this.sweepEl, result.metrics);
      // a sweep must never advance the session itself
      await this.refresh();
    } catch (err) {
      if ((err as Error).name === "AbortError") {
        this.sweepEl.textContent = "sweep cancelled";
      } else {
        this.sweepEl.textContent = `sweep failed: ${String(err)}`;
      }
    } finally {
      this.sweepAbort = null;
    }
  }

  cancelSweep(): void {
    this.sweepAbort?.abort();
    this.sweepAbort = null;
  }

  showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  async refresh(): Promise<void> {
    this.view = await this.api.getSession(this.view.session_id);
    this.renderHeader();
    renderBudgetGauge(this.gauge, this.view.budget);
    await this.renderFleet();
    renderTimeline(this.timelineEl, this.history, this.parentTab?.history);
    this.dashboard.renderTree();
  }

  private renderHeader(): void {
    this.header.innerHTML = "";
    const title = el(
      "h2",
      undefined,
      `${this.view.name} · ${this.view.session_id}` +
        (this.view.parent ? ` (branch of ${this.view.parent})` : ""),
    );
    const status = el(
      "div",
      "tab-status",
      `step ${this.view.t}/${this.view.horizon}` +
        (this.view.terminated ? " · terminated" : this.view.truncated ? " · horizon reached" : "") +
        ` · ${this.view.n_components} components` +
        (this.staging.count() ? ` · ${this.staging.count()} staged` : ""),
    );
    status.dataset.t = String(this.view.t);
    this.header.append(title, status);
    if (this.view.suggested_actions) {
      const acted = this.view.suggested_actions.filter((a) => a !== 0).length;
      this.header.appendChild(
        el("div", "suggestion-note", `policy ${this.view.policy} suggests ${acted} action(s)`),
      );
    }
  }

  private async renderFleet(): Promise<void> {
    if (this.viewMode === "groups") {
      const { groups } = await this.api.groups(this.view.session_id);
      renderGroups(this.fleet, groups);
    } else {
      if (!this.fleet.contains(this.table.root)) {
        this.fleet.innerHTML = "";
        this.fleet.appendChild(this.table.root);
      }
      await this.table.setTotal(this.view.n_components);
    }
  }
}

export class Dashboard {
  readonly tabs = new Map<string, SessionTab>();
  private tabsEl: HTMLElement;
  private treeEl: HTMLElement;

  constructor(
    public api: ApiClient,
    root: HTMLElement,
  ) {
    root.innerHTML = "";
    const chrome = el("div", "chrome");
    this.treeEl = el("div", "tree-pane");
    this.tabsEl = el("div", "tabs-pane");
    chrome.append(this.treeEl, this.tabsEl);
    root.appendChild(chrome);
  }

  async createSession(req: {
    predefined?: string;
    scenario?: unknown;
    seed?: number;
    policy?: string;
  }): Promise<SessionTab> {
    const view = await this.api.createSession(req);
    return this.addTabWithHistory(view, []);
  }

  /** What-if flow: branch on the server, open the copy side by side. The
   * parent keeps its own tab and state; diverging steps highlight in the
   * branch timeline. */
  async openBranch(parent: SessionTab): Promise<SessionTab> {
    const view = await this.api.branch(parent.view.session_id);
    return this.addTabWithHistory(view, [...parent.history]);
  }

  private async addTabWithHistory(
    view: SessionView,
    history: TimelineEntry[],
  ): Promise<SessionTab> {
    const tab = new SessionTab(this.api, view, this);
    tab.history = history;
    this.tabs.set(view.session_id, tab);
    this.tabsEl.appendChild(tab.root);
    await tab.refresh();
    this.renderTree();
    return tab;
  }

  closeTab(sessionId: string): void {
    const tab = this.tabs.get(sessionId);
    if (!tab) return;
    tab.root.remove();
    this.tabs.delete(sessionId);
    this.renderTree();
  }

  renderTree(): void {
    const sessions = [...this.tabs.values()].map((tab) => ({
      session_id: tab.view.session_id,
      parent: tab.view.parent && this.tabs.has(tab.view.parent) ? tab.view.parent : null,
      t: tab.view.t,
    }));
    renderBranchTree(this.treeEl, sessions, "", (id) => {
      this.tabs.get(id)?.root.scrollIntoView();
    });
  }
}
