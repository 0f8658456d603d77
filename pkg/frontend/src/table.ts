// Windowed component table: renders only the visible slice and fetches pages
// on demand, so a 100,000-row fleet stays responsive.

import type { ComponentRow } from "./types.js";

const ROW_HEIGHT = 28;
const PAGE_SIZE = 200;
const FALLBACK_VISIBLE_ROWS = 25; // when the container has no layout height

export type RowDecorator = (tr: HTMLTableRowElement, row: ComponentRow) => void;

export class VirtualComponentTable {
  readonly root: HTMLElement;
  private spacer: HTMLElement;
  private body: HTMLElement;
  private total = 0;
  private cache = new Map<number, ComponentRow[]>(); // page index -> rows
  private pending = new Set<number>();
  private generation = 0;

  constructor(
    private fetchPage: (offset: number, limit: number) => Promise<ComponentRow[]>,
    private decorate: RowDecorator,
  ) {
    this.root = document.createElement("div");
    this.root.className = "vtable";
    this.spacer = document.createElement("div");
    this.spacer.className = "vtable-spacer";
    this.body = document.createElement("div");
    this.body.className = "vtable-body";
    this.spacer.appendChild(this.body);
    this.root.appendChild(this.spacer);
    this.root.addEventListener("scroll", () => {
      void this.renderWindow();
    });
  }

  async setTotal(total: number): Promise<void> {
    this.total = total;
    this.spacer.style.height = `${total * ROW_HEIGHT}px`;
    await this.refresh();
  }

  /** Drop cached pages and redraw (after every accepted step). */
  async refresh(): Promise<void> {
    this.generation += 1;
    this.cache.clear();
    this.pending.clear();
    await this.renderWindow();
  }

  private visibleRange(): [number, number] {
    const height = this.root.clientHeight || FALLBACK_VISIBLE_ROWS * ROW_HEIGHT;
    const first = Math.max(0, Math.floor(this.root.scrollTop / ROW_HEIGHT) - 5);
    const last = Math.min(this.total, Math.ceil((this.root.scrollTop + height) / ROW_HEIGHT) + 5);
    return [first, last];
  }

  private async ensurePages(first: number, last: number): Promise<void> {
    const gen = this.generation;
    const firstPage = Math.floor(first / PAGE_SIZE);
    const lastPage = Math.floor(Math.max(first, last - 1) / PAGE_SIZE);
    const waits: Promise<void>[] = [];
    for (let p = firstPage; p <= lastPage; p++) {
      if (this.cache.has(p) || this.pending.has(p)) continue;
      this.pending.add(p);
      waits.push(
        this.fetchPage(p * PAGE_SIZE, PAGE_SIZE).then((rows) => {
          if (this.generation === gen) this.cache.set(p, rows);
          this.pending.delete(p);
        }),
      );
    }
    await Promise.all(waits);
  }

  private rowAt(index: number): ComponentRow | undefined {
    const page = this.cache.get(Math.floor(index / PAGE_SIZE));
    return page?.[index % PAGE_SIZE];
  }

  async renderWindow(): Promise<void> {
    const [first, last] = this.visibleRange();
    if (this.total === 0) {
      this.body.innerHTML = "";
      return;
    }
    await this.ensurePages(first, last);
    this.body.innerHTML = "";
    this.body.style.transform = `translateY(${first * ROW_HEIGHT}px)`;
    const table = document.createElement("table");
    table.className = "comp-table";
    for (let i = first; i < last; i++) {
      const row = this.rowAt(i);
      if (!row) continue;
      const tr = document.createElement("tr");
      tr.className = "comp-row";
      tr.dataset.index = String(row.index);
      this.decorate(tr, row);
      table.appendChild(tr);
    }
    this.body.appendChild(table);
  }
}
