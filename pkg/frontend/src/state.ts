// Pure client-side state: staged action overrides and view-mode decisions.
// No dynamics live here; the server is authoritative for everything rendered.

import type { StepResponse } from "./types.js";

export const NO_OBSERVATION = 101;

/** Per-component action overrides for the next step (default do-nothing). */
export class ActionStaging {
  private overrides = new Map<number, number>();

  stage(index: number, code: number): void {
    if (!Number.isInteger(code) || code < 0 || code > 3) {
      throw new Error(`bad action code ${code}`);
    }
    if (code === 0) this.overrides.delete(index);
    else this.overrides.set(index, code);
  }

  get(index: number): number {
    return this.overrides.get(index) ?? 0;
  }

  count(): number {
    return this.overrides.size;
  }

  buildVector(n: number): number[] {
    const out = new Array<number>(n).fill(0);
    for (const [index, code] of this.overrides) {
      if (index < 0 || index >= n) throw new Error(`staged index ${index} out of range`);
      out[index] = code;
    }
    return out;
  }

  reset(): void {
    this.overrides.clear();
  }
}

/** Above this fleet size the aggregated group view is the default. */
export const GROUP_VIEW_THRESHOLD = 1000;

export function defaultViewMode(nComponents: number): "table" | "groups" {
  return nComponents > GROUP_VIEW_THRESHOLD ? "groups" : "table";
}

/** One submitted step as the server reported it (timeline material). */
export interface TimelineEntry {
  t: number;
  actions: number[];
  annotation: string | null;
  response: StepResponse;
}

export function formatObservation(lastObs: number): string {
  return lastObs === NO_OBSERVATION ? "—" : String(lastObs);
}

export function observationsDiverge(a: number[] | undefined, b: number[] | undefined): boolean {
  if (!a || !b) return false;
  if (a.length !== b.length) return true;
  for (let i = 0; i < a.length; i++) if (a[i] !== b[i]) return true;
  return false;
}
