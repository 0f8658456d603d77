import { describe, expect, it } from "vitest";

import {
  ActionStaging,
  defaultViewMode,
  formatObservation,
  observationsDiverge,
} from "../src/state.js";

describe("ActionStaging", () => {
  it("defaults every component to do-nothing", () => {
    const staging = new ActionStaging();
    expect(staging.buildVector(5)).toEqual([0, 0, 0, 0, 0]);
    expect(staging.count()).toBe(0);
  });

  it("stages overrides at the right index", () => {
    const staging = new ActionStaging();
    staging.stage(3, 3);
    staging.stage(1, 2);
    expect(staging.buildVector(5)).toEqual([0, 2, 0, 3, 0]);
    expect(staging.count()).toBe(2);
  });

  it("staging do-nothing clears an override", () => {
    const staging = new ActionStaging();
    staging.stage(2, 1);
    staging.stage(2, 0);
    expect(staging.buildVector(4)).toEqual([0, 0, 0, 0]);
  });

  it("reset empties everything", () => {
    const staging = new ActionStaging();
    staging.stage(0, 3);
    staging.reset();
    expect(staging.count()).toBe(0);
  });

  it("rejects bad codes and out-of-range indices", () => {
    const staging = new ActionStaging();
    expect(() => staging.stage(0, 4)).toThrow();
    expect(() => staging.stage(0, -1)).toThrow();
    staging.stage(9, 1);
    expect(() => staging.buildVector(5)).toThrow();
  });
});

describe("view mode", () => {
  it("small fleets default to the component table", () => {
    expect(defaultViewMode(5)).toBe("table");
    expect(defaultViewMode(1000)).toBe("table");
  });

  it("large fleets default to the aggregated group view", () => {
    expect(defaultViewMode(1001)).toBe("groups");
    expect(defaultViewMode(100_000)).toBe("groups");
  });
});

describe("observation helpers", () => {
  it("renders the never-observed sentinel as a dash", () => {
    expect(formatObservation(101)).toBe("—");
    expect(formatObservation(78)).toBe("78");
  });

  it("divergence detection compares element-wise", () => {
    expect(observationsDiverge([1, 2], [1, 2])).toBe(false);
    expect(observationsDiverge([1, 2], [1, 3])).toBe(true);
    expect(observationsDiverge(undefined, [1])).toBe(false);
  });
});
