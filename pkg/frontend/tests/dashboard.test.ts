// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { renderDashboard, sparklinePath } from "../src/dashboard.js";
import type { AdherenceSummary } from "../src/types.js";

function summary(overrides: Partial<AdherenceSummary> = {}): AdherenceSummary {
  return {
    total: 2969,
    distinct_users: 113,
    max_per_user: 150,
    per_user: { user000: 150, user001: 26 },
    per_module: { tinedu: 1500, shades_of_noise: 1000, feedback: 469 },
    date_range: ["2026-04-20", "2026-06-01"],
    ...overrides,
  };
}

describe("researcher dashboard", () => {
  it("shows the API numbers verbatim", () => {
    const container = document.createElement("div");
    renderDashboard(document, container, summary(), {});
    const text = container.textContent ?? "";
    expect(text).toContain("2969");
    expect(text).toContain("113");
    expect(text).toContain("150");
    expect(text).toContain("2026-04-20");
  });

  it("shows zeros for an empty study", () => {
    const container = document.createElement("div");
    renderDashboard(document, container, summary({
      total: 0, distinct_users: 0, max_per_user: 0,
      per_user: {}, per_module: {}, date_range: null,
    }), {});
    const cells = Array.from(container.querySelectorAll(".dash-summary td"))
      .map((td) => td.textContent);
    expect(cells).toEqual(["0", "0", "0"]);
  });

  it("renders one row and sparkline per user", () => {
    const container = document.createElement("div");
    renderDashboard(document, container, summary(), {
      user000: [{ day: "2026-04-20", count: 3 }, { day: "2026-04-21", count: 5 }],
    });
    const rows = container.querySelectorAll(".dash-users tr");
    expect(rows).toHaveLength(2);
    expect(rows[0].getAttribute("data-user")).toBe("user000"); // sorted by count
    const path = rows[0].querySelector("path")!.getAttribute("d");
    expect(path).toMatch(/^M0\.0,/);
    // user without series data still renders, just with an empty sparkline
    expect(rows[1].querySelector("path")!.getAttribute("d")).toBe("");
  });

  it("sparkline scales against the peak day", () => {
    const path = sparklinePath([
      { day: "d1", count: 0 }, { day: "d2", count: 10 }, { day: "d3", count: 5 },
    ], 100, 20);
    expect(path).toBe("M0.0,20.0 L50.0,0.0 L100.0,10.0");
    expect(sparklinePath([])).toBe("");
    expect(sparklinePath([{ day: "d", count: 4 }])).toBe("M0.0,0.0");
  });
});
