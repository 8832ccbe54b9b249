import { describe, expect, it } from "vitest";

import { screenForRoute, visibleScreens } from "../src/gating.js";

// module sets as the server reports them per arm
const ARM_MODULES: Record<string, string[]> = {
  arm1: ["about_us", "diary", "feedback"],
  arm2: ["about_us", "diary", "feedback", "shades_of_noise"],
  arm3: ["about_us", "diary", "feedback", "tinedu"],
  arm4: ["about_us", "diary", "feedback", "shades_of_noise", "tinedu"],
};

describe("screen gating mirrors the arm table", () => {
  it("exposes exactly the gated screens for every arm", () => {
    const expected: Record<string, string[]> = {
      arm1: ["#/diary", "#/feedback", "#/about"],
      arm2: ["#/diary", "#/sounds", "#/feedback", "#/about"],
      arm3: ["#/diary", "#/tinedu", "#/feedback", "#/about"],
      arm4: ["#/diary", "#/tinedu", "#/sounds", "#/feedback", "#/about"],
    };
    for (const [arm, modules] of Object.entries(ARM_MODULES)) {
      const routes = visibleScreens(modules).map((screen) => screen.route);
      expect(routes).toEqual(expected[arm]);
    }
  });

  it("every arm sees diary, feedback and about", () => {
    for (const modules of Object.values(ARM_MODULES)) {
      const routes = visibleScreens(modules).map((screen) => screen.route);
      expect(routes).toContain("#/diary");
      expect(routes).toContain("#/feedback");
      expect(routes).toContain("#/about");
    }
  });

  it("never exposes a screen for an unassigned module", () => {
    const routes = visibleScreens(ARM_MODULES.arm1).map((screen) => screen.route);
    expect(routes).not.toContain("#/sounds");
    expect(routes).not.toContain("#/tinedu");
    expect(visibleScreens([])).toEqual([]);
  });

  it("maps nested routes back to their screen", () => {
    expect(screenForRoute("#/tinedu/ch-basics")?.module).toBe("tinedu");
    expect(screenForRoute("#/sounds/snd-white")?.module).toBe("shades_of_noise");
    expect(screenForRoute("#/elsewhere")).toBeUndefined();
  });
});
