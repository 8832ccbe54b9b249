/** Screen registry mirroring server-side module gating exactly.

The set of navigable screens must equal the user's module set, nothing more,
nothing less: a screen only exists when its module was assigned. */

export interface Screen {
  module: string;
  route: string;
  title: string;
}

export const MODULE_SCREENS: readonly Screen[] = [
  { module: "diary", route: "#/diary", title: "Tinnitus Diary" },
  { module: "tinedu", route: "#/tinedu", title: "TinEdu" },
  { module: "shades_of_noise", route: "#/sounds", title: "ShadesOfNoise" },
  { module: "feedback", route: "#/feedback", title: "Feedback" },
  { module: "about_us", route: "#/about", title: "About Us" },
];

export function visibleScreens(modules: readonly string[]): Screen[] {
  return MODULE_SCREENS.filter((screen) => modules.includes(screen.module));
}

export function screenForRoute(route: string): Screen | undefined {
  return MODULE_SCREENS.find((screen) => route === screen.route
    || route.startsWith(`${screen.route}/`));
}
