/** Researcher dashboard rendering: adherence table plus per-user sparklines.
 *
 * Every number shown is taken verbatim from an API response; nothing is
 * recomputed client-side.
 */

import type { AdherenceSummary, SeriesPoint } from "./types.js";

export function sparklinePath(series: SeriesPoint[], width = 120, height = 24): string {
  if (series.length === 0) return "";
  const peak = Math.max(...series.map((p) => p.count), 1);
  const stepX = series.length > 1 ? width / (series.length - 1) : 0;
  return series
    .map((point, i) => {
      const x = (i * stepX).toFixed(1);
      const y = (height - (point.count / peak) * height).toFixed(1);
      return `${i === 0 ? "M" : "L"}${x},${y}`;
    })
    .join(" ");
}

export function renderDashboard(
  doc: Document,
  container: Element,
  summary: AdherenceSummary,
  seriesByUser: Record<string, SeriesPoint[]>,
): void {
  container.innerHTML = "";

  const totals = doc.createElement("table");
  totals.className = "dash-summary";
  const rows: Array<[string, string]> = [
    ["Intervention actions", String(summary.total)],
    ["Distinct active users", String(summary.distinct_users)],
    ["Most active user", String(summary.max_per_user)],
  ];
  if (summary.date_range) {
    rows.push(["Date range", `${summary.date_range[0]} to ${summary.date_range[1]}`]);
  }
  for (const [name, value] of rows) {
    const tr = doc.createElement("tr");
    const th = doc.createElement("th");
    th.textContent = name;
    const td = doc.createElement("td");
    td.textContent = value;
    tr.appendChild(th);
    tr.appendChild(td);
    totals.appendChild(tr);
  }
  container.appendChild(totals);

  const modules = doc.createElement("table");
  modules.className = "dash-modules";
  for (const [module, count] of Object.entries(summary.per_module).sort()) {
    const tr = doc.createElement("tr");
    const th = doc.createElement("th");
    th.textContent = module;
    const td = doc.createElement("td");
    td.textContent = String(count);
    tr.appendChild(th);
    tr.appendChild(td);
    modules.appendChild(tr);
  }
  container.appendChild(modules);

  const users = doc.createElement("table");
  users.className = "dash-users";
  const sortedUsers = Object.entries(summary.per_user).sort((a, b) => b[1] - a[1]);
  for (const [userId, count] of sortedUsers) {
    const tr = doc.createElement("tr");
    tr.setAttribute("data-user", userId);
    const id = doc.createElement("td");
    id.textContent = userId;
    const n = doc.createElement("td");
    n.textContent = String(count);
    const spark = doc.createElement("td");
    const series = seriesByUser[userId] ?? [];
    const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", "0 0 120 24");
    svg.setAttribute("class", "sparkline");
    const path = doc.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", sparklinePath(series));
    path.setAttribute("fill", "none");
    svg.appendChild(path);
    spark.appendChild(svg);
    tr.appendChild(id);
    tr.appendChild(n);
    tr.appendChild(spark);
    users.appendChild(tr);
  }
  container.appendChild(users);
}
