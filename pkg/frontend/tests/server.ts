/** Spawn the Python study server for end-to-end tests. */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const RESEARCHER_TOKEN = "e2e-research-token";

const CONFIG = {
  languages: ["en", "de"],
  block_size: 4,
  seed_policy: "fixed",
  seed: "frontend-e2e",
  window_days: 84,
  researcher_token: RESEARCHER_TOKEN,
  centers: [
    { id: "C1", name: "Center One", language: "en" },
    { id: "C2", name: "Center Two", language: "de" },
  ],
};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

export interface ServerHandle {
  baseUrl: string;
  stop(): void;
}

export async function startSeededServer(): Promise<ServerHandle> {
  const workdir = mkdtempSync(join(tmpdir(), "emistudy-e2e-"));
  const configPath = join(workdir, "study.json");
  writeFileSync(configPath, JSON.stringify(CONFIG));
  const port = await freePort();
  const proc: ChildProcess = spawn("python3", [
    "-m", "emistudy", "serve",
    "--config", configPath,
    "--data-dir", join(workdir, "data"),
    "--bind", `127.0.0.1:${port}`,
  ], { stdio: ["ignore", "pipe", "pipe"] });
  let output = "";
  proc.stdout?.on("data", (chunk) => { output += String(chunk); });
  proc.stderr?.on("data", (chunk) => { output += String(chunk); });

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/v1/health`);
      if (response.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error(`server did not start:\n${output}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }

  const seed = spawnSync("python3", [
    "-m", "emistudy", "demo", "--server", baseUrl, "--token", RESEARCHER_TOKEN,
  ], { encoding: "utf-8" });
  if (seed.status !== 0) {
    proc.kill();
    throw new Error(`demo seeding failed: ${seed.stdout}\n${seed.stderr}`);
  }

  return {
    baseUrl,
    stop() {
      proc.kill();
    },
  };
}

export async function exportEntity(baseUrl: string, entity: string): Promise<any[]> {
  const response = await fetch(`${baseUrl}/v1/export?entity=${entity}`, {
    headers: { authorization: `Bearer ${RESEARCHER_TOKEN}` },
  });
  if (!response.ok) throw new Error(`export failed: ${response.status}`);
  const text = await response.text();
  return text.split("\n").filter((line) => line.trim() !== "").map((line) => JSON.parse(line));
}
