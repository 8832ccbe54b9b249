/** Persisted FIFO of unsent submissions and actions.
 *
 * Every entry carries a client-minted 128-bit id, persisted before the first
 * send attempt, so a crash between "sent" and "acknowledged" can never store
 * twice: the replay's duplicate ack counts as success. Entries the server
 * permanently rejects move to a dead-letter list the UI can show.
 */

import { ApiClient, ApiError } from "./api.js";
import { readJson, writeJson, type KeyValue } from "./storage.js";
import type { ActionDraft, SubmissionEnvelope } from "./types.js";

export type QueueEntry =
  | { id: string; kind: "submission"; body: SubmissionEnvelope; queuedAt: string }
  | { id: string; kind: "action"; body: ActionDraft; queuedAt: string };

export interface DeadLetter {
  entry: QueueEntry;
  reason: string;
}

export interface DrainReport {
  stored: number;
  duplicates: number;
  deadLettered: number;
  remaining: number;
}

export class OfflineQueue {
  private readonly queueKey: string;
  private readonly deadKey: string;

  constructor(private store: KeyValue, token: string) {
    this.queueKey = `emistudy.queue.${token}`;
    this.deadKey = `emistudy.dead.${token}`;
  }

  entries(): QueueEntry[] {
    return readJson<QueueEntry[]>(this.store, this.queueKey, []);
  }

  deadLetters(): DeadLetter[] {
    return readJson<DeadLetter[]>(this.store, this.deadKey, []);
  }

  get length(): number {
    return this.entries().length;
  }

  enqueueSubmission(envelope: SubmissionEnvelope): QueueEntry {
    const entry: QueueEntry = {
      id: envelope.submission_id,
      kind: "submission",
      body: envelope,
      queuedAt: new Date().toISOString(),
    };
    this.push(entry);
    return entry;
  }

  enqueueAction(draft: ActionDraft): QueueEntry {
    const entry: QueueEntry = {
      id: draft.dedup_id,
      kind: "action",
      body: draft,
      queuedAt: new Date().toISOString(),
    };
    this.push(entry);
    return entry;
  }

  private push(entry: QueueEntry): void {
    const queue = this.entries();
    queue.push(entry);
    writeJson(this.store, this.queueKey, queue);
  }

  private save(queue: QueueEntry[]): void {
    writeJson(this.store, this.queueKey, queue);
  }

  private deadLetter(entry: QueueEntry, reason: string): void {
    const dead = this.deadLetters();
    dead.push({ entry, reason });
    writeJson(this.store, this.deadKey, dead);
  }

  /** Post entries in FIFO order. Stops at the first transient failure so the
   * remainder replays on the next drain; duplicate acks count as delivered. */
  async drain(api: ApiClient): Promise<DrainReport> {
    const report: DrainReport = { stored: 0, duplicates: 0, deadLettered: 0, remaining: 0 };
    let queue = this.entries();
    while (queue.length > 0) {
      const entry = queue[0];
      try {
        if (entry.kind === "submission") {
          const ack = await api.submit(entry.body);
          ack.duplicate ? report.duplicates++ : report.stored++;
        } else {
          const ack = await api.logAction(entry.body);
          ack.duplicate ? report.duplicates++ : report.stored++;
        }
      } catch (err) {
        if (err instanceof ApiError && err.permanent) {
          this.deadLetter(entry, err.message);
          report.deadLettered++;
          queue = queue.slice(1);
          this.save(queue);
          continue;
        }
        break; // offline or server trouble: keep the rest queued
      }
      queue = queue.slice(1);
      this.save(queue);
    }
    report.remaining = queue.length;
    return report;
  }
}
