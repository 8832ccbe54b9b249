/** Participant session: token, gated modules, schema cache, offline queue. */

import { ApiClient } from "./api.js";
import { mintId, nowIso, utcOffsetMinutes } from "./ids.js";
import { OfflineQueue, type DrainReport } from "./offlineQueue.js";
import { readJson, writeJson, type KeyValue } from "./storage.js";
import type {
  AnswerValue,
  EnrollmentSession,
  LocalizedSchema,
  StudyConfig,
} from "./types.js";

const SESSION_KEY = "emistudy.session";

interface PersistedSession {
  token: string;
  user_id: string;
  arm: string;
  modules: string[];
  center_id: string;
  language: string;
}

export class ClientSession {
  readonly queue: OfflineQueue;
  config: StudyConfig | null = null;
  private schemaCache = new Map<string, LocalizedSchema>();

  constructor(
    readonly api: ApiClient,
    private store: KeyValue,
    private persisted: PersistedSession,
  ) {
    api.setToken(persisted.token);
    this.queue = new OfflineQueue(store, persisted.token);
  }

  static fromEnrollment(api: ApiClient, store: KeyValue,
                        enrollment: EnrollmentSession): ClientSession {
    const persisted: PersistedSession = {
      token: enrollment.token,
      user_id: enrollment.user_id,
      arm: enrollment.arm,
      modules: enrollment.modules,
      center_id: enrollment.center_id,
      language: enrollment.language,
    };
    writeJson(store, SESSION_KEY, persisted);
    return new ClientSession(api, store, persisted);
  }

  /** Restore the previous session after a restart, if one was stored. */
  static restore(api: ApiClient, store: KeyValue): ClientSession | null {
    const persisted = readJson<PersistedSession | null>(store, SESSION_KEY, null);
    return persisted ? new ClientSession(api, store, persisted) : null;
  }

  logout(): void {
    this.store.removeItem(SESSION_KEY);
    this.api.setToken(null);
  }

  get userId(): string {
    return this.persisted.user_id;
  }

  get arm(): string {
    return this.persisted.arm;
  }

  get language(): string {
    return this.persisted.language;
  }

  /** Gated module set; nothing outside it ever renders. */
  get modules(): string[] {
    return this.config ? this.config.modules : this.persisted.modules;
  }

  async loadConfig(): Promise<StudyConfig> {
    this.config = await this.api.getConfig();
    return this.config;
  }

  /** Schema cache keyed by id+version+language, offline-friendly. */
  async schema(schemaId: string, lang?: string): Promise<LocalizedSchema> {
    const language = lang ?? this.language;
    const pinned = this.config?.schemas[schemaId]?.version;
    const key = `${schemaId}@${pinned ?? "latest"}:${language}`;
    const cached = this.schemaCache.get(key);
    if (cached) return cached;
    const schema = await this.api.getQuestionnaire(schemaId, language, pinned);
    this.schemaCache.set(key, schema);
    return schema;
  }

  /** Queue a diary submission and try to deliver immediately. */
  async submitAnswers(schema: LocalizedSchema, answers: Record<string, AnswerValue>,
                      clientTs?: string, offsetMin?: number): Promise<DrainReport> {
    this.queue.enqueueSubmission({
      submission_id: mintId(),
      schema_id: schema.schema_id,
      schema_version: schema.version,
      answers,
      client_ts: clientTs ?? nowIso(),
      utc_offset_min: offsetMin ?? utcOffsetMinutes(),
      language: schema.language,
    });
    return this.queue.drain(this.api);
  }

  /** Queue an intervention action and try to deliver immediately. */
  async logAction(module: string, kind: string, payload: Record<string, unknown>,
                  clientTs?: string, offsetMin?: number): Promise<DrainReport> {
    this.queue.enqueueAction({
      dedup_id: mintId(),
      module,
      kind,
      payload,
      client_ts: clientTs ?? nowIso(),
      utc_offset_min: offsetMin ?? utcOffsetMinutes(),
    });
    return this.queue.drain(this.api);
  }

  replay(): Promise<DrainReport> {
    return this.queue.drain(this.api);
  }
}
