/** Typed client for the study API. All data shown in the UI comes from here. */

import type {
  AboutDocument,
  ActionAck,
  ActionDraft,
  AdherenceSummary,
  Bundle,
  ChapterOverview,
  DailySeries,
  EnrollmentSession,
  FeedbackMessage,
  LocalizedSchema,
  Sound,
  StudyConfig,
  SubmissionAck,
  SubmissionEnvelope,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly findings: unknown[] = [],
  ) {
    super(message);
  }

  /** Permanent rejections (dead-letter material) as opposed to outages. */
  get permanent(): boolean {
    return this.status === 422 || this.status === 409 || this.status === 403;
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
    private token: string | null = null,
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown,
                           authed = true): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (authed && this.token) headers["authorization"] = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `${response.status}`;
      let findings: unknown[] = [];
      try {
        const parsed = (await response.json()) as { detail?: string; findings?: unknown[] };
        detail = parsed.detail ?? detail;
        findings = parsed.findings ?? [];
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail, findings);
    }
    return (await response.json()) as T;
  }

  registerAnonymous(centerId: string, language?: string): Promise<EnrollmentSession> {
    return this.request("POST", "/v1/users/anonymous",
      { center_id: centerId, language }, false);
  }

  register(centerId: string, login: string, password: string,
           language?: string): Promise<EnrollmentSession> {
    return this.request("POST", "/v1/users",
      { center_id: centerId, login, password, language }, false);
  }

  getConfig(): Promise<StudyConfig> {
    return this.request("GET", "/v1/config");
  }

  getQuestionnaire(schemaId: string, lang?: string, version?: number): Promise<LocalizedSchema> {
    const params = new URLSearchParams();
    if (lang) params.set("lang", lang);
    if (version !== undefined) params.set("version", String(version));
    const query = params.toString();
    return this.request("GET", `/v1/questionnaires/${schemaId}${query ? `?${query}` : ""}`);
  }

  submit(envelope: SubmissionEnvelope): Promise<SubmissionAck> {
    return this.request("POST", "/v1/submissions", envelope);
  }

  logAction(draft: ActionDraft): Promise<ActionAck> {
    return this.request("POST", "/v1/actions", draft);
  }

  async getFeedback(lang?: string): Promise<FeedbackMessage[]> {
    const query = lang ? `?lang=${encodeURIComponent(lang)}` : "";
    const body = await this.request<{ messages: FeedbackMessage[] }>(
      "GET", `/v1/feedback${query}`);
    return body.messages;
  }

  getChapters(): Promise<ChapterOverview> {
    return this.request("GET", "/v1/chapters");
  }

  async getSounds(): Promise<Sound[]> {
    const body = await this.request<{ sounds: Sound[] }>("GET", "/v1/sounds");
    return body.sounds;
  }

  async getManifest(): Promise<Bundle[]> {
    const body = await this.request<{ bundles: Bundle[] }>("GET", "/v1/content/manifest");
    return body.bundles;
  }

  getAbout(): Promise<AboutDocument> {
    return this.request("GET", "/v1/about", undefined, false);
  }

  assetUrl(digest: string): string {
    return `${this.baseUrl}/v1/content/${digest}`;
  }

  async fetchAsset(digest: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.assetUrl(digest), {
      headers: this.token ? { authorization: `Bearer ${this.token}` } : {},
    });
    if (!response.ok) throw new ApiError(response.status, `asset ${digest} unavailable`);
    return response.arrayBuffer();
  }

  async fetchAssetText(digest: string): Promise<string> {
    const buffer = await this.fetchAsset(digest);
    return new TextDecoder().decode(buffer);
  }

  adherence(filters: { module?: string; center?: string; from?: string; to?: string } = {}):
      Promise<AdherenceSummary> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filters)) {
      if (value) params.set(key, value);
    }
    const query = params.toString();
    return this.request("GET", `/v1/stats/adherence${query ? `?${query}` : ""}`);
  }

  dailySeries(userId: string): Promise<DailySeries> {
    return this.request("GET", `/v1/stats/series?user=${encodeURIComponent(userId)}`);
  }
}
