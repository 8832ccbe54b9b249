/** Wire types of the study API. Field names mirror the JSON exactly. */

export interface WindowStatus {
  active: boolean;
  expired: boolean;
  days_remaining: number;
}

export interface EnrollmentSession {
  user_id: string;
  auth_mode: "registered" | "anonymous";
  center_id: string;
  language: string;
  enrolled_at: string;
  token: string;
  arm: string;
  modules: string[];
  window: WindowStatus;
}

export interface SchemaInfo {
  kind: "questionnaire" | "quiz";
  module: string;
  version: number;
  digest: string;
}

export interface StudyConfig {
  user_id: string;
  center_id: string;
  language: string;
  arm: string;
  modules: string[];
  schemas: Record<string, SchemaInfo>;
  window: WindowStatus;
  content_manifest: string;
}

export interface Option {
  id: string;
  label: string;
}

export interface Question {
  widget: string;
  required: boolean;
  label: string;
  options?: Option[];
  min?: number;
  max?: number;
  step?: number;
  correct_option?: string;
}

export interface Page {
  index: number;
  title?: string;
  questions: string[];
}

export interface LocalizedSchema {
  kind: "questionnaire" | "quiz";
  schema_id: string;
  version: number;
  module: string;
  language: string;
  languages: string[];
  digest: string;
  chapter_id?: string;
  pages: Page[];
  questions: Record<string, Question>;
}

export type AnswerValue = number | boolean | string | string[];

export interface SubmissionEnvelope {
  submission_id: string;
  schema_id: string;
  schema_version: number;
  answers: Record<string, AnswerValue>;
  client_ts: string;
  utc_offset_min: number;
  language?: string;
}

export interface SubmissionAck {
  accepted: boolean;
  submission_id: string;
  duplicate: boolean;
}

export interface ActionDraft {
  dedup_id: string;
  module: string;
  kind: string;
  payload: Record<string, unknown>;
  client_ts: string;
  utc_offset_min: number;
}

export interface ActionAck {
  action_id: number;
  duplicate: boolean;
}

export interface FeedbackMessage {
  rule_id: string;
  metric: string;
  value: number;
  comparator: string;
  threshold: number;
  priority: number;
  language: string;
  message: string;
}

export interface BundleEntry {
  path: string;
  size: number;
  digest: string;
}

export interface Bundle {
  bundle_id: string;
  kind: string;
  entries: BundleEntry[];
  digest: string;
  version: string;
  published_at: string;
}

export interface ChapterSection {
  title?: Record<string, string>;
  bundle_id: string;
}

export interface Chapter {
  id: string;
  title?: Record<string, string>;
  sections: ChapterSection[];
  quiz_id: string;
  recap_bundle_id?: string;
  prerequisites: string[];
}

export type ChapterState = "locked" | "available" | "completed";

export interface ChapterOverview {
  chapters: Chapter[];
  states: Record<string, ChapterState>;
}

export interface Sound {
  sound_id: string;
  name: Record<string, string>;
  bundle_id: string;
  duration_seconds: number;
  category?: string;
}

export interface AboutDocument {
  version: string;
  title: string;
  html: string;
}

export interface AdherenceSummary {
  total: number;
  distinct_users: number;
  max_per_user: number;
  per_user: Record<string, number>;
  per_module: Record<string, number>;
  date_range: [string, string] | null;
}

export interface SeriesPoint {
  day: string;
  count: number;
}

export interface DailySeries {
  user_id: string;
  series: SeriesPoint[];
}
