/** Client-minted 128-bit ids (32 hex chars) used for idempotent replay. */

export function mintId(): string {
  const bytes = new Uint8Array(16);
  globalThis.crypto.getRandomValues(bytes);
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

export function nowIso(): string {
  return new Date().toISOString();
}

export function utcOffsetMinutes(): number {
  // Date.getTimezoneOffset is minutes *behind* UTC; the API wants the offset
  // to add to UTC to reach local time.
  return -new Date().getTimezoneOffset();
}
