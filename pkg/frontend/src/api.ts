/**
 * Typed client for the ocstudio HTTP API.
 *
 * Every shape here mirrors a documented wire format; the studio renders
 * trajectories exclusively from the structured fields the service returns
 * and never parses raw model text on the client.
 */

export interface Trajectory {
  observe: string;
  reflect: string;
  impression: string;
  behavior: string;
  action: string;
  reply: string;
}

export type AuthorKind = "artist_as_speaker" | "character" | "operator_note";

export interface Entry {
  entry_id: number;
  session_id: string;
  author_kind: AuthorKind;
  speaker_label: string;
  content: string;
  trajectory: Trajectory | null;
  profile_revision: number | null;
  timestamp: number;
}

export interface ContextChange {
  seq: number;
  session_id: string;
  old: string;
  new: string;
  changed: boolean;
  timestamp: number;
}

export type LogRecord =
  | ({ kind: "entry" } & Entry)
  | ({ kind: "context_change" } & ContextChange);

/** Position of a record in the session log (entries and changes share one numbering). */
export function recordSeq(record: LogRecord): number {
  return record.kind === "entry" ? record.entry_id : record.seq;
}

export interface ActionSpec {
  name: string;
  description: string;
}

export interface Profile {
  id: string;
  name: string;
  pronoun: string;
  backstory: string;
  traits: string;
  dialogue_style: string;
  dialogue_samples: string[];
  scenario: string;
  speaker_context: string;
  actions: ActionSpec[];
  created_at: number;
  updated_at: number;
}

export interface Revision {
  revision_number: number;
  profile_id: string;
  change_note: string;
  timestamp: number;
  template_version: string;
  removed_actions: string[];
  diff: string;
}

export interface RevisionDetail extends Revision {
  rendered_prompt: string;
  state: Omit<Profile, "id" | "created_at" | "updated_at"> & Partial<Profile>;
}

export interface Session {
  session_id: string;
  profile_id: string;
  speaker_context: string;
  window_size: number;
  created_at: number;
}

export interface TurnOutcome {
  entry: Entry;
  attempts: number;
  degradations: string[];
}

export interface LogPage {
  session_id: string;
  records: LogRecord[];
  next_cursor: number;
}

export interface ProfileDoc {
  profile: Profile;
  latest_revision: number;
}

/** Error envelope every non-2xx response carries. */
export interface ErrorBody {
  status: number;
  code: "validation" | "not_found" | "turn_failed" | "provider" | "storage";
  message: string;
  correlation_id: string;
  details?: Record<string, unknown>;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: ErrorBody["code"];
  readonly correlationId: string;
  readonly details?: Record<string, unknown>;

  constructor(body: ErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = body.status;
    this.code = body.code;
    this.correlationId = body.correlation_id;
    this.details = body.details;
  }
}

/** Network-level failure (server unreachable), as opposed to an API error. */
export class ConnectionError extends Error {
  constructor(cause: unknown) {
    super("service unreachable");
    this.name = "ConnectionError";
    this.cause = cause;
  }
}

/**
 * The slice of the fetch contract the client needs. The browser's fetch
 * satisfies it structurally; tests substitute a fixture-backed double.
 */
export interface HttpResponseLike {
  status: number;
  json(): Promise<unknown>;
  headers: { get(name: string): string | null };
}

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<HttpResponseLike>;

let idempotencyCounter = 0;

/** Unique-enough key so a double-submitted turn lands exactly once. */
export function newIdempotencyKey(): string {
  idempotencyCounter += 1;
  return `ui-${Date.now().toString(36)}-${idempotencyCounter}-${Math.random()
    .toString(36)
    .slice(2, 8)}`;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn =
      fetchFn ?? ((url, init) => fetch(url, init) as Promise<HttpResponseLike>);
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    extraHeaders?: Record<string, string>,
  ): Promise<T> {
    const headers: Record<string, string> = { ...extraHeaders };
    const init: Parameters<FetchLike>[1] = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    let response: HttpResponseLike;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new ConnectionError(cause);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    if (response.status >= 400) {
      throw new ApiError(payload["error"] as ErrorBody);
    }
    return payload as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/health");
  }

  listProfiles(): Promise<{ profiles: Profile[] }> {
    return this.request("GET", "/profiles");
  }

  getProfile(profileId: string): Promise<ProfileDoc> {
    return this.request("GET", `/profiles/${encodeURIComponent(profileId)}`);
  }

  createProfile(draft: Record<string, unknown>): Promise<ProfileDoc> {
    return this.request("POST", "/profiles", draft);
  }

  updateProfile(
    profileId: string,
    patch: Record<string, unknown>,
    changeNote: string,
  ): Promise<ProfileDoc & { revision: Revision }> {
    return this.request(
      "PATCH",
      `/profiles/${encodeURIComponent(profileId)}`,
      { ...patch, change_note: changeNote },
    );
  }

  listRevisions(
    profileId: string,
  ): Promise<{ profile_id: string; revisions: Revision[] }> {
    return this.request(
      "GET",
      `/profiles/${encodeURIComponent(profileId)}/revisions`,
    );
  }

  getRevision(profileId: string, n: number): Promise<RevisionDetail> {
    return this.request(
      "GET",
      `/profiles/${encodeURIComponent(profileId)}/revisions/${n}`,
    );
  }

  diffRevisions(
    profileId: string,
    from: number,
    to: number,
  ): Promise<{ profile_id: string; from: number; to: number; diff: string }> {
    return this.request(
      "GET",
      `/profiles/${encodeURIComponent(profileId)}/diff?from=${from}&to=${to}`,
    );
  }

  listSessions(): Promise<{ sessions: Session[] }> {
    return this.request("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<{ session: Session }> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }

  createSession(fields: {
    profile_id: string;
    speaker_context?: string;
    window_size?: number;
    session_id?: string;
  }): Promise<{ session: Session }> {
    return this.request("POST", "/sessions", fields);
  }

  postTurn(
    sessionId: string,
    content: string,
    speakerLabel?: string,
  ): Promise<TurnOutcome> {
    const body: Record<string, string> = { content };
    if (speakerLabel !== undefined) body["speaker_label"] = speakerLabel;
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/turns`,
      body,
      { "Idempotency-Key": newIdempotencyKey() },
    );
  }

  postNote(sessionId: string, content: string): Promise<{ entry: Entry }> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/notes`,
      { content },
    );
  }

  setSpeakerContext(
    sessionId: string,
    speakerContext: string,
  ): Promise<{ context_change: ContextChange }> {
    return this.request(
      "PUT",
      `/sessions/${encodeURIComponent(sessionId)}/speaker-context`,
      { speaker_context: speakerContext },
    );
  }

  readLog(sessionId: string, after = 0, limit?: number): Promise<LogPage> {
    const query = limit === undefined ? `after=${after}` : `after=${after}&limit=${limit}`;
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/log?${query}`,
    );
  }
}
