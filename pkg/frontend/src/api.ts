// Typed client for the capture service's HTTP API.

export type Phase =
  | 'created'
  | 'pre-rest'
  | 'typing'
  | 'post-rest'
  | 'finished'
  | 'aborted'

export type Condition = 'fixed' | 'open'
export type Label = 'relaxed' | 'angry'

export interface SessionSnapshot {
  id: string
  phase: Phase
  user_id: string
  condition: Condition
  label: Label
  script: string | null
  typed: string
  elapsed_s: number
  remaining_s: number
  key_count: number
  sample_count: number
  recording_path: string | null
  error: string | null
}

export interface CreateSessionInput {
  user_id: string
  condition: Condition
  label: Label
  script?: string
  seed?: number
}

export interface Health {
  status: string
  sessions: number
}

/** A non-2xx response, carrying the service's typed error name when present. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string,
  ) {
    super(detail)
    this.name = 'ApiError'
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  health(): Promise<Health> {
    return this.request('GET', '/health')
  }

  createSession(input: CreateSessionInput): Promise<SessionSnapshot> {
    return this.request('POST', '/sessions', input)
  }

  listSessions(): Promise<SessionSnapshot[]> {
    return this.request('GET', '/sessions')
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.request('GET', `/sessions/${id}`)
  }

  startSession(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/start`)
  }

  sendKey(id: string, key: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/keys`, { key })
  }

  finishSession(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/finish`)
  }

  abortSession(id: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${id}/abort`)
  }

  streamUrl(id: string): string {
    return `${this.base}/sessions/${id}/stream`
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method }
    if (body !== undefined) {
      init.headers = { 'content-type': 'application/json' }
      init.body = JSON.stringify(body)
    }
    let response: Response
    try {
      response = await this.fetchImpl(this.base + path, init)
    } catch (cause) {
      throw new ApiError(0, 'Unreachable', `cannot reach ${this.base + path}: ${cause}`)
    }
    if (!response.ok) {
      throw await toApiError(response)
    }
    return (await response.json()) as T
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let name = 'HttpError'
  let detail = `HTTP ${response.status}`
  try {
    const payload = await response.json()
    if (typeof payload?.error === 'string') {
      name = payload.error
      detail = String(payload.detail ?? detail)
    } else if (payload?.detail !== undefined) {
      // FastAPI validation errors put an array (or string) under `detail`.
      name = 'ValidationError'
      detail = Array.isArray(payload.detail)
        ? payload.detail
            .map((d: { loc?: unknown[]; msg?: string }) =>
              `${(d.loc ?? []).join('.')}: ${d.msg ?? 'invalid'}`)
            .join('; ')
        : String(payload.detail)
    }
  } catch {
    // Non-JSON body: keep the generic detail.
  }
  return new ApiError(response.status, name, detail)
}
