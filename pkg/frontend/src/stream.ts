// Live sample stream over server-sent events, with reconnect + capped backoff.

export interface StreamFrame {
  t_ms: number
  phase: string
  remaining_s: number
  values: number[]
}

const TERMINAL_PHASES = new Set(['finished', 'aborted'])

/** The slice of EventSource the stream needs; injectable for tests. */
export interface EventSourceLike {
  onmessage: ((ev: { data: string }) => void) | null
  onerror: ((ev: unknown) => void) | null
  close(): void
}

export type EventSourceFactory = (url: string) => EventSourceLike

export interface StreamOptions {
  onFrame: (frame: StreamFrame) => void
  /** Called once the stream reports a terminal phase and closes itself. */
  onEnd?: () => void
  openSource?: EventSourceFactory
  initialRetryMs?: number
  maxRetryMs?: number
}

const defaultFactory: EventSourceFactory = url => {
  const source = new EventSource(url)
  const like: EventSourceLike = {
    onmessage: null,
    onerror: null,
    close: () => source.close(),
  }
  source.onmessage = ev => like.onmessage?.({ data: String(ev.data) })
  source.onerror = ev => like.onerror?.(ev)
  return like
}

/**
 * Subscribe to a session's frame stream. Dropped connections reconnect with
 * exponential backoff (doubling, capped at 8 s), reset after each good frame.
 * Returns a cleanup function; the stream also stops itself on a terminal frame.
 */
export function connectStream(url: string, options: StreamOptions): () => void {
  const openSource = options.openSource ?? defaultFactory
  const initialRetryMs = options.initialRetryMs ?? 1000
  const maxRetryMs = options.maxRetryMs ?? 8000

  let source: EventSourceLike | null = null
  let timer: ReturnType<typeof setTimeout> | null = null
  let closed = false
  let retryMs = initialRetryMs

  const stop = () => {
    if (closed) return
    closed = true
    if (timer !== null) clearTimeout(timer)
    source?.close()
  }

  const open = () => {
    source = openSource(url)

    source.onmessage = ev => {
      let frame: StreamFrame
      try {
        frame = JSON.parse(ev.data)
      } catch {
        return // ignore frames that are not JSON
      }
      retryMs = initialRetryMs // a good frame resets the backoff
      options.onFrame(frame)
      if (TERMINAL_PHASES.has(frame.phase)) {
        stop()
        options.onEnd?.()
      }
    }

    source.onerror = () => {
      if (closed) return
      // Reconnect ourselves rather than relying on native retry, so the
      // backoff stays under our control.
      source?.close()
      timer = setTimeout(open, retryMs)
      retryMs = Math.min(retryMs * 2, maxRetryMs)
    }
  }

  open()
  return stop
}
