// Orchestrates one capture session: API calls, the live stream, and state
// for the UI to render.

import { ApiClient, ApiError } from './api.js'
import type { CreateSessionInput, SessionSnapshot } from './api.js'
import { connectStream } from './stream.js'
import type { EventSourceFactory, StreamFrame } from './stream.js'
import { TraceBuffer } from './trace.js'

export interface ControllerOptions {
  api: ApiClient
  /** Ring-buffer capacity for the strip chart, in samples. */
  traceCapacity?: number
  openSource?: EventSourceFactory
  onChange?: (controller: SessionController) => void
}

export class SessionController {
  readonly trace: TraceBuffer
  snapshot: SessionSnapshot | null = null
  /** Latest transport or API failure, cleared by the next successful call. */
  lastError: ApiError | null = null
  streaming = false

  private readonly api: ApiClient
  private readonly openSource?: EventSourceFactory
  private readonly onChange?: (controller: SessionController) => void
  private stopStream: (() => void) | null = null

  constructor(options: ControllerOptions) {
    this.api = options.api
    this.trace = new TraceBuffer(options.traceCapacity ?? 4000)
    this.openSource = options.openSource
    this.onChange = options.onChange
  }

  get phase(): string {
    return this.snapshot?.phase ?? 'none'
  }

  async create(input: CreateSessionInput): Promise<void> {
    await this.call(() => this.api.createSession(input))
    this.trace.clear()
  }

  async start(): Promise<void> {
    const id = this.requireSession()
    await this.call(() => this.api.startSession(id))
    this.openStream(id)
  }

  async sendKey(key: string): Promise<void> {
    const id = this.requireSession()
    await this.call(() => this.api.sendKey(id, key))
  }

  async finish(): Promise<void> {
    const id = this.requireSession()
    await this.call(() => this.api.finishSession(id))
  }

  async abort(): Promise<void> {
    const id = this.requireSession()
    await this.call(() => this.api.abortSession(id))
    this.closeStream()
  }

  async refresh(): Promise<void> {
    const id = this.requireSession()
    await this.call(() => this.api.getSession(id))
  }

  /** Stop streaming and forget the current session. */
  reset(): void {
    this.closeStream()
    this.snapshot = null
    this.lastError = null
    this.trace.clear()
    this.notify()
  }

  dispose(): void {
    this.closeStream()
  }

  private openStream(id: string): void {
    this.closeStream()
    this.streaming = true
    this.stopStream = connectStream(this.api.streamUrl(id), {
      onFrame: frame => this.onFrame(frame),
      onEnd: () => {
        this.streaming = false
        // The terminal frame carries no snapshot fields; fetch the final state.
        void this.refresh().catch(() => {})
      },
      openSource: this.openSource,
    })
    this.notify()
  }

  private closeStream(): void {
    if (this.stopStream) {
      this.stopStream()
      this.stopStream = null
    }
    this.streaming = false
  }

  private onFrame(frame: StreamFrame): void {
    this.trace.push(frame.values)
    if (this.snapshot && frame.phase !== this.snapshot.phase) {
      // Phase moved on between snapshots; reflect it without waiting for a poll.
      this.snapshot = {
        ...this.snapshot,
        phase: frame.phase as SessionSnapshot['phase'],
        remaining_s: frame.remaining_s,
      }
    } else if (this.snapshot) {
      this.snapshot = { ...this.snapshot, remaining_s: frame.remaining_s }
    }
    this.notify()
  }

  private requireSession(): string {
    if (!this.snapshot) throw new Error('no active session')
    return this.snapshot.id
  }

  private async call(action: () => Promise<SessionSnapshot>): Promise<void> {
    try {
      this.snapshot = await action()
      this.lastError = null
    } catch (error) {
      if (error instanceof ApiError) {
        this.lastError = error
        this.notify()
        throw error
      }
      throw error
    }
    this.notify()
  }

  private notify(): void {
    this.onChange?.(this)
  }
}
