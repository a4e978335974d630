import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest'

import { connectStream } from '../src/stream.js'
import type { EventSourceLike, StreamFrame } from '../src/stream.js'

class FakeSource implements EventSourceLike {
  onmessage: ((ev: { data: string }) => void) | null = null
  onerror: ((ev: unknown) => void) | null = null
  closed = false

  constructor(readonly url: string) {}

  close(): void {
    this.closed = true
  }

  emit(frame: Partial<StreamFrame>): void {
    this.onmessage?.({
      data: JSON.stringify({ t_ms: 0, phase: 'pre-rest', remaining_s: 1, values: [], ...frame }),
    })
  }

  fail(): void {
    this.onerror?.({})
  }
}

function harness() {
  const sources: FakeSource[] = []
  const frames: StreamFrame[] = []
  let ended = 0
  const stop = connectStream('/sessions/s0001/stream', {
    onFrame: f => frames.push(f),
    onEnd: () => {
      ended += 1
    },
    openSource: url => {
      const source = new FakeSource(url)
      sources.push(source)
      return source
    },
  })
  return { sources, frames, stop, endedCount: () => ended }
}

beforeEach(() => vi.useFakeTimers())
afterEach(() => vi.useRealTimers())

describe('connectStream', () => {
  it('delivers parsed frames in order', () => {
    const { sources, frames } = harness()
    sources[0].emit({ t_ms: 0, values: [1, 2] })
    sources[0].emit({ t_ms: 100, values: [3] })
    expect(frames.map(f => f.t_ms)).toEqual([0, 100])
    expect(frames[0].values).toEqual([1, 2])
  })

  it('ignores frames that are not JSON', () => {
    const { sources, frames } = harness()
    sources[0].onmessage?.({ data: 'not json' })
    sources[0].emit({ t_ms: 5 })
    expect(frames).toHaveLength(1)
  })

  it('reconnects after an error with doubling backoff capped at 8 s', () => {
    const { sources } = harness()
    const expectDelays = [1000, 2000, 4000, 8000, 8000]
    for (const delay of expectDelays) {
      const current = sources[sources.length - 1]
      current.fail()
      expect(current.closed).toBe(true)
      vi.advanceTimersByTime(delay - 1)
      expect(sources[sources.length - 1]).toBe(current) // not yet
      vi.advanceTimersByTime(1)
      expect(sources[sources.length - 1]).not.toBe(current) // reopened
    }
    expect(sources).toHaveLength(expectDelays.length + 1)
    expect(new Set(sources.map(s => s.url)).size).toBe(1)
  })

  it('resets the backoff after a good frame', () => {
    const { sources } = harness()
    sources[0].fail()
    vi.advanceTimersByTime(1000)
    sources[1].fail()
    vi.advanceTimersByTime(2000)
    sources[2].emit({ t_ms: 0 }) // healthy again
    sources[2].fail()
    vi.advanceTimersByTime(999)
    expect(sources).toHaveLength(3)
    vi.advanceTimersByTime(1)
    expect(sources).toHaveLength(4) // back to the initial 1 s delay
  })

  it('stops itself on a terminal frame and reports the end', () => {
    const { sources, frames, endedCount } = harness()
    sources[0].emit({ t_ms: 0, phase: 'typing' })
    sources[0].emit({ t_ms: 100, phase: 'finished' })
    expect(frames).toHaveLength(2)
    expect(sources[0].closed).toBe(true)
    expect(endedCount()).toBe(1)
    // A late error must not resurrect the connection.
    sources[0].fail()
    vi.advanceTimersByTime(60_000)
    expect(sources).toHaveLength(1)
  })

  it('aborted sessions also terminate the stream', () => {
    const { sources, endedCount } = harness()
    sources[0].emit({ phase: 'aborted' })
    expect(endedCount()).toBe(1)
    expect(sources[0].closed).toBe(true)
  })

  it('the cleanup function closes the source and cancels a pending retry', () => {
    const { sources, stop } = harness()
    sources[0].fail()
    stop() // while a reconnect is scheduled
    vi.advanceTimersByTime(60_000)
    expect(sources).toHaveLength(1)
    expect(sources[0].closed).toBe(true)
  })

  it('stopping twice is harmless and does not double-report the end', () => {
    const { sources, stop, endedCount } = harness()
    sources[0].emit({ phase: 'finished' })
    stop()
    stop()
    expect(endedCount()).toBe(1)
    expect(sources[0].closed).toBe(true)
  })
})
