// Sample buffering and decimation for the live strip chart.

/** Fixed-capacity ring buffer of ADC samples; oldest samples fall off. */
export class TraceBuffer {
  private samples: number[] = []
  private dropped = 0

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity <= 0) {
      throw new RangeError(`capacity must be a positive integer, got ${capacity}`)
    }
  }

  push(values: number[]): void {
    this.samples.push(...values)
    const excess = this.samples.length - this.capacity
    if (excess > 0) {
      this.samples.splice(0, excess)
      this.dropped += excess
    }
  }

  /** Samples currently held, oldest first. */
  window(): number[] {
    return this.samples.slice()
  }

  get length(): number {
    return this.samples.length
  }

  /** Total samples ever pushed, including those that fell off. */
  get total(): number {
    return this.dropped + this.samples.length
  }

  clear(): void {
    this.samples = []
    this.dropped = 0
  }
}

export interface Band {
  min: number
  max: number
}

/**
 * Reduce samples to `width` min/max bands for drawing, one band per output
 * column. With fewer samples than columns, each sample becomes its own band.
 */
export function decimate(samples: number[], width: number): Band[] {
  if (!Number.isInteger(width) || width <= 0) {
    throw new RangeError(`width must be a positive integer, got ${width}`)
  }
  if (samples.length === 0) return []
  if (samples.length <= width) {
    return samples.map(v => ({ min: v, max: v }))
  }
  const bands: Band[] = []
  for (let column = 0; column < width; column++) {
    const start = Math.floor((column * samples.length) / width)
    const end = Math.floor(((column + 1) * samples.length) / width)
    let min = samples[start]
    let max = samples[start]
    for (let i = start + 1; i < end; i++) {
      if (samples[i] < min) min = samples[i]
      if (samples[i] > max) max = samples[i]
    }
    bands.push({ min, max })
  }
  return bands
}
