// Per-character script matching and keyboard-event mapping.

export type CharState = 'correct' | 'wrong' | 'pending' | 'extra'

export interface CharMark {
  char: string
  state: CharState
}

/**
 * Mark each script character against what has been typed so far. Characters
 * typed beyond the script's end come back as 'extra' marks appended after it.
 */
export function markScript(script: string, typed: string): CharMark[] {
  const marks: CharMark[] = []
  for (let i = 0; i < script.length; i++) {
    const state: CharState =
      i >= typed.length ? 'pending' : typed[i] === script[i] ? 'correct' : 'wrong'
    marks.push({ char: script[i], state })
  }
  for (let i = script.length; i < typed.length; i++) {
    marks.push({ char: typed[i], state: 'extra' })
  }
  return marks
}

export interface TypingProgress {
  /** Script characters typed correctly, as a fraction of the script. 0..1. */
  completion: number
  /** Correct characters as a fraction of characters typed. 1 when nothing typed. */
  accuracy: number
  done: boolean
}

export function typingProgress(script: string, typed: string): TypingProgress {
  const marks = markScript(script, typed)
  const correct = marks.filter(m => m.state === 'correct').length
  const attempted = Math.min(typed.length, script.length) + Math.max(0, typed.length - script.length)
  return {
    completion: script.length === 0 ? 1 : correct / script.length,
    accuracy: attempted === 0 ? 1 : correct / attempted,
    done: typed === script,
  }
}

export interface KeyEventLike {
  key: string
  ctrlKey?: boolean
  metaKey?: boolean
  altKey?: boolean
}

/**
 * Map a keyboard event to the key string the service accepts: printable
 * characters and 'Backspace'. Anything else (modifiers, chords, function
 * keys) maps to null and should not be sent.
 */
export function keyFromEvent(event: KeyEventLike): string | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null
  if (event.key === 'Backspace') return 'Backspace'
  if (event.key.length === 1) return event.key
  return null
}
