import { describe, expect, it } from 'vitest'

import { keyFromEvent, markScript, typingProgress } from '../src/typing.js'

describe('markScript', () => {
  it('marks untouched script characters pending', () => {
    expect(markScript('abc', '')).toEqual([
      { char: 'a', state: 'pending' },
      { char: 'b', state: 'pending' },
      { char: 'c', state: 'pending' },
    ])
  })

  it('marks matches correct and mismatches wrong, position by position', () => {
    expect(markScript('abc', 'axc')).toEqual([
      { char: 'a', state: 'correct' },
      { char: 'b', state: 'wrong' },
      { char: 'c', state: 'correct' },
    ])
  })

  it('appends extra marks for typing past the script', () => {
    expect(markScript('hi', 'hi!!')).toEqual([
      { char: 'h', state: 'correct' },
      { char: 'i', state: 'correct' },
      { char: '!', state: 'extra' },
      { char: '!', state: 'extra' },
    ])
  })

  it('handles an empty script', () => {
    expect(markScript('', 'x')).toEqual([{ char: 'x', state: 'extra' }])
    expect(markScript('', '')).toEqual([])
  })

  it('treats spaces as ordinary characters', () => {
    const marks = markScript('a b', 'a_b')
    expect(marks[1]).toEqual({ char: ' ', state: 'wrong' })
  })
})

describe('typingProgress', () => {
  it('starts at zero completion and perfect accuracy', () => {
    expect(typingProgress('abcd', '')).toEqual({ completion: 0, accuracy: 1, done: false })
  })

  it('is done exactly when typed equals the script', () => {
    expect(typingProgress('hi', 'hi').done).toBe(true)
    expect(typingProgress('hi', 'hi ').done).toBe(false)
    expect(typingProgress('hi', 'h').done).toBe(false)
  })

  it('counts wrong characters against accuracy but not completion', () => {
    const progress = typingProgress('abcd', 'ax')
    expect(progress.completion).toBeCloseTo(0.25)
    expect(progress.accuracy).toBeCloseTo(0.5)
  })

  it('counts extra characters against accuracy', () => {
    const progress = typingProgress('ab', 'abxx')
    expect(progress.completion).toBe(1)
    expect(progress.accuracy).toBeCloseTo(0.5)
    expect(progress.done).toBe(false)
  })
})

describe('keyFromEvent', () => {
  it('passes printable characters through', () => {
    expect(keyFromEvent({ key: 'a' })).toBe('a')
    expect(keyFromEvent({ key: ' ' })).toBe(' ')
    expect(keyFromEvent({ key: '!' })).toBe('!')
  })

  it('maps Backspace by name', () => {
    expect(keyFromEvent({ key: 'Backspace' })).toBe('Backspace')
  })

  it('drops other named keys', () => {
    for (const key of ['Enter', 'Shift', 'ArrowLeft', 'F5', 'Escape', 'Tab']) {
      expect(keyFromEvent({ key })).toBeNull()
    }
  })

  it('drops chords with a held modifier', () => {
    expect(keyFromEvent({ key: 'a', ctrlKey: true })).toBeNull()
    expect(keyFromEvent({ key: 'a', metaKey: true })).toBeNull()
    expect(keyFromEvent({ key: 'a', altKey: true })).toBeNull()
  })
})
