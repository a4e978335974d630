// Wires the session controller to the page: form, phase banner, script
// marking, live strip chart, and keyboard capture.

import { ApiClient, ApiError } from './api.js'
import type { Condition, Label } from './api.js'
import { SessionController } from './session.js'
import { decimate } from './trace.js'
import { keyFromEvent, markScript, typingProgress } from './typing.js'

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function apiBase(): string {
  // Same origin by default; ?api=http://host:port points elsewhere.
  return new URLSearchParams(window.location.search).get('api') ?? ''
}

const LIVE_PHASES = new Set(['pre-rest', 'typing', 'post-rest'])

function main(): void {
  const form = el<HTMLFormElement>('setup')
  const userInput = el<HTMLInputElement>('user-id')
  const conditionSelect = el<HTMLSelectElement>('condition')
  const labelSelect = el<HTMLSelectElement>('label')
  const scriptInput = el<HTMLTextAreaElement>('script')
  const startButton = el<HTMLButtonElement>('start')
  const finishButton = el<HTMLButtonElement>('finish')
  const abortButton = el<HTMLButtonElement>('abort')
  const phaseBanner = el<HTMLElement>('phase')
  const remaining = el<HTMLElement>('remaining')
  const scriptView = el<HTMLElement>('script-view')
  const progressView = el<HTMLElement>('progress')
  const statusLine = el<HTMLElement>('status')
  const chart = el<HTMLCanvasElement>('chart')

  const controller = new SessionController({
    api: new ApiClient(apiBase()),
    onChange: render,
  })

  function render(): void {
    const snapshot = controller.snapshot
    phaseBanner.textContent = controller.phase
    phaseBanner.dataset.phase = controller.phase
    remaining.textContent = snapshot && LIVE_PHASES.has(snapshot.phase)
      ? `${snapshot.remaining_s.toFixed(1)} s left`
      : ''
    startButton.disabled = !snapshot || snapshot.phase !== 'created'
    finishButton.disabled = !snapshot
      || snapshot.phase !== 'typing'
      || snapshot.condition !== 'open'
    abortButton.disabled = !snapshot || !LIVE_PHASES.has(snapshot.phase)

    renderScript()
    renderChart()

    if (controller.lastError) {
      statusLine.textContent = `${controller.lastError.errorName}: ${controller.lastError.message}`
    } else if (snapshot?.error) {
      statusLine.textContent = `session error: ${snapshot.error}`
    } else if (snapshot?.recording_path) {
      statusLine.textContent = `recording saved: ${snapshot.recording_path}`
    } else {
      statusLine.textContent = ''
    }
  }

  function renderScript(): void {
    const snapshot = controller.snapshot
    scriptView.replaceChildren()
    if (!snapshot || snapshot.script === null) {
      progressView.textContent = snapshot ? `${snapshot.key_count} keys` : ''
      return
    }
    for (const mark of markScript(snapshot.script, snapshot.typed)) {
      const span = document.createElement('span')
      span.className = `char ${mark.state}`
      span.textContent = mark.char
      scriptView.appendChild(span)
    }
    const progress = typingProgress(snapshot.script, snapshot.typed)
    progressView.textContent =
      `${Math.round(progress.completion * 100)}% complete, ` +
      `${Math.round(progress.accuracy * 100)}% accurate`
  }

  function renderChart(): void {
    const ctx = chart.getContext('2d')
    if (!ctx) return
    const width = chart.width
    const height = chart.height
    ctx.clearRect(0, 0, width, height)
    const bands = decimate(controller.trace.window(), width)
    if (bands.length === 0) return
    // ADC range is 0..1023; y grows downward.
    const toY = (v: number) => height - (v / 1023) * height
    ctx.strokeStyle = '#3a7d44'
    ctx.beginPath()
    bands.forEach((band, x) => {
      ctx.moveTo(x + 0.5, toY(band.max))
      ctx.lineTo(x + 0.5, toY(band.min) + 1)
    })
    ctx.stroke()
  }

  form.addEventListener('submit', event => {
    event.preventDefault()
    const condition = conditionSelect.value as Condition
    const script = scriptInput.value
    void controller
      .create({
        user_id: userInput.value.trim(),
        condition,
        label: labelSelect.value as Label,
        ...(condition === 'fixed' || script ? { script } : {}),
      })
      .catch(() => {}) // surfaced via controller.lastError
  })

  startButton.addEventListener('click', () => void controller.start().catch(() => {}))
  finishButton.addEventListener('click', () => void controller.finish().catch(() => {}))
  abortButton.addEventListener('click', () => void controller.abort().catch(() => {}))

  window.addEventListener('keydown', event => {
    if (controller.phase !== 'typing') return
    const target = event.target as HTMLElement | null
    if (target && ['INPUT', 'TEXTAREA', 'SELECT'].includes(target.tagName)) return
    const key = keyFromEvent(event)
    if (key === null) return
    event.preventDefault()
    void controller.sendKey(key).catch(() => {})
  })

  render()
}

main()
