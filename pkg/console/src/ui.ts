/** DOM rendering of ConsoleState; view only, no protocol logic. */

import { ConsoleState } from './state.js';

export interface Handlers {
  onVote(turn: number, vote: 'up' | 'down'): void;
}

export function render(root: HTMLElement, state: ConsoleState,
                       handlers: Handlers): void {
  const badge = root.querySelector('#state-badge') as HTMLElement;
  badge.textContent = state.phase;
  badge.dataset['phase'] = state.phase;

  const conn = root.querySelector('#connection') as HTMLElement;
  conn.textContent = state.connection;
  conn.classList.toggle('disconnected', state.connection === 'disconnected');
  (root.querySelector('#reconnect-banner') as HTMLElement).hidden =
    state.connection !== 'disconnected';

  const transcript = root.querySelector('#transcript') as HTMLElement;
  transcript.replaceChildren();
  for (const bubble of state.transcript) {
    const div = document.createElement('div');
    div.className = `bubble ${bubble.speaker} ${bubble.state}`;
    const text = document.createElement('span');
    text.textContent = bubble.text || (bubble.units ? '' : '…');
    div.appendChild(text);
    if (bubble.units > 0) {
      const units = document.createElement('span');
      units.className = 'units';
      units.textContent = ` ♪${bubble.units}`;
      div.appendChild(units);
    }
    if (bubble.state === 'interrupted') {
      const marker = document.createElement('em');
      marker.textContent = ' (interrupted)';
      div.appendChild(marker);
    }
    if (bubble.silenceInitiated) {
      const marker = document.createElement('em');
      marker.textContent = ' (silence-initiated)';
      div.appendChild(marker);
    }
    if (bubble.speaker === 'bot' && bubble.turn !== undefined
        && bubble.state !== 'open') {
      for (const dir of ['up', 'down'] as const) {
        const btn = document.createElement('button');
        btn.textContent = dir === 'up' ? '👍' : '👎';
        btn.disabled = bubble.vote !== undefined;
        btn.classList.toggle('voted', bubble.vote === dir);
        btn.onclick = () => handlers.onVote(bubble.turn!, dir);
        div.appendChild(btn);
      }
    }
    transcript.appendChild(div);
  }
  transcript.scrollTop = transcript.scrollHeight;

  const latency = root.querySelector('#latency') as HTMLElement;
  if (state.latency === null) {
    latency.textContent = 'no reports yet';
  } else {
    const spans = Object.entries(state.latency.spans)
      .map(([k, v]) => `${k}=${v}ms`).join('  ');
    latency.textContent =
      `turn ${state.latency.turn}: ${spans}  | bound sync ` +
      `${state.latency.boundSync}ms / async ${state.latency.boundAsync}ms`;
  }

  const plan = root.querySelector('#chunk-plan') as HTMLElement;
  plan.replaceChildren();
  if (state.chunkPlan !== null && state.chunkPlan.length) {
    const total = state.chunkPlan[state.chunkPlan.length - 1]!.playbackEndMs;
    const origin = state.chunkPlan[0]!.tMs;
    const scale = Math.max(total - origin, 1);
    for (const entry of state.chunkPlan) {
      const seg = document.createElement('div');
      seg.className = 'chunk';
      seg.title = `chunk ${entry.index}: ${entry.nUnits} units, cut @${entry.tMs}ms`;
      seg.style.left = `${(100 * (entry.playbackStartMs - origin)) / scale}%`;
      seg.style.width =
        `${(100 * (entry.playbackEndMs - entry.playbackStartMs)) / scale}%`;
      seg.textContent = String(entry.nUnits);
      plan.appendChild(seg);
    }
  }

  const dropped = root.querySelector('#dropped') as HTMLElement;
  dropped.hidden = state.dropped === 0;
  dropped.textContent = `⚠ ${state.dropped} out-of-order message(s) dropped`;

  const errors = root.querySelector('#errors') as HTMLElement;
  errors.replaceChildren();
  for (const message of state.errors.slice(-3)) {
    const div = document.createElement('div');
    div.textContent = message;
    errors.appendChild(div);
  }

  (root.querySelector('#pending') as HTMLElement).textContent =
    state.pending ? `typing: ${state.pending}` : '';
}
