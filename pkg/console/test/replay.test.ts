/**
 * Headless replay of a golden trace recorded from the engine.
 *
 * The reducer must render the exact transcript order, freeze the bot
 * bubble within one received message of interrupt_ack, never render a
 * message twice, and be fully deterministic.
 */

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';

import { parseTrace } from '../src/protocol.js';
import {
  ConsoleState,
  applyLocalSend,
  initialState,
  renderEvent,
} from '../src/state.js';

const HERE = dirname(fileURLToPath(import.meta.url));
const GOLDEN = readFileSync(
  join(HERE, 'fixtures', 'golden_interruption.trace'), 'utf-8');

function replay(): { states: ConsoleState[]; final: ConsoleState } {
  const states: ConsoleState[] = [];
  let state = { ...initialState(), connection: 'connected' as const };
  for (const entry of parseTrace(GOLDEN)) {
    if (entry.direction === '>') {
      if (entry.message.kind === 'user_text_chunk') {
        state = applyLocalSend(
          state, String(entry.message.payload['text']));
      }
    } else {
      state = renderEvent(state, entry.message);
    }
    states.push(state);
  }
  return { states, final: state };
}

describe('golden trace replay', () => {
  it('renders the exact transcript order', () => {
    const { final } = replay();
    const speakers = final.transcript.map((b) => b.speaker);
    expect(speakers).toEqual(['user', 'bot', 'user', 'bot']);
    expect(final.transcript[0]!.text).toBe('你好');
    expect(final.transcript[1]!.text).toBe('好');      // cut after 3 tokens
    expect(final.transcript[1]!.units).toBe(2);
    expect(final.transcript[2]!.text).toBe('等等我想先問別的');
    expect(final.transcript[3]!.text).toBe('抱歉請說');
    expect(final.transcript[3]!.state).toBe('closed');
  });

  it('freezes the interrupted bubble within one message of the ack', () => {
    const entries = parseTrace(GOLDEN).filter((e) => e.direction === '<');
    let state = initialState();
    let frozenAt = -1;
    let ackAt = -1;
    entries.forEach((entry, i) => {
      state = renderEvent(state, entry.message);
      if (ackAt < 0 && entry.message.kind === 'interrupt_ack') ackAt = i;
      if (frozenAt < 0
          && state.transcript.some((b) => b.state === 'interrupted')) {
        frozenAt = i;
      }
    });
    expect(ackAt).toBeGreaterThanOrEqual(0);
    expect(frozenAt).toBeGreaterThanOrEqual(0);
    expect(frozenAt - ackAt).toBeLessThanOrEqual(1);
  });

  it('never renders a message twice', () => {
    const entries = parseTrace(GOLDEN).filter((e) => e.direction === '<');
    let state = initialState();
    for (const entry of entries) {
      state = renderEvent(state, entry.message);
    }
    const once = state;
    // replaying an already-seen message is dropped and counted
    const dup = renderEvent(once, entries[3]!.message);
    expect(dup.dropped).toBe(once.dropped + 1);
    expect(dup.transcript).toEqual(once.transcript);
  });

  it('is deterministic across replays', () => {
    const a = replay().final;
    const b = replay().final;
    expect(a).toEqual(b);
  });

  it('updates the panels from reports and plans', () => {
    const { final } = replay();
    expect(final.phase).toBe('Idle');
    expect(final.latency).not.toBeNull();
    expect(final.latency!.boundAsync).toBeLessThanOrEqual(
      final.latency!.boundSync);
    expect(final.chunkPlan).not.toBeNull();
    expect(final.chunkPlan!.length).toBeGreaterThan(0);
  });
});
