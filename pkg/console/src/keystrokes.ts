/**
 * Cadence-based keystroke chunking.
 *
 * Keystrokes accumulate in a buffer that is flushed every cadence tick
 * (default 300 ms) as one user_text_chunk; an empty buffer flushes
 * nothing. Typing while the bot is streaming still flushes (the server
 * treats it as a barge-in). A buffer of exactly "===" becomes the reset
 * command instead of a text chunk. While disconnected the buffer is
 * retained for the reconnect.
 */

import { InboundKind, RESET_TEXT } from './protocol.js';

export interface OutgoingChunk {
  kind: InboundKind;
  payload: Record<string, unknown>;
}

export class KeystrokeChunker {
  private buffer = '';

  constructor(readonly cadenceMs: number = 300) {}

  type(text: string): void {
    this.buffer += text;
  }

  get pending(): string {
    return this.buffer;
  }

  /** Cadence tick: drain the buffer into at most one message. */
  flush(connected: boolean = true): OutgoingChunk | null {
    if (!connected || this.buffer === '') {
      return null; // disconnected: keep the buffer for the reconnect
    }
    const text = this.buffer;
    this.buffer = '';
    if (text === RESET_TEXT) {
      return { kind: 'reset_command', payload: { text: RESET_TEXT } };
    }
    return { kind: 'user_text_chunk', payload: { text } };
  }
}
