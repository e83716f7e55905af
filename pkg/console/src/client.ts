/**
 * Session client: one WebSocket, one wire line per frame, outbound
 * sequence numbering, and reducer dispatch for everything received.
 */

import { KeystrokeChunker } from './keystrokes.js';
import { InboundKind, WireMessage, decodeMessage, encodeMessage } from './protocol.js';
import { ConsoleState, applyLocalSend, applyVote, initialState, renderEvent, voteRecord } from './state.js';

export type SocketLike = {
  send(data: string): void;
  close(): void;
  // handler slots are deliberately loose so both browser WebSocket and
  // the node ws client satisfy this structurally
  onmessage: ((ev: any) => void) | null;
  onopen: ((ev?: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
};

export class DuplexClient {
  state: ConsoleState = initialState();
  readonly chunker: KeystrokeChunker;
  private seq = 0;
  private socket: SocketLike | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly makeSocket: () => SocketLike,
    private readonly onChange: (state: ConsoleState) => void,
    private readonly now: () => number = () => Math.round(performance.now()),
    cadenceMs: number = 300,
  ) {
    this.chunker = new KeystrokeChunker(cadenceMs);
  }

  connect(): void {
    const socket = this.makeSocket();
    this.socket = socket;
    socket.onopen = () => {
      this.update({ ...this.state, connection: 'connected' });
      this.timer = setInterval(() => this.tick(), this.chunker.cadenceMs);
    };
    socket.onclose = () => {
      if (this.timer !== null) clearInterval(this.timer);
      this.timer = null;
      this.update({ ...this.state, connection: 'disconnected' });
    };
    socket.onmessage = (ev) => {
      let msg: WireMessage;
      try {
        msg = decodeMessage(String(ev.data));
      } catch {
        return; // not a wire line; ignore
      }
      this.update(renderEvent(this.state, msg));
    };
  }

  close(): void {
    this.socket?.close();
  }

  /** Feed typed characters; they flush on the next cadence tick. */
  type(text: string): void {
    this.chunker.type(text);
    this.update({ ...this.state, pending: this.chunker.pending });
  }

  /** One cadence tick; exposed for tests. */
  tick(): void {
    const chunk = this.chunker.flush(this.state.connection === 'connected');
    if (chunk === null) return;
    if (chunk.kind === 'user_text_chunk') {
      this.update(applyLocalSend(this.state, String(chunk.payload['text'])));
    }
    this.send(chunk.kind, chunk.payload);
    this.update({ ...this.state, pending: this.chunker.pending });
  }

  vote(turn: number, vote: 'up' | 'down',
       tag?: 'quality' | 'flow' | 'completion'): void {
    this.send('feedback', voteRecord(turn, vote, tag));
    this.update(applyVote(this.state, turn, vote, tag));
  }

  private send(kind: InboundKind, payload: Record<string, unknown>): void {
    const msg: WireMessage = { kind, t: this.now(), seq: this.seq++, payload };
    this.socket?.send(encodeMessage(msg));
  }

  private update(state: ConsoleState): void {
    this.state = state;
    this.onChange(state);
  }
}
