/** Browser entry point: wire the client to the DOM. */

import { DuplexClient } from './client.js';
import { render } from './ui.js';

const params = new URLSearchParams(location.search);
const url = params.get('ws')
  ?? `ws://${location.hostname || '127.0.0.1'}:8990/session`;

const root = document.getElementById('app')!;
const input = document.getElementById('input') as HTMLInputElement;

const client = new DuplexClient(
  () => new WebSocket(url),
  (state) => render(root, state, {
    onVote: (turn, vote) => client.vote(turn, vote),
  }),
);

// every keystroke goes into the cadence buffer as it is typed
input.addEventListener('input', () => {
  client.type(input.value);
  input.value = '';
});
input.addEventListener('keydown', (ev) => {
  if (ev.key === 'Enter') client.tick(); // flush early on Enter
});

client.connect();
