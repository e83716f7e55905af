"""Full-duplex spoken dialogue streaming engine.

Subpackages map to the pipeline stages:

  core        tokens, session configuration, clocks, latency accounting
  frontend    recognizer stabilization, unit extraction, interleaving
  turns       the duplex turn-taking state machine
  scheduler   dynamic chunking for streaming synthesis
  backends    backend interfaces and scripted implementations
  scenario    scripted-session documents for deterministic replay
  corpus      offline data preparation
  evaluation  character error rate, judge scoring, agent forum, reports
  service     wire protocol, session runtime, replay driver, server
"""

__version__ = "0.1.0"
