"""Control stack for quantum-dot autotuning: a hierarchical state-machine
language, a deterministic runtime, and the measurement plumbing underneath it
(message bus, instrument hub, instrument server, simulated device)."""

__version__ = "0.1.0"
