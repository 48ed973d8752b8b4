"""Rule-based Follower: executes queued instruction tokens, asks when idle."""

from __future__ import annotations

from collections import deque

from ..actions import parse_token, tokenize_instruction, Utterance

HELP_UTTERANCE = "What should I do next?"


class RuleFollower:
    """Keeps a queue of pending tokens; one-to-one token-to-action mapping."""

    def __init__(self):
        self.queue = deque()

    def hear(self, text: str):
        self.queue.extend(tokenize_instruction(text))

    def next_action(self):
        """Pop one action, or the help utterance when the queue is empty."""
        if not self.queue:
            return Utterance(HELP_UTTERANCE)
        return parse_token(self.queue.popleft())
