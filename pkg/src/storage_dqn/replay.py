"""Proportional prioritized experience replay backed by a sum tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ReplayError(RuntimeError):
    pass


@dataclass
class Experience:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    done: bool

    def __post_init__(self):
        if self.action not in (0, 1, 2):
            raise ValueError(f"action must be 0, 1 or 2, got {self.action}")


class SumTree:
    """Array-backed binary tree whose internal nodes hold the sum of their children.

    Leaves occupy ``nodes[capacity:2*capacity]`` (capacity padded to a power of
    two); the root is ``nodes[1]``. Parents are recomputed from their children
    on every update rather than patched with a delta, so the root is always a
    fixed function of the current leaves.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        size = 1
        while size < capacity:
            size *= 2
        self._leaves = size
        self.nodes = np.zeros(2 * size)

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def leaf(self, index):
        return self.nodes[self._leaves + np.asarray(index)]

    def update(self, index: int, value: float):
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf {index} out of range")
        i = self._leaves + index
        self.nodes[i] = value
        i //= 2
        while i >= 1:
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1]
            i //= 2

    def update_many(self, indices, values):
        """Set several leaves, then refresh their ancestors one level at a time."""
        indices = np.asarray(indices, dtype=np.int64)
        if np.any((indices < 0) | (indices >= self.capacity)):
            raise IndexError("leaf index out of range")
        self.nodes[self._leaves + indices] = values
        i = np.unique((self._leaves + indices) // 2)
        while i.size and i[0] >= 1:
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1]
            if i[0] == 1:
                break
            i = np.unique(i // 2)

    def find(self, prefix: np.ndarray) -> np.ndarray:
        """Leaf indices whose cumulative-sum interval contains each prefix value."""
        prefix = np.array(prefix, dtype=np.float64)
        idx = np.ones(prefix.shape, dtype=np.int64)
        while idx[0] < self._leaves:
            left = 2 * idx
            left_sum = self.nodes[left]
            go_right = prefix >= left_sum
            # never descend into an empty subtree because of rounding at the edge
            go_right &= self.nodes[left + 1] > 0
            go_right |= left_sum <= 0
            prefix = np.where(go_right, prefix - left_sum, prefix)
            idx = np.where(go_right, left + 1, left)
        return idx - self._leaves

    def check(self) -> bool:
        """True when every internal node equals the sum of its two children."""
        internal = np.arange(1, self._leaves)
        return bool(np.all(self.nodes[internal] == self.nodes[2 * internal] + self.nodes[2 * internal + 1]))


class PerBuffer:
    """Ring buffer of transitions sampled with P(i) = p_i^alpha / sum_k p_k^alpha.

    Importance weights are ``(N * P(i))^-beta`` divided by the batch maximum,
    where N is the number of stored transitions. ``alpha`` and ``beta`` are
    plain attributes so a training loop can anneal ``beta``.
    """

    def __init__(self, capacity=10240, obs_dim=None, alpha=0.6, beta=0.4,
                 priority_eps=1e-3, stratified=True):
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.priority_eps = float(priority_eps)
        self.stratified = stratified
        if self.priority_eps <= 0:
            raise ValueError("priority_eps must be positive")
        self.tree = SumTree(self.capacity)
        self.priorities = np.zeros(self.capacity)
        self.max_priority = 1.0
        self.size = 0
        self._next = 0
        self._obs_dim = obs_dim
        if obs_dim is not None:
            self._alloc(obs_dim)

    def _alloc(self, obs_dim):
        self._obs_dim = obs_dim
        self.obs = np.zeros((self.capacity, obs_dim))
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity)
        self.dones = np.zeros(self.capacity, dtype=bool)

    def __len__(self):
        return self.size

    def _set_priority(self, index, priority):
        self.priorities[index] = priority
        self.tree.update(index, priority ** self.alpha)

    def push(self, exp: Experience):
        self.add(exp.obs, exp.action, exp.reward, exp.next_obs, exp.done)

    def add(self, obs, action, reward, next_obs, done):
        """Store one transition at the current maximum priority, evicting the oldest."""
        if self._obs_dim is None:
            self._alloc(len(obs))
        i = self._next
        self.obs[i] = obs
        self.next_obs[i] = next_obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.dones[i] = done
        self._set_priority(i, self.max_priority)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def probabilities(self) -> np.ndarray:
        scaled = self.tree.leaf(np.arange(self.size))
        return scaled / scaled.sum()

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Return ``(indices, batch, is_weights)``; ``batch`` is a dict of arrays."""
        if self.size < batch_size or batch_size < 1:
            raise ReplayError(f"cannot sample {batch_size} from a buffer holding {self.size}")
        total = self.tree.total
        if self.stratified:
            edges = np.arange(batch_size) * (total / batch_size)
            prefix = edges + rng.uniform(0.0, total / batch_size, size=batch_size)
        else:
            prefix = rng.uniform(0.0, total, size=batch_size)
        idx = self.tree.find(np.minimum(prefix, np.nextafter(total, 0.0)))
        probs = self.tree.leaf(idx) / total
        weights = (self.size * probs) ** (-self.beta)
        weights /= weights.max()
        batch = {
            "obs": self.obs[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_obs": self.next_obs[idx],
            "dones": self.dones[idx],
        }
        return idx, batch, weights

    def experiences(self, indices) -> list[Experience]:
        return [
            Experience(self.obs[i].copy(), int(self.actions[i]), float(self.rewards[i]),
                       self.next_obs[i].copy(), bool(self.dones[i]))
            for i in indices
        ]

    def update_priorities(self, indices, td_errors):
        indices = np.asarray(indices)
        if np.any((indices < 0) | (indices >= self.size)):
            raise IndexError("priority update for an index that holds no transition")
        p = np.abs(np.asarray(td_errors, dtype=float)) + self.priority_eps
        # a repeated index keeps its last value, as sequential updates would
        self.priorities[indices] = p
        self.tree.update_many(indices, self.priorities[indices] ** self.alpha)
        self.max_priority = max(self.max_priority, float(p.max()))
