"""Study domain model: centers, arms, randomized assignment, module gating.

Assignment uses permuted-block randomization per center: every block holds
each arm ``block_size / 4`` times in a shuffled order, so arm counts stay
balanced within each center at every block boundary. Shuffles are seeded
deterministically from (study seed, center, block index), which makes the
whole assignment sequence replayable for audits.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

from .errors import ConflictError, NotFoundError, PreconditionError

WINDOW_DAYS_DEFAULT = 84  # participants use the apps for 12 weeks
ARM_COUNT = 4


class Module(str, Enum):
    DIARY = "diary"
    SHADES_OF_NOISE = "shades_of_noise"
    TINEDU = "tinedu"
    FEEDBACK = "feedback"
    ABOUT_US = "about_us"


class StudyArm(str, Enum):
    ARM1 = "arm1"
    ARM2 = "arm2"
    ARM3 = "arm3"
    ARM4 = "arm4"


# Arm-specific interventions. Feedback and About Us are open to every arm.
_ARM_INTERVENTIONS: dict[StudyArm, frozenset[Module]] = {
    StudyArm.ARM1: frozenset({Module.DIARY}),
    StudyArm.ARM2: frozenset({Module.DIARY, Module.SHADES_OF_NOISE}),
    StudyArm.ARM3: frozenset({Module.DIARY, Module.TINEDU}),
    StudyArm.ARM4: frozenset({Module.DIARY, Module.SHADES_OF_NOISE, Module.TINEDU}),
}
_ALWAYS_ON = frozenset({Module.FEEDBACK, Module.ABOUT_US})


def modules_for(arm: StudyArm) -> frozenset[Module]:
    """The modules a user of the given arm may see."""
    return _ARM_INTERVENTIONS[StudyArm(arm)] | _ALWAYS_ON


@dataclass(frozen=True)
class Center:
    center_id: str
    name: str
    language: str


@dataclass(frozen=True)
class User:
    user_id: str
    auth_mode: str  # "registered" | "anonymous"
    center_id: str
    language: str
    enrolled_at: datetime
    login: str | None = None


@dataclass(frozen=True)
class Assignment:
    user_id: str
    arm: StudyArm
    center_id: str
    block_id: str
    position: int
    assigned_at: datetime


def now_utc() -> datetime:
    return datetime.now(timezone.utc)


def enrollment_window(enrolled_at: datetime, now: datetime,
                      window_days: int = WINDOW_DAYS_DEFAULT) -> dict:
    """Window status at ``now``: active strictly before enrollment + window."""
    if enrolled_at.tzinfo is None or now.tzinfo is None:
        raise PreconditionError("enrollment window needs timezone-aware instants")
    deadline = enrolled_at + timedelta(days=window_days)
    active = now < deadline
    remaining = (deadline - now) / timedelta(days=1)
    return {
        "active": active,
        "expired": not active,
        "days_remaining": max(0, math.ceil(remaining)) if active else 0,
    }


class ArmRandomizer:
    """Permuted-block arm randomizer, one independent block stream per center.

    ``draw`` must be serialized per center by the caller; the state snapshot
    is meant to be persisted atomically together with the assignment it
    produced.
    """

    def __init__(self, seed: str, block_size: int = 4,
                 state: dict | None = None):
        if block_size < ARM_COUNT or block_size % ARM_COUNT != 0:
            raise ValueError(f"block size must be a positive multiple of {ARM_COUNT}, got {block_size}")
        self.seed = seed
        self.block_size = block_size
        # per center: {"block": [arm values], "cursor": int, "block_index": int}
        self._state: dict[str, dict] = {}
        if state:
            for center_id, entry in state.items():
                self._state[center_id] = {
                    "block": list(entry["block"]),
                    "cursor": int(entry["cursor"]),
                    "block_index": int(entry["block_index"]),
                }

    def _new_block(self, center_id: str, block_index: int) -> list[str]:
        arms = [arm.value for arm in StudyArm for _ in range(self.block_size // ARM_COUNT)]
        rng = random.Random(f"{self.seed}|{center_id}|{block_index}")
        rng.shuffle(arms)
        return arms

    def draw(self, center_id: str) -> tuple[StudyArm, str, int]:
        """Next arm for a center; returns (arm, block id, position in block)."""
        entry = self._state.get(center_id)
        if entry is None or entry["cursor"] >= self.block_size:
            block_index = entry["block_index"] + 1 if entry else 0
            entry = {"block": self._new_block(center_id, block_index),
                     "cursor": 0, "block_index": block_index}
            self._state[center_id] = entry
        arm = StudyArm(entry["block"][entry["cursor"]])
        position = entry["cursor"]
        entry["cursor"] += 1
        return arm, f"{center_id}:{entry['block_index']}", position

    def state(self) -> dict:
        return {cid: dict(entry, block=list(entry["block"])) for cid, entry in self._state.items()}


@dataclass
class StudyConfig:
    """Deployment configuration: centers, randomization and window policy."""

    centers: list[Center]
    block_size: int = 4
    seed_policy: str = "fixed"  # "fixed" | "entropy"
    seed: str | None = None
    window_days: int = WINDOW_DAYS_DEFAULT
    languages: list[str] = field(default_factory=lambda: ["en"])

    def __post_init__(self):
        if not self.centers:
            raise ValueError("configuration must declare at least one center")
        ids = [c.center_id for c in self.centers]
        if len(set(ids)) != len(ids):
            raise ValueError("center ids must be unique")
        for center in self.centers:
            if center.language not in self.languages:
                raise ValueError(
                    f"center {center.center_id!r} defaults to undeclared language {center.language!r}")
        if self.seed_policy not in ("fixed", "entropy"):
            raise ValueError(f"seed_policy must be 'fixed' or 'entropy', got {self.seed_policy!r}")
        if self.seed_policy == "fixed" and not self.seed:
            raise ValueError("seed_policy 'fixed' requires a seed value")

    def center(self, center_id: str) -> Center:
        for center in self.centers:
            if center.center_id == center_id:
                return center
        raise NotFoundError(f"unknown center {center_id!r}")


def load_config(path: str | Path) -> StudyConfig:
    """Load the JSON study configuration file."""
    raw = json.loads(Path(path).read_text("utf-8"))
    centers = [Center(c["id"], c.get("name", c["id"]), c.get("language", "en"))
               for c in raw["centers"]]
    return StudyConfig(
        centers=centers,
        block_size=raw.get("block_size", 4),
        seed_policy=raw.get("seed_policy", "fixed"),
        seed=raw.get("seed"),
        window_days=raw.get("window_days", WINDOW_DAYS_DEFAULT),
        languages=raw.get("languages", ["en"]),
    )


class AssignmentBook:
    """In-memory assignment ledger enforcing one immutable assignment per user.

    The API server keeps assignments in its transactional store; this class
    backs library use and tests of the randomization properties.
    """

    def __init__(self, config: StudyConfig, randomizer: ArmRandomizer | None = None):
        self.config = config
        self.randomizer = randomizer or ArmRandomizer(config.seed or "0", config.block_size)
        self._assignments: dict[str, Assignment] = {}

    def assign_user(self, user: User) -> Assignment:
        if user.user_id in self._assignments:
            raise ConflictError(f"user {user.user_id!r} is already assigned")
        self.config.center(user.center_id)
        arm, block_id, position = self.randomizer.draw(user.center_id)
        assignment = Assignment(user.user_id, arm, user.center_id, block_id, position, now_utc())
        self._assignments[user.user_id] = assignment
        return assignment

    def get(self, user_id: str) -> Assignment:
        try:
            return self._assignments[user_id]
        except KeyError:
            raise PreconditionError(f"user {user_id!r} has no assignment") from None
