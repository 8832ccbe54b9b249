import json
from collections import Counter
from datetime import datetime, timedelta, timezone

import pytest

from emistudy.errors import ConflictError, NotFoundError, PreconditionError
from emistudy.study import (
    ArmRandomizer,
    AssignmentBook,
    Center,
    Module,
    StudyArm,
    StudyConfig,
    User,
    enrollment_window,
    load_config,
    modules_for,
)

T0 = datetime(2026, 4, 15, 9, 0, tzinfo=timezone.utc)


# -- gating -------------------------------------------------------------------

def test_gating_table_matches_arm_enumeration():
    expected = {
        StudyArm.ARM1: {Module.DIARY, Module.FEEDBACK, Module.ABOUT_US},
        StudyArm.ARM2: {Module.DIARY, Module.SHADES_OF_NOISE, Module.FEEDBACK, Module.ABOUT_US},
        StudyArm.ARM3: {Module.DIARY, Module.TINEDU, Module.FEEDBACK, Module.ABOUT_US},
        StudyArm.ARM4: {Module.DIARY, Module.SHADES_OF_NOISE, Module.TINEDU,
                        Module.FEEDBACK, Module.ABOUT_US},
    }
    for arm, modules in expected.items():
        assert modules_for(arm) == modules


def test_every_arm_includes_diary_feedback_about():
    for arm in StudyArm:
        assert {Module.DIARY, Module.FEEDBACK, Module.ABOUT_US} <= modules_for(arm)
        assert modules_for(arm) <= set(Module)


def test_arm4_is_superset_of_all():
    for arm in StudyArm:
        assert modules_for(arm) <= modules_for(StudyArm.ARM4)


# -- randomization --------------------------------------------------------------

def test_block_of_four_covers_each_arm_once():
    rng = ArmRandomizer("seed-a")
    arms = [rng.draw("C1")[0] for _ in range(4)]
    assert Counter(arms) == Counter({arm: 1 for arm in StudyArm})


def test_eight_users_two_blocks_each_arm_twice():
    rng = ArmRandomizer("seed-b")
    arms = [rng.draw("C1")[0] for _ in range(8)]
    assert Counter(arms) == Counter({arm: 2 for arm in StudyArm})


def test_replay_with_same_seed_is_identical():
    first = ArmRandomizer("seed-r", block_size=8)
    second = ArmRandomizer("seed-r", block_size=8)
    seq_a = [first.draw("C2") for _ in range(100)]
    seq_b = [second.draw("C2") for _ in range(100)]
    assert seq_a == seq_b


def test_different_seeds_differ():
    a = ArmRandomizer("s1")
    b = ArmRandomizer("s2")
    assert [a.draw("C1")[0] for _ in range(32)] != [b.draw("C1")[0] for _ in range(32)]


def test_prefix_imbalance_bounded():
    rng = ArmRandomizer("seed-p")
    counts = Counter()
    for i in range(200):
        counts[rng.draw("C1")[0]] += 1
        diff = max(counts.values()) - min(counts[arm] for arm in StudyArm)
        assert diff <= 1  # block_size 4 keeps any prefix within one draw per arm
        if (i + 1) % 4 == 0:
            assert len(set(counts[arm] for arm in StudyArm)) == 1


def test_centers_draw_independently():
    joint = ArmRandomizer("seed-i")
    solo = ArmRandomizer("seed-i")
    interleaved = []
    for _ in range(20):
        interleaved.append(joint.draw("C1"))
        joint.draw("C2")  # traffic on another center must not disturb C1
    alone = [solo.draw("C1") for _ in range(20)]
    assert interleaved == alone


def test_state_snapshot_resumes_mid_block():
    rng = ArmRandomizer("seed-s", block_size=8)
    head = [rng.draw("C1") for _ in range(5)]
    resumed = ArmRandomizer("seed-s", block_size=8, state=rng.state())
    tail_resumed = [resumed.draw("C1") for _ in range(11)]
    fresh = ArmRandomizer("seed-s", block_size=8)
    full = [fresh.draw("C1") for _ in range(16)]
    assert head + tail_resumed == full


def test_block_size_must_be_multiple_of_four():
    with pytest.raises(ValueError):
        ArmRandomizer("x", block_size=6)
    with pytest.raises(ValueError):
        ArmRandomizer("x", block_size=0)


def test_position_and_block_id():
    rng = ArmRandomizer("seed-q")
    draws = [rng.draw("C9") for _ in range(6)]
    assert [d[2] for d in draws] == [0, 1, 2, 3, 0, 1]
    assert [d[1] for d in draws] == ["C9:0"] * 4 + ["C9:1"] * 2


# -- assignment book ---------------------------------------------------------------

def make_config(**overrides):
    values = dict(
        centers=[Center("C1", "One", "en"), Center("C2", "Two", "de")],
        block_size=4, seed_policy="fixed", seed="book-seed",
        languages=["en", "de"],
    )
    values.update(overrides)
    return StudyConfig(**values)


def user(uid, center="C1"):
    return User(uid, "anonymous", center, "en", T0)


def test_assign_user_once_only():
    book = AssignmentBook(make_config())
    assignment = book.assign_user(user("u1"))
    assert assignment.arm in set(StudyArm)
    with pytest.raises(ConflictError):
        book.assign_user(user("u1"))
    assert book.get("u1") == assignment


def test_assign_unknown_center():
    book = AssignmentBook(make_config())
    with pytest.raises(NotFoundError):
        book.assign_user(user("u1", center="C9"))


def test_unassigned_user_lookup_fails():
    book = AssignmentBook(make_config())
    with pytest.raises(PreconditionError):
        book.get("ghost")


# -- enrollment window -----------------------------------------------------------

def test_window_at_enrollment():
    status = enrollment_window(T0, T0)
    assert status == {"active": True, "expired": False, "days_remaining": 84}


def test_window_day_83_active_one_day_left():
    status = enrollment_window(T0, T0 + timedelta(days=83))
    assert status["active"] and status["days_remaining"] == 1


def test_window_day_84_expired():
    status = enrollment_window(T0, T0 + timedelta(days=84))
    assert status == {"active": False, "expired": True, "days_remaining": 0}


def test_window_partial_day_rounds_up():
    status = enrollment_window(T0, T0 + timedelta(days=83, hours=12))
    assert status["days_remaining"] == 1
    status = enrollment_window(T0, T0 + timedelta(days=82, hours=1))
    assert status["days_remaining"] == 2


def test_window_requires_aware_datetimes():
    with pytest.raises(PreconditionError):
        enrollment_window(T0.replace(tzinfo=None), T0)


def test_window_length_configurable():
    status = enrollment_window(T0, T0 + timedelta(days=13), window_days=14)
    assert status["active"] and status["days_remaining"] == 1
    assert enrollment_window(T0, T0 + timedelta(days=14), window_days=14)["expired"]


# -- configuration ------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        make_config(centers=[])
    with pytest.raises(ValueError):
        make_config(centers=[Center("C1", "a", "en"), Center("C1", "b", "en")])
    with pytest.raises(ValueError):
        make_config(centers=[Center("C1", "a", "fr")])  # undeclared language
    with pytest.raises(ValueError):
        make_config(seed_policy="dice")
    with pytest.raises(ValueError):
        make_config(seed_policy="fixed", seed=None)


def test_load_config_file(tmp_path):
    path = tmp_path / "study.json"
    path.write_text(json.dumps({
        "languages": ["en", "de"],
        "block_size": 8,
        "seed_policy": "fixed",
        "seed": "s",
        "window_days": 42,
        "centers": [{"id": "C1", "name": "One", "language": "de"}],
    }))
    config = load_config(path)
    assert config.block_size == 8
    assert config.window_days == 42
    assert config.center("C1").language == "de"
    with pytest.raises(NotFoundError):
        config.center("C2")
