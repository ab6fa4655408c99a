import math

import pytest

from aerialnav.codec import LAND, Action, ActionTokens, dequantize, quantize
from aerialnav.evaluation import FixedActionPolicy, LandNowPolicy
from aerialnav.expert import (
    DelayedPolicy,
    ExpertPolicy,
    ReactionDelay,
    dumps_trajectories,
    expert_policy,
    inject_reaction_delay,
    loads_trajectories,
    record_episode,
)
from aerialnav.geometry import Pose, horizontal_distance
from aerialnav.prompting import fuzzy_hint, is_lateral
from aerialnav.sim import Bounds, DepthProbe, Obstacle, Scene, probe_depth, step

BIG = Bounds((-500.0, -500.0, 0.0), (500.0, 500.0, 200.0))
CLEAR = DepthProbe(100.0, 100.0, 100.0, 10.0)


def scene_with(*boxes, start=Pose(0, 0, 10, 0), target=(100.0, 0.0, 5.0)):
    return Scene(1, BIG, start, target, "the red car", tuple(boxes), "easy")


def test_lands_when_over_target_at_hover_height():
    s = scene_with(target=(1.0, 1.0, 5.0))
    assert expert_policy(s, Pose(0, 0, 10, 0), CLEAR, 0.0) is LAND


def test_turn_is_capped_toward_target():
    s = scene_with(target=(0.0, -100.0, 5.0))  # dead right of a +x heading
    pose = Pose(0, 0, 10, 0)
    a = expert_policy(s, pose, CLEAR, math.pi / 2)
    assert a.dpsi == pytest.approx(-math.pi / 4)
    assert a.dx == 5.0
    after = step(s, pose, a).new_pose
    from aerialnav.geometry import relative_bearing
    assert relative_bearing(after, s.target) < math.pi / 2


def test_small_bearing_is_corrected_exactly():
    s = scene_with()
    a = expert_policy(s, Pose(0, 0, 10, 0), CLEAR, math.radians(10))
    assert a.dpsi == pytest.approx(-math.radians(10))


def test_altitude_command_is_clamped():
    s = scene_with(target=(100.0, 0.0, 0.0))
    assert expert_policy(s, Pose(0, 0, 30, 0), CLEAR, 0.0).dz == -5.0
    assert expert_policy(s, Pose(0, 0, 3, 0), CLEAR, 0.0).dz == pytest.approx(2.0)


def test_evasion_when_forward_blocked():
    wall = Obstacle((10.0, 0.0, 30.0), (2.0, 20.0, 30.0))  # face 8 m ahead
    side = Obstacle((0.0, 9.0, 30.0), (3.0, 1.0, 30.0))  # 8 m to the left
    s = scene_with(wall, side)
    pose = Pose(0, 0, 10, 0)
    probe = probe_depth(s, pose)
    assert probe.forward == pytest.approx(8.0)
    a = expert_policy(s, pose, probe, 0.0)
    assert a.dx == 2.0
    # nearer obstacle is on the left, so turn right (clockwise)
    assert a.dpsi == pytest.approx(-math.pi / 4)


def test_delay_stream_identity_for_k0():
    stream = [(math.radians(d), Action(5, 0, 0.7)) for d in (90, 95, 100, 30)]
    assert [a for a, _ in inject_reaction_delay(stream, 0)] == [a for _, a in stream]


def test_delay_stream_zeroes_yaw_for_k_frames():
    degs = [10, 70, 80, 90, 100, 110, 20, 95, 100]
    stream = [(math.radians(d), Action(5, 1, 0.7)) for d in degs]
    out = list(inject_reaction_delay(stream, 3))
    assert [f for _, f in out] == [False, True, True, True, False, False, False, True, True]
    for (a, f), (_, orig) in zip(out, stream):
        assert (a.dx, a.dz) == (orig.dx, orig.dz)
        assert a.dpsi == (0.0 if f else orig.dpsi)


def test_delay_stream_untouched_without_lateral_hint():
    stream = [(math.radians(d), Action(5, 0, 0.2)) for d in (0, 10, 59, -59, 30)]
    assert all(not f for _, f in inject_reaction_delay(stream, 5))


def test_delay_passes_land_through():
    d = ReactionDelay(2)
    assert d.apply(math.radians(100), LAND) == (LAND, False)


def test_negative_delay_rejected():
    with pytest.raises(ValueError):
        ReactionDelay(-1)


def test_closed_loop_delay_count():
    s = scene_with(start=Pose(0, 0, 10, 0), target=(0.0, -120.0, 5.0))  # target to the right
    traj = record_episode(s, DelayedPolicy(ExpertPolicy(), 3))
    flagged = [f for f in traj.frames if f.delayed]
    assert len(flagged) == 3
    for f in flagged:
        assert is_lateral(f.theta)
        assert f.action_label.triple[2] == 49
    assert traj.status == "landed"


def test_expert_lands_in_open_scene(open_scenes):
    for s in open_scenes[:10]:
        t = record_episode(s, ExpertPolicy())
        assert t.status == "landed"
        assert horizontal_distance(t.final_pose, s.target) <= 3.0 + 5 / 98
        assert t.frames[-1].action_label is LAND and t.frames[-1].land_label


def test_fixed_action_into_wall_collides():
    wall = Obstacle((30.0, 0.0, 30.0), (2.0, 50.0, 30.0))
    t = record_episode(scene_with(wall), FixedActionPolicy(Action(5, 0, 0)))
    assert t.status == "collided"
    assert t.final_pose.x > t.frames[-1].pose.x


def test_single_step_budget_times_out():
    t = record_episode(scene_with(), ExpertPolicy(), max_steps=1)
    assert t.status == "timeout" and len(t.frames) == 1
    with pytest.raises(ValueError):
        record_episode(scene_with(), ExpertPolicy(), max_steps=0)


def test_land_now():
    t = record_episode(scene_with(), LandNowPolicy())
    assert t.status == "landed" and len(t.frames) == 1
    assert t.final_pose == t.frames[0].pose


def test_frame_invariants(expert_trajs):
    for t in expert_trajs:
        lands = [i for i, f in enumerate(t.frames) if f.action_label.is_land]
        assert lands in ([], [len(t.frames) - 1])
        for f in t.frames:
            assert f.hint == fuzzy_hint(f.theta)
            assert f.land_label == f.action_label.is_land
            if not f.land_label:
                assert f.action_label == quantize(f.raw_action)
            assert f.prompt.startswith("<image>")


def test_token_replay_is_exact(expert_trajs, cluttered_scenes):
    for t, s in zip(expert_trajs, cluttered_scenes):
        for a, b in zip(t.frames, t.frames[1:]):
            assert step(s, a.pose, dequantize(a.action_label)).new_pose == b.pose


def test_expert_turn_bound(expert_trajs):
    for t in expert_trajs:
        for f in t.frames:
            if not f.land_label:
                assert abs(dequantize(f.action_label).dpsi) <= math.pi / 4 + 2 * math.pi / 98


def test_distance_shrinks_once_aligned(open_scenes):
    for s in open_scenes:
        t = record_episode(s, ExpertPolicy())
        d = [horizontal_distance(f.pose, s.target) for f in t.frames]
        first = next(i for i, f in enumerate(t.frames) if abs(f.theta) <= math.radians(15))
        for a, b in zip(d[first:], d[first + 1:]):
            # one forward token of slack once hovering over the target
            assert b <= a + 5 / 98


def test_jsonl_round_trip(expert_trajs):
    text = dumps_trajectories(expert_trajs[:5])
    assert text.count("\n") == 5
    back = loads_trajectories(text)
    assert back == list(expert_trajs[:5])
    assert dumps_trajectories(back) == text


def test_jsonl_rejects_unknown_version(expert_trajs):
    import json

    d = expert_trajs[0].to_dict()
    d["format_version"] = 99
    with pytest.raises(ValueError):
        loads_trajectories(json.dumps(d))


def test_unquantized_execution(open_scenes):
    t = record_episode(open_scenes[0], ExpertPolicy(), through_codec=False)
    assert t.status == "landed"
    a, b = t.frames[0], t.frames[1]
    assert step(open_scenes[0], a.pose, a.raw_action).new_pose == b.pose
