from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabletop.geometry import area_rect, overlap_fraction, rect_from_center, wrap_angle
from tabletop.goals import GoalCondition, InContainerOfColor, OnObjectZone, SubGoal
from tabletop.world import (
    Action,
    COLORS,
    NoSuchObjectError,
    ObjectInstance,
    SceneState,
    WorkspaceConfig,
    WrongKindError,
    color_to_png,
    depth_to_png,
    png_to_color,
    png_to_depth,
    pose_match,
    render,
    step,
    zone_match,
)

CFG = WorkspaceConfig()
EMPTY_GOAL = GoalCondition()


def scene_with(*objs: ObjectInstance) -> SceneState:
    state = SceneState()
    for o in objs:
        state.add(o)
    return state


def block(oid, x, y, color="red", size="big", yaw=0.0, supported_by=None):
    return ObjectInstance(oid, "block", color, size, (x, y, yaw), supported_by)


def test_workspace_raster_must_match_bounds():
    with pytest.raises(ValueError):
        WorkspaceConfig(raster_width=321)
    with pytest.raises(ValueError):
        WorkspaceConfig(bounds_y=0.4)  # 0.4 * 320 != 160


def test_workspace_rejects_bad_probability():
    with pytest.raises(ValueError):
        WorkspaceConfig(drop_probability=1.5)
    with pytest.raises(ValueError):
        WorkspaceConfig(obs_noise_sigma=-0.1)


def test_eleven_colors_and_two_sizes():
    assert len(COLORS) == 11
    with pytest.raises(ValueError):
        ObjectInstance(1, "block", "magenta", "big", (0.5, 0.2, 0.0))
    with pytest.raises(ValueError):
        ObjectInstance(1, "block", "red", "medium", (0.5, 0.2, 0.0))
    with pytest.raises(ValueError):
        ObjectInstance(1, "bowl", "red", "big", (0.5, 0.2, 0.0))


def test_step_translates_block_to_place_pose():
    state = scene_with(block(1, 0.2, 0.2))
    action = Action(pick=(0.2, 0.2, 0.0), place=(0.7, 0.3, 0.5))
    new_state, outcome = step(state, action, EMPTY_GOAL, CFG, np.random.default_rng(0))
    assert outcome.executed and not outcome.drop_event
    assert new_state.object(1).pose == (0.7, 0.3, 0.5)
    # input state untouched
    assert state.object(1).pose == (0.2, 0.2, 0.0)


def test_step_pick_on_empty_table_is_noop():
    state = scene_with(block(1, 0.2, 0.2))
    action = Action(pick=(0.8, 0.4, 0.0), place=(0.5, 0.25, 0.0))
    new_state, outcome = step(state, action, EMPTY_GOAL, CFG, np.random.default_rng(0))
    assert not outcome.executed
    assert outcome.reward == 0.0
    assert new_state.object(1).pose == (0.2, 0.2, 0.0)


def test_step_zones_are_not_graspable():
    zone = ObjectInstance(1, "zone", "green", None, (0.5, 0.25, 0.0))
    state = scene_with(zone)
    action = Action(pick=(0.5, 0.25, 0.0), place=(0.2, 0.2, 0.0))
    new_state, outcome = step(state, action, EMPTY_GOAL, CFG, np.random.default_rng(0))
    assert not outcome.executed
    assert new_state.object(1).pose == (0.5, 0.25, 0.0)


def test_step_out_of_bounds_action_rejected():
    state = scene_with(block(1, 0.2, 0.2))
    with pytest.raises(ValueError):
        step(state, Action((1.2, 0.2, 0.0), (0.5, 0.2, 0.0)), EMPTY_GOAL, CFG,
             np.random.default_rng(0))


def test_step_p1_always_drops():
    # Derived oracle: with p = 1 every transport must report a drop and the
    # object cannot land exactly at the commanded place pose.
    cfg = WorkspaceConfig(drop_probability=1.0)
    rng = np.random.default_rng(42)
    drops = 0
    for _ in range(100):
        state = scene_with(block(1, 0.2, 0.2))
        action = Action(pick=(0.2, 0.2, 0.0), place=(0.8, 0.4, 0.0))
        new_state, outcome = step(state, action, EMPTY_GOAL, cfg, rng)
        drops += outcome.drop_event
        x, y, _ = new_state.object(1).pose
        assert (x, y) != (0.8, 0.4)
        # landing point lies on the pick->place segment
        t = (x - 0.2) / 0.6
        assert 0.0 <= t < 1.0 and abs((y - 0.2) / 0.2 - t) < 1e-9
    assert drops == 100


def test_step_p0_is_pure_function():
    state = scene_with(block(1, 0.2, 0.2), block(2, 0.6, 0.3, color="blue"))
    action = Action(pick=(0.2, 0.2, 0.0), place=(0.6, 0.3, 0.0))
    rng = np.random.default_rng(7)
    before = rng.bit_generator.state
    s1, o1 = step(state, action, EMPTY_GOAL, CFG, rng)
    assert rng.bit_generator.state == before  # no draws at p = 0
    s2, o2 = step(state, action, EMPTY_GOAL, CFG, rng)
    assert s1.to_json() == s2.to_json() and o1 == o2


def test_step_place_snaps_onto_support():
    state = scene_with(block(1, 0.2, 0.2), block(2, 0.6, 0.3, color="blue"))
    action = Action(pick=(0.2, 0.2, 0.0), place=(0.6, 0.3, 0.0))
    new_state, _ = step(state, action, EMPTY_GOAL, CFG, np.random.default_rng(0))
    assert new_state.object(1).supported_by == 2
    assert new_state.z_bottom(1) == pytest.approx(0.04)


def test_step_picking_base_drops_occupants_straight_down():
    base = block(1, 0.3, 0.2)
    top = block(2, 0.3, 0.2, color="blue", size="small", supported_by=1)
    state = scene_with(base, top)
    # pick the exposed corner of the base (outside the small top block)
    action = Action(pick=(0.315, 0.215, 0.0), place=(0.7, 0.4, 0.0))
    new_state, outcome = step(state, action, EMPTY_GOAL, CFG, np.random.default_rng(0))
    assert outcome.executed
    assert new_state.object(1).pose[:2] == (0.7, 0.4)
    assert new_state.object(2).supported_by is None
    assert new_state.object(2).pose[:2] == (0.3, 0.2)


def test_step_reward_is_one_over_n_per_subgoal():
    # A 10-sub-goal goal pays exactly 0.1 per newly satisfied sub-goal.
    from conftest import grid_matching_scene

    scene = grid_matching_scene(10)
    state, goal = scene.state, scene.goal
    rng = np.random.default_rng(0)
    progress = 0.0
    for i in range(10):
        blk = state.object(11 + i)
        bowl = state.object(1 + i)
        action = Action(pick=blk.pose, place=bowl.pose)
        state, outcome = step(state, action, goal, CFG, rng, prior_progress=progress)
        progress += outcome.reward
        assert outcome.reward == pytest.approx(0.1)
        assert outcome.done == (i == 9)
    assert progress == pytest.approx(1.0, abs=1e-9)


def test_step_conservation_and_acyclicity_random_actions():
    rng = np.random.default_rng(3)
    state = scene_with(
        block(1, 0.2, 0.2), block(2, 0.5, 0.3, color="blue"),
        block(3, 0.8, 0.1, color="green", size="small"),
        ObjectInstance(4, "bowl", "yellow", None, (0.5, 0.1, 0.0)),
    )
    cfg = WorkspaceConfig(drop_probability=0.3)
    for _ in range(200):
        action = Action(
            pick=(rng.uniform(0, 1), rng.uniform(0, 0.5), 0.0),
            place=(rng.uniform(0, 1), rng.uniform(0, 0.5), rng.uniform(-3, 3)),
        )
        state, _ = step(state, action, EMPTY_GOAL, cfg, rng)
        assert len(state.objects) == 4
        state.validate(cfg)  # bounds + acyclic support


# ---------------------------------------------------------------------------
# Matching predicates


def test_pose_match_exact_and_tolerance():
    state = scene_with(block(1, 0.5, 0.25))
    assert pose_match(state, 1, (0.5, 0.25, 0.0))
    # derived: direct evaluation of the xy predicate at 9 mm and 11 mm
    assert pose_match(state, 1, (0.5 + 0.009, 0.25, 0.0), tol_pos=0.01)
    assert not pose_match(state, 1, (0.5 + 0.011, 0.25, 0.0), tol_pos=0.01)


def test_pose_match_square_symmetry():
    state = scene_with(block(1, 0.5, 0.25, yaw=math.pi - 1e-9))
    target = (0.5, 0.25, 0.0)
    assert not pose_match(state, 1, target)
    assert pose_match(state, 1, target, yaw_period=math.pi / 2)


def test_pose_match_unknown_object():
    with pytest.raises(NoSuchObjectError):
        pose_match(scene_with(), 9, (0.0, 0.0, 0.0))


def test_zone_match_centered_and_outside():
    zone = ObjectInstance(1, "zone", "green", None, (0.5, 0.25, 0.0))
    state = scene_with(zone, block(2, 0.5, 0.25), block(3, 0.1, 0.1, color="blue"))
    assert zone_match(state, 2, 1)
    assert not zone_match(state, 3, 1)


def test_zone_match_half_overlap_is_strict():
    # Independent oracle: rectangle intersection arithmetic.  A big block
    # centered on the zone's edge overlaps by exactly half its area.
    zone = ObjectInstance(1, "zone", "green", None, (0.5, 0.25, 0.0))
    blk = block(2, 0.5 + 0.06, 0.25)
    state = scene_with(zone, blk)
    inter = overlap_fraction(blk.rect, zone.rect)
    assert inter == pytest.approx(0.5)
    assert not zone_match(state, 2, 1, threshold=0.5)
    assert zone_match(state, 2, 1, threshold=0.49)


def test_zone_match_wrong_kind():
    state = scene_with(block(1, 0.2, 0.2), block(2, 0.4, 0.2, color="blue"))
    with pytest.raises(WrongKindError):
        zone_match(state, 1, 2)


# ---------------------------------------------------------------------------
# Rendering


def test_render_empty_scene_is_background():
    obs = render(SceneState(), CFG)
    assert obs.color.shape == (160, 320, 3)
    assert (obs.depth == 0).all()
    assert len(np.unique(obs.color.reshape(-1, 3), axis=0)) == 1


def test_render_big_block_depth_matches_footprint():
    blk = block(1, 0.5, 0.25)
    obs = render(scene_with(blk), CFG)
    assert obs.depth.max() == pytest.approx(0.04)
    # independent pixel-center mask of the footprint rect
    cols = (np.arange(320) + 0.5) / 320.0
    rows = 0.5 - (np.arange(160) + 0.5) / 320.0
    x0, y0, x1, y1 = blk.rect
    mask = (
        (cols[None, :] >= x0) & (cols[None, :] < x1)
        & (rows[:, None] >= y0) & (rows[:, None] < y1)
    )
    assert obs.depth[mask] == pytest.approx(0.04)
    assert (obs.depth[~mask] == 0).all()


def test_render_stacked_blocks_height():
    state = scene_with(
        block(1, 0.5, 0.25),
        block(2, 0.5, 0.25, color="blue", size="small", supported_by=1),
    )
    obs = render(state, CFG)
    assert obs.depth.max() == pytest.approx(0.06)


def test_render_determinism_and_noise():
    state = scene_with(block(1, 0.3, 0.2), ObjectInstance(2, "bowl", "blue", None, (0.7, 0.3, 0.0)))
    a = render(state, CFG)
    b = render(state, CFG)
    assert (a.color == b.color).all() and (a.depth == b.depth).all()
    n1 = render(state, CFG, rng=np.random.default_rng(5), noisy=True)
    n2 = render(state, CFG, rng=np.random.default_rng(5), noisy=True)
    assert (n1.color == n2.color).all() and (n1.depth == n2.depth).all()
    assert (n1.color != a.color).any()
    assert (n1.depth >= 0).all()


def test_render_noise_toggles():
    state = scene_with(block(1, 0.3, 0.2))
    cfg = WorkspaceConfig(noise_color=False, noise_depth=True)
    noisy = render(state, cfg, rng=np.random.default_rng(1), noisy=True)
    clean = render(state, cfg)
    assert (noisy.color == clean.color).all()
    assert (noisy.depth != clean.depth).any()


def test_png_round_trips():
    state = scene_with(block(1, 0.3, 0.2), ObjectInstance(2, "bowl", "pink", None, (0.7, 0.3, 0.0)))
    obs = render(state, CFG)
    assert (png_to_color(color_to_png(obs.color)) == obs.color).all()
    depth2 = png_to_depth(depth_to_png(obs.depth))
    assert np.abs(depth2 - obs.depth).max() <= 0.0005 + 1e-12  # mm quantization
    assert color_to_png(obs.color) == color_to_png(obs.color)  # byte determinism


# ---------------------------------------------------------------------------
# Geometry helpers


@given(st.floats(-50.0, 50.0, allow_nan=False))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-9)
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)


def test_area_rects_tile_workspace():
    rects = [area_rect(name, 1.0, 0.5) for name in
             ("top-left", "top-right", "bottom-left", "bottom-right")]
    assert sum((r[2] - r[0]) * (r[3] - r[1]) for r in rects) == pytest.approx(0.5)
    for a, b_ in [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3), (1, 2)]:
        inter = overlap_fraction(rects[a], rects[b_]) * (
            (rects[a][2] - rects[a][0]) * (rects[a][3] - rects[a][1])
        )
        assert inter == pytest.approx(0.0)


@settings(max_examples=200)
@given(
    st.floats(0.0, 1.0), st.floats(0.0, 0.5),
    st.floats(0.02, 0.3), st.floats(0.02, 0.3),
)
def test_overlap_fraction_bounds(cx, cy, ex, ey):
    r = rect_from_center(cx, cy, ex, ey)
    assert 0.0 <= overlap_fraction(r, (0.0, 0.0, 1.0, 0.5)) <= 1.0
    assert overlap_fraction(r, r) == pytest.approx(1.0)
