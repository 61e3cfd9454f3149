import math
from dataclasses import replace

import numpy as np
import pytest

from gazebot import presets
from gazebot.fusion import fuse_frame
from gazebot.geometry import Pose, compose, invert
from gazebot.hittest import project_zone
from gazebot.servo import VelocityCommand
from gazebot.sim import GRIP_CLOSED, GRIP_OPEN, NoiseConfig, SceneConfig, Simulator


def scene(**noise_kw) -> SceneConfig:
    return presets.table_scene(seed=11, noise=NoiseConfig(**noise_kw))


def still(gripper="none", estop=False):
    return VelocityCommand(np.zeros(3), gripper, estop)


class TestKinematics:
    def test_euler_step(self):
        sim = Simulator(scene())
        x0 = sim.state.ee_pose.position[0]
        sim.step(VelocityCommand([0.1, 0, 0]), dt=0.005)
        assert sim.state.ee_pose.position[0] - x0 == pytest.approx(0.0005)
        assert sim.state.t == pytest.approx(5.0)

    def test_contact_force_spring(self):
        sim = Simulator(scene())
        # pressed 12 mm below the contact margin: 3000 * 0.012 = 36 N
        target_z = sim.scene.table_height + sim.scene.contact.descent_margin - 0.012
        sim.state = replace(
            sim.state, ee_pose=Pose(np.array([0.0, 0.0, target_z]))
        )
        sim.step(still(), dt=0.005)
        assert sim.state.contact_force == pytest.approx(36.0)
        assert sim.state.contact_force > 30.0

    def test_no_force_above_margin(self):
        sim = Simulator(scene())
        sim.step(still(), dt=0.005)
        assert sim.state.contact_force == 0.0


class TestGrasping:
    def descend_to(self, sim, z):
        sim.state = replace(
            sim.state,
            ee_pose=Pose(np.array([sim.state.cube_poses[0].position[0],
                                   sim.state.cube_poses[0].position[1], z])),
        )

    def test_close_near_cube_grasps(self):
        sim = Simulator(scene())
        self.descend_to(sim, 0.012)
        sim.step(still(gripper="close"), dt=0.005)
        assert sim.state.gripper == GRIP_CLOSED
        assert sim.state.held_cube == 0
        assert sim.state.grasp_offset is not None

    def test_close_far_from_cube_grasps_nothing(self):
        sim = Simulator(scene())
        sim.step(still(gripper="close"), dt=0.005)  # still at start height
        assert sim.state.gripper == GRIP_CLOSED
        assert sim.state.held_cube is None

    def test_held_cube_follows_rigidly(self):
        sim = Simulator(scene())
        self.descend_to(sim, 0.012)
        sim.step(still(gripper="close"), dt=0.005)
        offset = sim.state.grasp_offset
        for v in ([0.1, 0, 0], [0, 0.06, 0], [0, 0, 0.08]):
            for _ in range(40):
                sim.step(VelocityCommand(v), dt=0.005)
                held = sim.state.cube_poses[sim.state.held_cube]
                expect = compose(sim.state.ee_pose, offset)
                assert np.array_equal(held.position, expect.position)

    def test_release_snaps_to_table(self):
        sim = Simulator(scene())
        self.descend_to(sim, 0.012)
        sim.step(still(gripper="close"), dt=0.005)
        for _ in range(100):
            sim.step(VelocityCommand([0, 0, 0.08]), dt=0.005)
        sim.step(still(gripper="open"), dt=0.005)
        assert sim.state.gripper == GRIP_OPEN
        assert sim.state.held_cube is None
        cube = sim.state.cube_poses[0]
        assert cube.position[2] == pytest.approx(sim.scene.cube_rest_z())

    def test_cubes_never_below_table(self):
        sim = Simulator(scene())
        rest = sim.scene.cube_rest_z()
        for cube in sim.state.cube_poses:
            assert cube.position[2] >= rest


class TestDeterminism:
    def drive(self, seed=3):
        sim = Simulator(presets.table_scene(seed=99, noise=NoiseConfig(
            marker_sigma_t=0.002, marker_sigma_r=math.radians(1), marker_dropout=0.05,
            gaze_sigma=4.0, gaze_drift_rate=2.0)))
        rng = np.random.default_rng(seed)
        trace = []
        for k in range(200):
            v = rng.uniform(-1, 1, 3) * 0.05
            sim.step(VelocityCommand(v), dt=0.005)
            if k % 4 == 0:
                obs = sim.observe_markers()
                gz = sim.synth_gaze([960, 540], sim.state.t)
                trace.append((
                    sim.state.ee_pose.position.tobytes(),
                    tuple((o.marker_id, o.pose.position.tobytes()) for o in obs),
                    (gz.u, gz.v, gz.valid),
                ))
        return trace

    def test_identical_seeds_identical_trajectories(self):
        assert self.drive() == self.drive()


class TestObservations:
    def test_zero_noise_reproduces_analytic_poses(self):
        sim = Simulator(scene())
        head = sim.head_pose_at(0.0)
        obs = sim.observe_markers()
        assert len(obs) == len(sim.scene.markers)
        by_id = {o.marker_id: o for o in obs}
        for placement in sim.scene.markers:
            world = sim.marker_world_pose(placement)
            expect = compose(invert(head), world)
            got = by_id[placement.marker_id].pose
            assert np.linalg.norm(got.position - expect.position) <= 1e-12
            assert got.rotation.angle_to(expect.rotation) <= 1e-12

    def test_full_dropout_empty(self):
        sim = Simulator(scene(marker_dropout=1.0))
        assert sim.observe_markers() == []

    def test_translation_noise_statistics(self):
        sim = Simulator(scene(marker_sigma_t=0.002))
        head = sim.head_pose_at(0.0)
        errors = []
        for _ in range(1000):
            obs = sim.observe_markers()
            for placement, o in zip(sim.scene.markers, obs):
                truth = compose(invert(head), sim.marker_world_pose(placement))
                errors.extend(o.pose.position - truth.position)
        std = float(np.std(errors))
        assert 0.0018 <= std <= 0.0022

    def test_facing_away_invisible(self):
        from gazebot.geometry import Quaternion
        from gazebot.sim import MarkerPlacement

        base = scene()
        flipped = tuple(
            MarkerPlacement(
                m.marker_id,
                m.frame,
                Pose(m.pose.position, Quaternion.from_axis_angle([1, 0, 0], math.pi).multiply(m.pose.rotation)),
            )
            for m in base.markers
        )
        sim = Simulator(replace(base, markers=flipped))
        assert sim.observe_markers() == []

    def test_toggling_gaze_noise_leaves_marker_stream(self):
        a = Simulator(presets.table_scene(seed=5, noise=NoiseConfig(marker_sigma_t=0.002)))
        b = Simulator(presets.table_scene(seed=5, noise=NoiseConfig(marker_sigma_t=0.002, gaze_sigma=10.0)))
        for _ in range(20):
            oa, ob = a.observe_markers(), b.observe_markers()
            a.synth_gaze([0, 0], a.state.t)
            b.synth_gaze([0, 0], b.state.t)
            for x, y in zip(oa, ob):
                assert np.array_equal(x.pose.position, y.pose.position)


class TestGaze:
    def test_exact_without_noise(self):
        sim = Simulator(scene())
        g = sim.synth_gaze([123.0, 456.0], 0.0)
        assert (g.u, g.v, g.valid) == (123.0, 456.0, True)

    def test_blink_window_invalid(self):
        sim = Simulator(scene(blinks=((100.0, 200.0),)))
        assert sim.synth_gaze([0, 0], 50.0).valid
        assert not sim.synth_gaze([0, 0], 150.0).valid
        assert sim.synth_gaze([0, 0], 250.0).valid

    def test_drift_random_walk_scaling(self):
        # bias magnitude after t seconds should be on the order of rate*sqrt(t)
        rate, seconds = 2.0, 60.0
        finals = []
        for seed in range(30):
            sim = Simulator(presets.table_scene(seed=seed, noise=NoiseConfig(gaze_drift_rate=rate)))
            for k in range(int(seconds * 50)):
                sim.synth_gaze([960, 540], k * 20.0)
            finals.append(sim._gaze_drift.copy())
        per_axis_std = float(np.std(np.concatenate(finals)))
        expect = rate * math.sqrt(seconds)
        assert 0.6 * expect <= per_axis_std <= 1.4 * expect

    def test_recalibrate_zeroes_drift_and_counts(self):
        sim = Simulator(scene(gaze_drift_rate=5.0))
        for k in range(500):
            sim.synth_gaze([960, 540], k * 20.0)
        assert np.linalg.norm(sim._gaze_drift) > 0
        sim.recalibrate()
        assert sim.state.recalibrations == 1
        g = sim.synth_gaze([960, 540], 10_000.0)
        # next sample only carries the fresh one-step walk, not 10 s of drift
        assert abs(g.u - 960.0) < 5.0

    def test_recalibrate_during_estop_allowed(self):
        sim = Simulator(scene())
        sim.step(still(estop=True), dt=0.005)
        sim.recalibrate()
        assert sim.state.recalibrations == 1
        assert sim.state.estop


class TestSceneConfig:
    def test_json_round_trip(self):
        base = presets.table_scene(seed=42)
        restored = SceneConfig.from_dict(base.to_dict())
        assert restored.to_dict() == base.to_dict()

    def test_cube_outside_cage_rejected(self):
        base = presets.table_scene()
        with pytest.raises(ValueError, match="outside the cage"):
            replace(base, cube_positions=np.array([[5.0, 0.0]]))

    def test_square_outside_sheet_rejected(self):
        from gazebot.sim import Stencil

        with pytest.raises(ValueError, match="inside the sheet"):
            Stencil(sheet_center=[0, 0], sheet_size=[0.3, 0.2], square_edge=0.036,
                    squares=[[0.2, 0.0]])


class TestBundledLayout:
    """Geometric sanity of the shipped scene: everything the oracle needs to
    see is visible and the zones never overlap from the start pose."""

    def test_all_markers_visible_at_start(self):
        sim = Simulator(scene())
        seen = {o.marker_id for o in sim.observe_markers()}
        assert seen == {m.marker_id for m in sim.scene.markers}

    def test_all_zones_visible_and_disjoint_at_start(self):
        sim = Simulator(scene())
        registry = presets.table_registry()
        fused = fuse_frame(sim.observe_markers(), registry)
        assert len(fused) == len(registry.buttons)
        zones = [project_zone(f, registry.corners_of(f.button_id), sim.scene.camera) for f in fused]
        assert all(z.visible for z in zones)
        for i, a in enumerate(zones):
            for b in zones[i + 1:]:
                amin, amax = a.quad.min(axis=0), a.quad.max(axis=0)
                bmin, bmax = b.quad.min(axis=0), b.quad.max(axis=0)
                overlap = np.all(amax >= bmin) and np.all(bmax >= amin)
                assert not overlap, f"{a.button_id} overlaps {b.button_id}"

    def test_zones_visible_across_workspace_extremes(self):
        registry = presets.table_registry()
        for x, y, z in [(-0.22, -0.15, 0.16), (0.22, 0.15, 0.16), (0.22, -0.15, 0.012),
                        (-0.22, 0.15, 0.012), (0.105, 0.04, 0.012), (0.0, 0.0, 0.25)]:
            sim = Simulator(scene())
            sim.state = replace(sim.state, ee_pose=Pose(np.array([x, y, z])))
            fused = fuse_frame(sim.observe_markers(), registry)
            zones = {f.button_id: project_zone(f, registry.corners_of(f.button_id), sim.scene.camera)
                     for f in fused}
            assert set(zones) == set(registry.buttons), (x, y, z)
            assert all(zone.visible for zone in zones.values()), (x, y, z)
