"""Unit tests for world simulation and episode generation."""

import math
from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from modules.world.domain.entities import Agent, WorldState
from modules.world.domain.exceptions import WorldTooCrowdedError
from modules.world.domain.rasterizer import rasterize_instances
from modules.world.domain.services import generate_episode, init_world, simulate, step_world
from modules.world.domain.value_objects import WorldConfig
from shared.seeding import numpy_generator


def _single_agent_state(position=(0.0, 0.0), heading=0.0, speed=1.0):
    agent = Agent(id=1, position=position, heading=heading, speed=speed, size=(4.0, 2.0))
    return WorldState(agents=(agent,), step_index=0, next_id=2)


class TestInitWorld:
    """Tests for agent placement."""

    def test_no_agents(self):
        """Test that n_agents=0 gives an empty world."""
        state = init_world(WorldConfig(n_agents=(0, 0)))
        assert state.agents == ()
        assert state.next_id == 1

    def test_deterministic(self):
        """Test that the same config and seed give the same state."""
        config = WorldConfig(seed=11)
        assert init_world(config) == init_world(config)

    def test_ids_are_sequential(self):
        """Test that placed agents get ids 1..n."""
        state = init_world(WorldConfig(n_agents=(4, 4), seed=5))
        assert [a.id for a in state.agents] == [1, 2, 3, 4]
        assert state.next_id == 5

    def test_agents_do_not_overlap(self):
        """Test that bounding circles plus the gap never intersect."""
        config = WorldConfig(n_agents=(5, 5), seed=2)
        clearance = math.hypot(*config.agent_size) + config.placement_gap
        state = init_world(config)
        for a, b in combinations(state.agents, 2):
            assert math.dist(a.position, b.position) >= clearance

    def test_too_crowded(self):
        """Test that 30 agents do not fit on an 8x8 grid."""
        config = WorldConfig(grid_cells=8, cell_size=0.5, n_agents=(30, 30))
        # The agents' total footprint alone exceeds the grid area.
        assert 30 * config.agent_size[0] * config.agent_size[1] > config.extent**2
        with pytest.raises(WorldTooCrowdedError) as exc_info:
            init_world(config)
        assert exc_info.value.requested == 30
        assert exc_info.value.placed < 30


class TestStepWorld:
    """Tests for one simulation step."""

    def test_straight_motion(self):
        """Test that an agent without maneuvers moves exactly by its speed."""
        config = WorldConfig(p_turn=0.0, p_speed_change=0.0)
        state = step_world(_single_agent_state(), numpy_generator(0), config)
        agent = state.agents[0]
        assert agent.position == (1.0, 0.0)
        assert agent.heading == 0.0
        assert state.step_index == 1

    def test_certain_turn(self):
        """Test that p_turn=1 starts a turn for every agent."""
        config = WorldConfig(n_agents=(3, 3), p_turn=1.0, seed=4)
        state = step_world(init_world(config), numpy_generator(1), config)
        assert all(agent.turn_rate != 0.0 for agent in state.agents)
        assert all(agent.turn_steps_left == config.turn_duration - 1 for agent in state.agents)

    def test_fork_step_turns_every_idle_agent(self):
        """Test that the fork step forces a turn even with p_turn=0."""
        config = WorldConfig(n_agents=(3, 3), p_turn=0.0, fork_step=0, seed=4)
        state = step_world(init_world(config), numpy_generator(1), config)
        assert all(abs(agent.turn_rate) == config.turn_rate for agent in state.agents)

    def test_turn_changes_heading(self):
        """Test that an active turn rotates the heading by turn_rate per step."""
        config = WorldConfig(p_turn=0.0, p_speed_change=0.0)
        turning = replace(
            _single_agent_state().agents[0], turn_rate=0.25, turn_steps_left=2
        )
        state = WorldState(agents=(turning,), next_id=2)
        rng = numpy_generator(0)
        state = step_world(step_world(state, rng, config), rng, config)
        assert state.agents[0].heading == pytest.approx(0.5)
        assert state.agents[0].turn_steps_left == 0

    def test_agent_leaving_grid_respawns_with_new_id(self):
        """Test that an agent driving off the edge comes back under a fresh id."""
        config = WorldConfig(grid_cells=16, cell_size=1.0, p_turn=0.0, p_speed_change=0.0)
        state = _single_agent_state(position=(7.5, 0.0), heading=0.0, speed=1.0)
        rng = numpy_generator(0)
        for _ in range(5):
            state = step_world(state, rng, config)
        assert state.agent(1) is None
        assert [a.id for a in state.agents] == [2]
        assert state.next_id == 3
        x, y = state.agents[0].position
        assert max(abs(x), abs(y)) <= config.half_extent

    def test_positions_stay_bounded(self):
        """Test that 100 steps never leave the grid plus the respawn margin."""
        config = WorldConfig(grid_cells=16, cell_size=1.0, n_agents=(3, 3), episode_len=101)
        limit = config.half_extent + config.respawn_margin
        for state in simulate(config):
            for agent in state.agents:
                assert abs(agent.position[0]) <= limit
                assert abs(agent.position[1]) <= limit


class TestSimulate:
    """Tests for whole-episode simulation."""

    def test_length_and_step_indices(self, tiny_world):
        """Test that simulate returns episode_len consecutive states."""
        states = simulate(tiny_world)
        assert len(states) == tiny_world.episode_len
        assert [s.step_index for s in states] == list(range(tiny_world.episode_len))

    def test_deterministic(self, tiny_world):
        """Test that simulating twice gives identical trajectories."""
        assert simulate(tiny_world) == simulate(tiny_world)

    def test_ids_never_reused(self):
        """Test that a respawn never hands out an id seen earlier."""
        config = WorldConfig(grid_cells=16, cell_size=1.0, n_agents=(3, 3), episode_len=60)
        retired: set[int] = set()
        previous: set[int] = set()
        for state in simulate(config):
            current = {a.id for a in state.agents}
            assert not current & retired
            retired |= previous - current
            previous = current

    @pytest.mark.parametrize("streams", [(1, 2), (3, 4), (5, 6)])
    def test_maneuver_noise_diverges(self, streams):
        """Test that two maneuver streams from one placement end in different scenes."""
        config = WorldConfig(n_agents=(3, 3), p_turn=0.5, seed=7)
        finals = [
            rasterize_instances(simulate(config, numpy_generator(s))[-1], config) > 0
            for s in streams
        ]
        first_frames = [simulate(config, numpy_generator(s))[0] for s in streams]
        assert first_frames[0] == first_frames[1]
        iou = (finals[0] & finals[1]).sum() / (finals[0] | finals[1]).sum()
        assert iou < 1.0


class TestGenerateEpisode:
    """Tests for episode assembly."""

    def test_shapes(self, tiny_world, tiny_rig):
        """Test image and label layouts."""
        episode = generate_episode(tiny_world, tiny_rig)
        t, n = tiny_world.episode_len, tiny_rig.n_cameras
        assert episode.images.shape == (t, n, 3, 8, 16)
        assert episode.labels.instance_maps.shape == (t, 16, 16)
        assert episode.labels.flows.shape == (t, 2, 16, 16)
        assert episode.seed == tiny_world.seed

    def test_last_step_has_zero_flow(self, tiny_world, tiny_rig):
        """Test that flow at the final step is zero."""
        episode = generate_episode(tiny_world, tiny_rig)
        assert not episode.labels.flows[-1].any()

    def test_images_in_unit_range(self, tiny_world, tiny_rig):
        """Test that rendered pixels lie in [0, 1]."""
        images = generate_episode(tiny_world, tiny_rig).images
        assert images.min() >= 0.0
        assert images.max() <= 1.0

    def test_deterministic(self, tiny_world, tiny_rig):
        """Test that the same seed gives identical arrays."""
        first = generate_episode(tiny_world, tiny_rig)
        second = generate_episode(tiny_world, tiny_rig)
        np.testing.assert_array_equal(first.images, second.images)
        np.testing.assert_array_equal(first.labels.instance_maps, second.labels.instance_maps)
        np.testing.assert_array_equal(first.labels.offsets, second.labels.offsets)
