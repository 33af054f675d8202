"""Domain services for the world module.

Simulation of agent kinematics and assembly of complete episodes. Every
function is pure given its inputs and the random generator it receives.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from modules.world.domain.entities import Agent, Episode, EpisodeLabels, WorldState
from modules.world.domain.exceptions import WorldTooCrowdedError
from modules.world.domain.rasterizer import rasterize_labels
from modules.world.domain.renderer import render_cameras
from modules.world.domain.value_objects import CameraRig, WorldConfig
from shared.seeding import numpy_generator

PLACEMENT_STREAM = 0
MANEUVER_STREAM = 1

# Respawn sides: (axis, sign of the edge, inward heading).
_RESPAWN_SIDES = (
    (0, -1.0, 0.0),
    (0, 1.0, math.pi),
    (1, -1.0, math.pi / 2.0),
    (1, 1.0, -math.pi / 2.0),
)


def placement_rng(config: WorldConfig) -> np.random.Generator:
    """Return the generator used to place agents at step 0."""
    return numpy_generator(config.seed, PLACEMENT_STREAM)


def maneuver_rng(config: WorldConfig) -> np.random.Generator:
    """Return the generator that drives per-step maneuver noise."""
    return numpy_generator(config.seed, MANEUVER_STREAM)


def init_world(config: WorldConfig, rng: np.random.Generator | None = None) -> WorldState:
    """Place agents without overlap.

    Agents are kept apart by their bounding circles plus ``placement_gap``.

    Args:
        config: World configuration.
        rng: Optional generator; defaults to the placement stream of ``config.seed``.

    Returns:
        Initial world state.

    Raises:
        WorldTooCrowdedError: If an agent cannot be placed within the retry budget.
    """
    rng = rng if rng is not None else placement_rng(config)
    lo, hi = config.n_agents
    n_agents = int(rng.integers(lo, hi + 1))
    length, width = config.agent_size
    clearance = math.hypot(length, width) + config.placement_gap
    inset = min(max(length, width) / 2.0, config.half_extent)
    bound = config.half_extent - inset

    positions: list[np.ndarray] = []
    for placed in range(n_agents):
        for _ in range(config.max_placement_retries):
            candidate = rng.uniform(-bound, bound, size=2)
            if all(np.hypot(*(candidate - p)) >= clearance for p in positions):
                positions.append(candidate)
                break
        else:
            raise WorldTooCrowdedError(
                placed=placed, requested=n_agents, retries=config.max_placement_retries
            )

    agents = []
    for index, position in enumerate(positions):
        agents.append(
            Agent(
                id=index + 1,
                position=(float(position[0]), float(position[1])),
                heading=float(rng.uniform(0.0, 2.0 * math.pi)),
                speed=float(rng.uniform(*config.speed_range)),
                size=config.agent_size,
            )
        )
    return WorldState(agents=tuple(agents), step_index=0, next_id=n_agents + 1)


def step_world(
    state: WorldState, rng: np.random.Generator, config: WorldConfig
) -> WorldState:
    """Advance every agent by one step.

    Idle agents start a fixed-duration turn with probability ``p_turn``
    (always at ``fork_step``), resample their speed with probability
    ``p_speed_change``, move along their heading and then apply the active
    turn. Agents beyond ``respawn_margin`` outside the grid reappear on a
    random edge, heading inward, under a fresh id.

    Args:
        state: Current world state.
        rng: Maneuver noise stream.
        config: World configuration.

    Returns:
        The next world state.
    """
    n = len(state.agents)
    # Fixed draw layout per step keeps streams aligned across branches.
    u_turn = rng.random(n)
    u_direction = rng.random(n)
    u_speed = rng.random(n)
    new_speeds = rng.uniform(*config.speed_range, size=n)
    u_side = rng.random(n)
    u_along = rng.random(n)

    forking = config.fork_step is not None and state.step_index == config.fork_step
    limit = config.half_extent + config.respawn_margin
    next_id = state.next_id
    agents: list[Agent] = []

    for i, agent in enumerate(state.agents):
        turn_rate, steps_left = agent.turn_rate, agent.turn_steps_left
        if steps_left == 0:
            turn_rate = 0.0
            if forking or u_turn[i] < config.p_turn:
                direction = 1.0 if u_direction[i] < 0.5 else -1.0
                turn_rate = direction * config.turn_rate
                steps_left = config.turn_duration

        speed = float(new_speeds[i]) if u_speed[i] < config.p_speed_change else agent.speed
        x = agent.position[0] + speed * math.cos(agent.heading)
        y = agent.position[1] + speed * math.sin(agent.heading)
        heading = agent.heading
        if steps_left > 0:
            heading = math.remainder(heading + turn_rate, 2.0 * math.pi)
            steps_left -= 1

        moved = replace(
            agent,
            position=(x, y),
            heading=heading,
            speed=speed,
            turn_rate=turn_rate,
            turn_steps_left=steps_left,
        )
        if abs(x) > limit or abs(y) > limit:
            moved = _respawn(moved, next_id, u_side[i], u_along[i], config)
            next_id += 1
        agents.append(moved)

    return WorldState(agents=tuple(agents), step_index=state.step_index + 1, next_id=next_id)


def _respawn(
    agent: Agent, new_id: int, u_side: float, u_along: float, config: WorldConfig
) -> Agent:
    axis, sign, heading = _RESPAWN_SIDES[min(int(u_side * 4), 3)]
    along = (2.0 * u_along - 1.0) * 0.8 * config.half_extent
    edge = sign * config.half_extent
    position = (edge, along) if axis == 0 else (along, edge)
    return replace(
        agent,
        id=new_id,
        position=position,
        heading=heading,
        turn_rate=0.0,
        turn_steps_left=0,
    )


def simulate(
    config: WorldConfig, rng: np.random.Generator | None = None
) -> list[WorldState]:
    """Return the ``episode_len`` world states of an episode."""
    rng = rng if rng is not None else maneuver_rng(config)
    states = [init_world(config)]
    for _ in range(config.episode_len - 1):
        states.append(step_world(states[-1], rng, config))
    return states


def generate_episode(
    config: WorldConfig,
    rig: CameraRig,
    rng: np.random.Generator | None = None,
) -> Episode:
    """Simulate, render and label one episode.

    Args:
        config: World configuration; ``config.seed`` fixes the episode.
        rig: Camera rig to render with.
        rng: Optional maneuver stream overriding the seed-derived one.

    Returns:
        Episode with images [T, n_cam, 3, h, w] and aligned labels.

    Raises:
        WorldTooCrowdedError: Propagated from placement.
    """
    states = simulate(config, rng)
    frames = [render_cameras(s, rig, config.agent_height).images for s in states]
    labels = EpisodeLabels.stack(
        [
            rasterize_labels(s, states[t + 1] if t + 1 < len(states) else None, config)
            for t, s in enumerate(states)
        ]
    )
    return Episode(images=np.stack(frames), labels=labels, seed=config.seed)
