"""Closed-loop gate-crossing guidance simulation.

A kinematic point-mass vehicle (first-order velocity tracking, configurable
time constant) is supervised by a state machine:

    SEARCH -> ALIGN -> APPROACH -> CROSS -> DONE

SEARCH sweeps yaw while holding altitude until the gate is detected. ALIGN
nulls the pixel offset of the gate center with lateral/vertical velocity
PIDs and zero forward speed. APPROACH adds forward cruise speed while the
PIDs keep correcting, and hands over to CROSS once the estimated distance
drops below the crossing threshold. CROSS dashes forward open-loop until the
vehicle passes the gate plane (the simulation's stand-in for the range-finder
trigger), which completes the run.

Perception runs at a fixed rate with zero-order hold between updates plus a
configurable off-board latency of whole perception periods; physics
integrates at a higher fixed rate. Synthetic perception noise is calibrated
so the expected absolute distance error matches a configured MAE.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .camera import CameraModel, CameraPose, Intrinsics, Viewport, project_point
from .errors import GeometryError, ValidationError
from .geometry import normalized, yaw_quat
from .mesh import frame_gate_spec
from .scene import GateInstance, visible_corner_count
from .seeding import derive_seed

WORLD_UP = np.array([0.0, 0.0, 1.0])

DEFAULT_SIM_INTRINSICS = Intrinsics(fx=300.0, fy=300.0, cx=320.0, cy=240.0)
DEFAULT_SIM_VIEWPORT = Viewport(640, 480)
DEFAULT_DISTANCE_MAE = 0.660
DEFAULT_PIXEL_SIGMA = 5.0

PROTOCOL_SPEEDS = (0.5, 1.0, 2.0)
PROTOCOL_STARTS = ("left", "centre", "right")
START_OFFSETS = {"left": 3.0, "centre": 0.0, "right": -3.0}


class GuidancePhase(enum.Enum):
    SEARCH = "search"
    ALIGN = "align"
    APPROACH = "approach"
    CROSS = "cross"
    DONE = "done"


PHASE_ORDER = {phase: i for i, phase in enumerate(GuidancePhase)}


@dataclass(eq=False)
class VehicleState:
    position: np.ndarray
    velocity: np.ndarray
    yaw: float


@dataclass(frozen=True, eq=False)
class PerceptionSample:
    center: np.ndarray  # noisy pixel position of the gate center
    distance: float     # noisy estimated distance, meters
    detected: bool


@dataclass(frozen=True)
class PerceptionNoise:
    pixel_sigma: float = 0.0
    distance_mae: float = 0.0


def calibrated_noise(distance_mae: float = DEFAULT_DISTANCE_MAE,
                     pixel_sigma: float = DEFAULT_PIXEL_SIGMA) -> PerceptionNoise:
    return PerceptionNoise(pixel_sigma=pixel_sigma, distance_mae=distance_mae)


def distance_noise_sigma(mae: float) -> float:
    """Gaussian sigma whose expected absolute value equals `mae`."""
    return mae * math.sqrt(math.pi / 2.0)


@dataclass(eq=False)
class PidController:
    """Discrete PID with clamped integral (anti-windup) and output limits."""

    kp: float
    ki: float
    kd: float
    output_limit: float = math.inf
    integral_limit: float = 1.0
    integral: float = 0.0
    prev_error: float | None = None

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None


def pid_step(pid: PidController, error: float, dt: float) -> float:
    """One controller update; returns the clamped command."""
    if dt <= 0:
        raise ValidationError("pid_step needs dt > 0")
    pid.integral = float(np.clip(pid.integral + error * dt, -pid.integral_limit, pid.integral_limit))
    derivative = 0.0 if pid.prev_error is None else (error - pid.prev_error) / dt
    pid.prev_error = error
    out = pid.kp * error + pid.ki * pid.integral + pid.kd * derivative
    return float(np.clip(out, -pid.output_limit, pid.output_limit))


@dataclass(frozen=True)
class GuidanceConfig:
    """Tunable guidance parameters (all unpublished values are config surface)."""

    cruise: float
    cross_distance: float = 1.5
    cross_overshoot: float = 0.5
    align_tolerance_px: float = 120.0
    search_yaw_rate: float = 0.8
    altitude: float | None = None          # held until APPROACH; None = start altitude
    pid_gains: tuple[float, float, float] = (3.0, 0.05, 0.1)
    altitude_gains: tuple[float, float, float] = (1.2, 0.0, 0.0)
    perception_hz: float = 20.0
    physics_hz: float = 100.0
    tracking_tau: float = 0.3
    command_delay: int = 1                 # off-board latency, in perception periods
    timeout: float = 60.0
    intrinsics: Intrinsics = DEFAULT_SIM_INTRINSICS
    viewport: Viewport = DEFAULT_SIM_VIEWPORT

    def __post_init__(self):
        if self.cruise <= 0:
            raise ValidationError("cruise speed must be positive")


class GuidanceController:
    """State machine plus the per-axis velocity PIDs it supervises."""

    def __init__(self, cfg: GuidanceConfig):
        self.cfg = cfg
        self.phase = GuidancePhase.SEARCH
        kp, ki, kd = cfg.pid_gains
        self.pid_lateral = PidController(kp, ki, kd, output_limit=cfg.cruise)
        self.pid_vertical = PidController(kp, ki, kd, output_limit=cfg.cruise)
        akp, aki, akd = cfg.altitude_gains
        self.pid_altitude = PidController(akp, aki, akd, output_limit=cfg.cruise)
        self.altitude_setpoint = cfg.altitude


def _body_to_world(yaw: float, body: np.ndarray) -> np.ndarray:
    """Body (forward, left, up) command to world frame for a given yaw."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([c * body[0] - s * body[1], s * body[0] + c * body[1], body[2]])


def _clamped(command: np.ndarray, cruise: float) -> np.ndarray:
    speed = float(np.linalg.norm(command))
    if speed > cruise:
        return command * (cruise / speed)
    return command


def guidance_step(ctrl: GuidanceController, vehicle: VehicleState,
                  sample: PerceptionSample, dt: float,
                  plane_crossed: bool = False) -> tuple[np.ndarray, float, GuidancePhase]:
    """Advance the state machine one perception tick.

    Returns (world-frame velocity command bounded by the cruise speed,
    yaw-rate command, phase after the step). `plane_crossed` mirrors the
    range-finder trigger and completes the CROSS phase.
    """
    cfg = ctrl.cfg
    if ctrl.altitude_setpoint is None:
        ctrl.altitude_setpoint = float(vehicle.position[2])
    body = np.zeros(3)

    if ctrl.phase is GuidancePhase.CROSS and plane_crossed:
        ctrl.phase = GuidancePhase.DONE
    if ctrl.phase is GuidancePhase.DONE:
        return np.zeros(3), 0.0, ctrl.phase

    if ctrl.phase is GuidancePhase.SEARCH:
        if sample.detected:
            ctrl.phase = GuidancePhase.ALIGN
        else:
            body[2] = pid_step(ctrl.pid_altitude,
                               ctrl.altitude_setpoint - float(vehicle.position[2]), dt)
            command = _clamped(_body_to_world(vehicle.yaw, body), cfg.cruise)
            return command, cfg.search_yaw_rate, ctrl.phase

    pixel_dx = pixel_dy = 0.0
    if sample.detected:
        pixel_dx = float(sample.center[0]) - cfg.intrinsics.cx
        pixel_dy = float(sample.center[1]) - cfg.intrinsics.cy

    if ctrl.phase is GuidancePhase.ALIGN:
        centered = (
            sample.detected
            and abs(pixel_dx) <= cfg.align_tolerance_px
            and abs(pixel_dy) <= cfg.align_tolerance_px
        )
        if centered:
            ctrl.phase = GuidancePhase.APPROACH
        else:
            if sample.detected:
                body[1] = -pid_step(ctrl.pid_lateral, pixel_dx / cfg.intrinsics.fx, dt)
                body[2] = pid_step(ctrl.pid_vertical, -pixel_dy / cfg.intrinsics.fy, dt)
            command = _clamped(_body_to_world(vehicle.yaw, body), cfg.cruise)
            return command, 0.0, ctrl.phase

    if ctrl.phase is GuidancePhase.APPROACH:
        if sample.detected and sample.distance < cfg.cross_distance:
            ctrl.phase = GuidancePhase.CROSS
        else:
            body[0] = cfg.cruise
            if sample.detected:
                body[1] = -pid_step(ctrl.pid_lateral, pixel_dx / cfg.intrinsics.fx, dt)
                body[2] = pid_step(ctrl.pid_vertical, -pixel_dy / cfg.intrinsics.fy, dt)
            command = _clamped(_body_to_world(vehicle.yaw, body), cfg.cruise)
            return command, 0.0, ctrl.phase

    # CROSS: open-loop forward dash; ends on gate-plane passage or timeout
    body[0] = cfg.cruise
    command = _clamped(_body_to_world(vehicle.yaw, body), cfg.cruise)
    return command, 0.0, ctrl.phase


def perceive(cam: CameraModel, gate: GateInstance, noise: PerceptionNoise,
             rng: np.random.Generator) -> PerceptionSample:
    """Synthetic perception: true projection plus calibrated noise.

    Detected only while the gate center is in front and at least three panel
    corners are inside the frame (the same rule the dataset target uses).
    """
    try:
        proj = project_point(cam, gate.world_center)
    except GeometryError:
        return PerceptionSample(np.array([math.nan, math.nan]), math.inf, False)
    detected = bool(proj.in_front and visible_corner_count(cam, gate) >= 3)
    center = proj.pixel + rng.normal(0.0, noise.pixel_sigma, size=2)
    true_distance = float(np.linalg.norm(gate.world_center - cam.eye))
    distance = true_distance + float(rng.normal(0.0, distance_noise_sigma(noise.distance_mae)))
    return PerceptionSample(center, distance, detected)


@dataclass(eq=False)
class SimRun:
    """Trajectory, state trace, and gate-plane crossing of one simulated flight."""

    trajectory: np.ndarray                 # (N, 7): t, x, y, z, vx, vy, vz
    states: list[tuple[float, GuidancePhase]]
    crossing_offset: np.ndarray | None     # (lateral, vertical) meters in the gate plane
    success: bool
    cruise: float
    start_label: str
    seed: int

    @property
    def crossing_error(self) -> float | None:
        if self.crossing_offset is None:
            return None
        return float(np.linalg.norm(self.crossing_offset))


def gate_plane_axes(gate: GateInstance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(normal, lateral, vertical) world-frame axes of the gate plane.

    `lateral` equals "left" as seen by a vehicle facing the gate front;
    `vertical` points up for upright gates.
    """
    normal = gate.world_normal
    lateral = normalized(np.cross(normal, WORLD_UP))
    vertical = np.cross(lateral, normal)
    return normal, lateral, vertical


def simulate_run(gate: GateInstance, start, cruise: float, seed: int, *,
                 noise: PerceptionNoise = PerceptionNoise(),
                 cfg: GuidanceConfig | None = None,
                 start_label: str = "custom",
                 initial_yaw: float | None = None) -> SimRun:
    """Fly one closed-loop run from `start` toward `gate` at `cruise` m/s.

    The vehicle starts at rest heading down-course (perpendicular to the gate
    plane, the gate itself possibly off to a side), so lateral starts are
    corrected en route like the flight experiments. The run ends when the
    state machine reaches DONE (gate plane crossed) or the timeout elapses;
    success means the recorded plane crossing lies inside the gate aperture.
    """
    if cruise <= 0:
        raise ValidationError("cruise speed must be positive")
    cfg = replace(cfg, cruise=cruise) if cfg is not None else GuidanceConfig(cruise=cruise)
    rng = np.random.default_rng(seed)

    gate_center = gate.world_center
    normal, lateral, vertical = gate_plane_axes(gate)
    position = np.asarray(start, dtype=np.float64).copy()
    if initial_yaw is None:
        initial_yaw = math.atan2(-normal[1], -normal[0])
    vehicle = VehicleState(position, np.zeros(3), float(initial_yaw))

    ctrl = GuidanceController(cfg)
    dt = 1.0 / cfg.physics_hz
    ticks = max(1, int(round(cfg.physics_hz / cfg.perception_hz)))
    decay = math.exp(-dt / cfg.tracking_tau)
    delay_queue: deque = deque(
        [(np.zeros(3), 0.0)] * max(0, cfg.command_delay), maxlen=None
    )

    command = np.zeros(3)
    yaw_rate = 0.0
    crossing_offset = None
    trajectory = [(0.0, *vehicle.position, *vehicle.velocity)]
    states: list[tuple[float, GuidancePhase]] = [(0.0, ctrl.phase)]

    total_steps = int(round(cfg.timeout * cfg.physics_hz))
    for step in range(total_steps):
        t = step * dt
        if step % ticks == 0:
            cam = CameraModel(
                CameraPose(vehicle.position, yaw_quat(vehicle.yaw)),
                cfg.intrinsics, cfg.viewport,
            )
            sample = perceive(cam, gate, noise, rng)
            new_command, new_rate, phase = guidance_step(
                ctrl, vehicle, sample, ticks * dt,
                plane_crossed=crossing_offset is not None,
            )
            if phase is not states[-1][1]:
                states.append((t, phase))
            delay_queue.append((new_command, new_rate))
            command, yaw_rate = delay_queue.popleft()

        vehicle.velocity = command + (vehicle.velocity - command) * decay
        new_position = vehicle.position + vehicle.velocity * dt
        if crossing_offset is None:
            s_prev = float((vehicle.position - gate_center) @ normal)
            s_new = float((new_position - gate_center) @ normal)
            if s_prev > 0.0 >= s_new:
                frac = s_prev / (s_prev - s_new)
                crossing = vehicle.position + (new_position - vehicle.position) * frac
                rel = crossing - gate_center
                crossing_offset = np.array([float(rel @ lateral), float(rel @ vertical)])
        vehicle.position = new_position
        vehicle.yaw += yaw_rate * dt

        if (step + 1) % ticks == 0 or ctrl.phase is GuidancePhase.DONE:
            trajectory.append((t + dt, *vehicle.position, *vehicle.velocity))
        if ctrl.phase is GuidancePhase.DONE:
            break

    success = (
        crossing_offset is not None
        and abs(crossing_offset[0]) <= gate.spec.width / 2.0
        and abs(crossing_offset[1]) <= gate.spec.height / 2.0
    )
    return SimRun(
        trajectory=np.array(trajectory),
        states=states,
        crossing_offset=crossing_offset,
        success=bool(success),
        cruise=cruise,
        start_label=start_label,
        seed=seed,
    )


def default_protocol_gate() -> GateInstance:
    """1.5 m square frame gate facing the start area."""
    return GateInstance(frame_gate_spec(), position=(6.0, 0.0, 1.2), yaw=math.pi)


def protocol_start(gate: GateInstance, label: str, start_distance: float = 6.0,
                   start_offset: float | None = None) -> np.ndarray:
    """Start point for a protocol cell, offset laterally as seen by the vehicle."""
    if label not in START_OFFSETS and start_offset is None:
        raise ValidationError(f"unknown start label {label!r}")
    normal, lateral, _ = gate_plane_axes(gate)
    offset = START_OFFSETS[label] if start_offset is None else start_offset
    # +offset is to the vehicle's left when facing the gate
    return gate.world_center + start_distance * normal + offset * lateral


def run_protocol(speeds=PROTOCOL_SPEEDS, starts=PROTOCOL_STARTS, runs: int = 5,
                 master_seed: int = 0, noise: PerceptionNoise = PerceptionNoise(),
                 gate: GateInstance | None = None,
                 cfg: GuidanceConfig | None = None,
                 start_distance: float = 6.0) -> list[SimRun]:
    """The crossing experiment sweep: `runs` repetitions per (speed, start)."""
    gate = gate if gate is not None else default_protocol_gate()
    results = []
    index = 0
    for speed in speeds:
        for label in starts:
            start = protocol_start(gate, label, start_distance)
            for _ in range(runs):
                results.append(
                    simulate_run(
                        gate, start, speed, derive_seed(master_seed, index),
                        noise=noise, cfg=cfg, start_label=label,
                    )
                )
                index += 1
    return results


@dataclass(frozen=True)
class CellStats:
    n_runs: int
    n_crossed: int
    success_rate: float
    mean_offset: float  # mean Euclidean crossing error over crossed runs (nan if none)
    max_offset: float
    offsets: tuple[float, ...]


def crossing_stats(runs: list[SimRun]) -> dict[tuple[float, str], CellStats]:
    """Group runs by (cruise, start label) and summarize the crossing errors."""
    if not runs:
        raise ValidationError("crossing_stats needs at least one run")
    groups: dict[tuple[float, str], list[SimRun]] = {}
    for run in runs:
        groups.setdefault((run.cruise, run.start_label), []).append(run)
    stats = {}
    for key, members in groups.items():
        offsets = tuple(r.crossing_error for r in members if r.crossing_error is not None)
        stats[key] = CellStats(
            n_runs=len(members),
            n_crossed=len(offsets),
            success_rate=sum(1 for r in members if r.success) / len(members),
            mean_offset=float(np.mean(offsets)) if offsets else math.nan,
            max_offset=float(np.max(offsets)) if offsets else math.nan,
            offsets=offsets,
        )
    return stats


def format_crossing_table(stats: dict[tuple[float, str], CellStats]) -> str:
    lines = [
        f"{'speed (m/s)':>12} | {'start':>7} | {'runs':>4} | {'crossed':>7}"
        f" | {'success':>7} | {'mean off (m)':>12} | {'max off (m)':>11}"
    ]
    for (speed, label), cell in sorted(stats.items()):
        lines.append(
            f"{speed:>12.2f} | {label:>7} | {cell.n_runs:>4} | {cell.n_crossed:>7}"
            f" | {cell.success_rate:>7.2f} | {cell.mean_offset:>12.3f} | {cell.max_offset:>11.3f}"
        )
    return "\n".join(lines)
