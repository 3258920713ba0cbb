"""Scenario definition: room, APs, users, groups, and run-level knobs.

A scenario file is YAML (JSON is a valid subset) with either explicit users
or a generator block; loading always materializes explicit users, so saving
and re-loading a scenario is the identity.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .channel import (AccessPoint, ChannelEstimate, ReceiverProfile,
                      UserState, csi_error, effective_channel,
                      link_geometry, los_channel_gain)
from .rates import NoiseModel
from .seeding import STREAM_SCENARIO, named_rng

MODE_JOINT = "joint"
MODE_PER_GROUP = "per-group"

DEFAULT_MIN_SEPARATION = 0.3  # m


class ScenarioError(ValueError):
    """Scenario file failed to parse or violates an invariant."""


@dataclass(frozen=True)
class RewardConfig:
    penalty_weight: float = 1.0  # scales the violation penalty
    rate_scale: float = 1.0e9  # bit/s; 1e9 puts rewards in Gbps units

    def __post_init__(self):
        if self.penalty_weight < 0:
            raise ScenarioError("penalty_weight must be >= 0")
        if self.rate_scale <= 0:
            raise ScenarioError("rate_scale must be > 0")


@dataclass
class Scenario:
    room: tuple[float, float, float]  # x, y, ceiling height (m)
    aps: list[AccessPoint]
    receiver: ReceiverProfile
    users: list[UserState]
    groups: dict[int, list[int]]  # group id (== AP id) -> ordered user ids
    noise: NoiseModel
    gamma_min: float
    reward: RewardConfig = field(default_factory=RewardConfig)
    mode: str = MODE_JOINT
    min_separation: float = DEFAULT_MIN_SEPARATION
    action_step: float = 0.05
    enforce_cross_rate_min: bool = True

    # -- derived helpers ----------------------------------------------------

    def ap_by_id(self, ap_id: int) -> AccessPoint:
        for ap in self.aps:
            if ap.id == ap_id:
                return ap
        raise ScenarioError(f"no AP with id {ap_id}")

    def user_by_id(self, user_id: int) -> UserState:
        for user in self.users:
            if user.id == user_id:
                return user
        raise ScenarioError(f"no user with id {user_id}")

    def group_ids(self) -> list[int]:
        return sorted(self.groups)

    def group_sizes(self) -> list[int]:
        return [len(self.groups[g]) for g in self.group_ids()]

    def channel_estimates(self) -> dict[int, ChannelEstimate]:
        """Gain triple per user against its serving AP."""
        out = {}
        for gid in self.group_ids():
            ap = self.ap_by_id(gid)
            for uid in self.groups[gid]:
                user = self.user_by_id(uid)
                out[uid] = _estimate(user, ap, self.receiver)
        return out

    def reference_gain(self) -> float:
        """Largest zenith LOS gain any user could see; used to normalize
        channel features into [0, 1]."""
        best = 0.0
        for gid in self.group_ids():
            ap = self.ap_by_id(gid)
            m = ap.lambertian_order
            for uid in self.groups[gid]:
                user = self.user_by_id(uid)
                g = ((m + 1.0) * self.receiver.pd_area
                     / (2.0 * math.pi * user.height_gap ** 2)
                     * self.receiver.filter_gain
                     * self.receiver.concentrator_gain)
                best = max(best, g)
        return best

    def to_dict(self) -> dict:
        return {
            "room": {"x": self.room[0], "y": self.room[1],
                     "height": self.room[2]},
            "receiver": {
                "pd_area": self.receiver.pd_area,
                "fov_deg": math.degrees(self.receiver.fov),
                "filter_gain": self.receiver.filter_gain,
                "concentrator_gain": self.receiver.concentrator_gain,
                "responsivity": self.receiver.responsivity,
            },
            "aps": [
                {
                    "id": ap.id,
                    "position": list(ap.position),
                    "half_power_semi_angle_deg":
                        math.degrees(ap.half_power_semi_angle),
                    "transmit_power": ap.transmit_power,
                    "bandwidth": ap.bandwidth,
                }
                for ap in self.aps
            ],
            "users": [
                {
                    "id": u.id,
                    "position": list(u.position),
                    "location_error": u.location_error,
                    "group": u.group_id,
                    "order": u.order_index,
                }
                for u in self.users
            ],
            "groups": {str(g): list(ids) for g, ids in self.groups.items()},
            "noise": {"sigma_t": self.noise.sigma_t},
            "gamma_min": self.gamma_min,
            "min_separation": self.min_separation,
            "reward": {"penalty_weight": self.reward.penalty_weight,
                       "rate_scale": self.reward.rate_scale},
            "mode": self.mode,
            "action_step": self.action_step,
            "enforce_cross_rate_min": self.enforce_cross_rate_min,
        }

    def content_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def __eq__(self, other) -> bool:
        return isinstance(other, Scenario) and self.to_dict() == other.to_dict()


def _estimate(user: UserState, ap: AccessPoint,
              rx: ReceiverProfile) -> ChannelEstimate:
    _, _, angle = link_geometry(ap.position, user.position)
    true_gain = los_channel_gain(ap, rx, angle, angle, user.access_distance)
    err = csi_error(user, ap, rx)
    return ChannelEstimate(true_gain=true_gain, estimated_gain=true_gain,
                           estimate_error=err,
                           effective_gain=effective_channel(true_gain, err))


def _effective_gain_for(position, location_error: float, ap: AccessPoint,
                        rx: ReceiverProfile) -> float:
    distance, height_gap, angle = link_geometry(ap.position, position)
    gain = los_channel_gain(ap, rx, angle, angle, distance)
    m = ap.lambertian_order
    delta_c = ((m + 1.0) * rx.pd_area / (2.0 * math.pi)
               * rx.filter_gain * rx.concentrator_gain)
    p = (m + 3.0) / 2.0
    err = delta_c * (height_gap ** (m + 1.0)
                     / (distance ** 2 + location_error ** 2) ** p
                     - height_gap ** (m + 1.0) / distance ** (2.0 * p))
    return effective_channel(gain, err) if gain > 0 else 0.0


# -- loading ---------------------------------------------------------------


def load_scenario(path) -> Scenario:
    """Parse, materialize, and validate a scenario file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return scenario_from_dict(raw)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(scenario.to_dict(), fh, sort_keys=True)


def default_scenario_path():
    return resources.files("owcnoma").joinpath("data/default_scenario.yaml")


def load_default_scenario() -> Scenario:
    with resources.as_file(default_scenario_path()) as p:
        return load_scenario(p)


def scenario_from_dict(raw: dict) -> Scenario:
    try:
        room_cfg = raw["room"]
        room = (float(room_cfg["x"]), float(room_cfg["y"]),
                float(room_cfg["height"]))
    except KeyError as exc:
        raise ScenarioError(f"room section missing field {exc}") from exc

    rx = _parse_receiver(raw.get("receiver", {}))
    aps = _parse_aps(raw.get("aps"), room)
    noise = NoiseModel(sigma_t=float(raw.get("noise", {}).get("sigma_t",
                                                              1.1e-6)))
    gamma_min = float(raw.get("gamma_min", 1.0e8))
    min_sep = float(raw.get("min_separation", DEFAULT_MIN_SEPARATION))
    reward_cfg = raw.get("reward", {})
    reward = RewardConfig(
        penalty_weight=float(reward_cfg.get("penalty_weight", 1.0)),
        rate_scale=float(reward_cfg.get("rate_scale", 1.0e9)))
    mode = raw.get("mode", MODE_JOINT)
    if mode not in (MODE_JOINT, MODE_PER_GROUP):
        raise ScenarioError(f"mode must be joint or per-group, got {mode!r}")

    users_cfg = raw.get("users")
    if users_cfg is None:
        raise ScenarioError("scenario needs a users section")
    if isinstance(users_cfg, dict) and "generate" in users_cfg:
        raw_users = _generate_users(users_cfg["generate"], aps, rx, room,
                                    min_sep)
    elif isinstance(users_cfg, list):
        raw_users = _parse_explicit_users(users_cfg)
    else:
        raise ScenarioError("users must be a list or a {generate: ...} block")

    groups_cfg = raw.get("groups", "auto")
    users, groups = _assign_groups(raw_users, groups_cfg, aps, rx)

    scenario = Scenario(
        room=room, aps=aps, receiver=rx, users=users, groups=groups,
        noise=noise, gamma_min=gamma_min, reward=reward, mode=mode,
        min_separation=min_sep,
        action_step=float(raw.get("action_step", 0.05)),
        enforce_cross_rate_min=bool(raw.get("enforce_cross_rate_min", True)))
    validate_scenario(scenario)
    return scenario


def _parse_receiver(cfg: dict) -> ReceiverProfile:
    return ReceiverProfile(
        pd_area=float(cfg.get("pd_area", 1.0e-4)),
        fov=math.radians(float(cfg.get("fov_deg", 40.0))),
        filter_gain=float(cfg.get("filter_gain", 1.0)),
        concentrator_gain=float(cfg.get("concentrator_gain", 1.0)),
        responsivity=float(cfg.get("responsivity", 0.53)))


def _parse_aps(cfg, room) -> list[AccessPoint]:
    if cfg is None:
        raise ScenarioError("scenario needs an aps section")
    if isinstance(cfg, dict) and "grid" in cfg:
        nx = int(cfg["grid"]["nx"])
        ny = int(cfg["grid"]["ny"])
        if nx < 1 or ny < 1:
            raise ScenarioError("AP grid dimensions must be >= 1")
        semi = math.radians(float(cfg.get("half_power_semi_angle_deg", 60.0)))
        power = float(cfg.get("transmit_power", 3.0))
        bw = float(cfg.get("bandwidth", 4.0e8))
        aps = []
        idx = 0
        for j in range(ny):
            for i in range(nx):
                x = room[0] * (2 * i + 1) / (2 * nx)
                y = room[1] * (2 * j + 1) / (2 * ny)
                aps.append(AccessPoint(id=idx, position=(x, y, room[2]),
                                       half_power_semi_angle=semi,
                                       transmit_power=power, bandwidth=bw))
                idx += 1
        return aps
    if isinstance(cfg, list):
        aps = []
        for entry in cfg:
            try:
                aps.append(AccessPoint(
                    id=int(entry["id"]),
                    position=tuple(float(v) for v in entry["position"]),
                    half_power_semi_angle=math.radians(
                        float(entry["half_power_semi_angle_deg"])),
                    transmit_power=float(entry["transmit_power"]),
                    bandwidth=float(entry["bandwidth"])))
            except KeyError as exc:
                raise ScenarioError(f"AP entry missing field {exc}") from exc
        if len({ap.id for ap in aps}) != len(aps):
            raise ScenarioError("duplicate AP ids")
        return aps
    raise ScenarioError("aps must be a list or a {grid: ...} block")


@dataclass
class _RawUser:
    id: int
    position: tuple[float, float, float]
    location_error: float
    group: int | None = None
    order: int | None = None


def _parse_explicit_users(entries: list) -> list[_RawUser]:
    users = []
    for entry in entries:
        try:
            users.append(_RawUser(
                id=int(entry["id"]),
                position=tuple(float(v) for v in entry["position"]),
                location_error=float(entry["location_error"]),
                group=entry.get("group"),
                order=entry.get("order")))
        except KeyError as exc:
            raise ScenarioError(f"user entry missing field {exc}") from exc
    if len({u.id for u in users}) != len(users):
        raise ScenarioError("duplicate user ids")
    return users


def _generate_users(cfg: dict, aps: list[AccessPoint], rx: ReceiverProfile,
                    room, min_sep: float) -> list[_RawUser]:
    """Place users uniformly in a disc under each AP, respecting the FOV,
    the room walls, and the minimum pairwise separation. Location error is
    uniform with an extra penalty near walls, where reflections degrade
    localization."""
    count = int(cfg.get("count", 4 * len(aps)))
    seed = int(cfg.get("seed", 0))
    height = float(cfg.get("height", 1.0))
    radius = float(cfg.get("placement_radius", 1.35))
    err_cfg = cfg.get("location_error", {})
    err_low = float(err_cfg.get("low", 0.05))
    err_high = float(err_cfg.get("high", 0.4))
    wall_margin = float(err_cfg.get("wall_margin", 1.0))
    wall_bonus = float(err_cfg.get("wall_bonus", 0.1))

    if count > 8 * len(aps):
        raise ScenarioError(f"cannot place {count} users under {len(aps)} APs")
    per_group = count // len(aps)
    extra = count % len(aps)

    # keep generated users inside their AP's FOV cone
    for ap in aps:
        eta = ap.position[2] - height
        fov_radius = eta * math.tan(rx.fov)
        if radius >= fov_radius:
            raise ScenarioError(
                f"placement_radius {radius} exceeds the FOV footprint "
                f"{fov_radius:.3f} m of AP {ap.id}")

    rng = named_rng(seed, STREAM_SCENARIO)
    margin = 0.2
    positions: list[tuple[float, float, float]] = []
    users: list[_RawUser] = []
    uid = 0
    for k, ap in enumerate(aps):
        n_here = per_group + (1 if k < extra else 0)
        placed = 0
        attempts = 0
        while placed < n_here:
            attempts += 1
            if attempts > 10_000:
                raise ScenarioError(
                    f"could not place {n_here} users under AP {ap.id} with "
                    f"min separation {min_sep} m")
            r = radius * math.sqrt(rng.uniform())
            theta = rng.uniform(0.0, 2.0 * math.pi)
            x = ap.position[0] + r * math.cos(theta)
            y = ap.position[1] + r * math.sin(theta)
            if not (margin <= x <= room[0] - margin
                    and margin <= y <= room[1] - margin):
                continue
            pos = (x, y, height)
            if any(math.dist(pos, p) < min_sep for p in positions):
                continue
            err = rng.uniform(err_low, err_high)
            wall_dist = min(x, room[0] - x, y, room[1] - y)
            if wall_dist < wall_margin:
                err += wall_bonus
            positions.append(pos)
            users.append(_RawUser(id=uid, position=pos, location_error=err,
                                  group=ap.id))
            uid += 1
            placed += 1
    return users


def _assign_groups(raw_users: list[_RawUser], groups_cfg, aps, rx
                   ) -> tuple[list[UserState], dict[int, list[int]]]:
    by_id = {u.id: u for u in raw_users}

    if isinstance(groups_cfg, dict):
        member_order: dict[int, list[int]] = {
            int(g): [int(u) for u in ids] for g, ids in groups_cfg.items()}
        seen = [u for ids in member_order.values() for u in ids]
        if sorted(seen) != sorted(by_id):
            raise ScenarioError("explicit groups must cover every user "
                                "exactly once")
    else:
        if groups_cfg != "auto":
            raise ScenarioError("groups must be 'auto' or an explicit mapping")
        # explicit per-user group wins; otherwise strongest AP by gain
        assignment: dict[int, list[_RawUser]] = {}
        for u in raw_users:
            if u.group is not None:
                gid = int(u.group)
            else:
                gains = [(_effective_gain_for(u.position, u.location_error,
                                              ap, rx), -ap.id)
                         for ap in aps]
                best = max(gains)
                if best[0] <= 0.0:
                    raise ScenarioError(
                        f"user {u.id} is outside the field of view of "
                        f"every AP")
                gid = -best[1]
            assignment.setdefault(gid, []).append(u)
        member_order = {}
        for gid, members in assignment.items():
            ap = next(a for a in aps if a.id == gid)
            if any(m.order is not None for m in members):
                if not all(m.order is not None for m in members):
                    raise ScenarioError(
                        f"group {gid}: mix of explicit and missing orders")
                members.sort(key=lambda m: m.order)
            else:
                members.sort(key=lambda m: (-_effective_gain_for(
                    m.position, m.location_error, ap, rx), m.id))
            member_order[gid] = [m.id for m in members]

    users: list[UserState] = []
    groups: dict[int, list[int]] = {}
    for gid, ids in sorted(member_order.items()):
        ap = next((a for a in aps if a.id == gid), None)
        if ap is None:
            raise ScenarioError(f"group {gid} has no matching AP id")
        groups[gid] = list(ids)
        for order, uid in enumerate(ids, start=1):
            u = by_id[uid]
            distance, height_gap, _ = link_geometry(ap.position, u.position)
            users.append(UserState(
                id=u.id, position=u.position, height_gap=height_gap,
                access_distance=distance, location_error=u.location_error,
                group_id=gid, order_index=order))
    users.sort(key=lambda u: u.id)
    return users, groups


def validate_scenario(scenario: Scenario) -> None:
    room = scenario.room
    if any(v <= 0 for v in room):
        raise ScenarioError("room dimensions must be positive")
    if not scenario.aps:
        raise ScenarioError("scenario needs at least one AP")
    if not scenario.users:
        raise ScenarioError("scenario needs at least one user")

    for ap in scenario.aps:
        x, y, z = ap.position
        if not (0 <= x <= room[0] and 0 <= y <= room[1] and 0 < z <= room[2]):
            raise ScenarioError(f"AP {ap.id} position {ap.position} outside "
                                f"the room")

    # pairwise separation
    for i, a in enumerate(scenario.users):
        for b in scenario.users[i + 1:]:
            d = math.dist(a.position, b.position)
            if d < scenario.min_separation - 1e-12:
                raise ScenarioError(
                    f"users {a.id} and {b.id} are {d:.3f} m apart, below the "
                    f"minimum separation {scenario.min_separation} m")

    # every user must see at least one AP
    for user in scenario.users:
        visible = False
        for ap in scenario.aps:
            _, _, angle = link_geometry(ap.position, user.position)
            if angle <= scenario.receiver.fov:
                visible = True
                break
        if not visible:
            raise ScenarioError(
                f"user {user.id} is outside the field of view of every AP")

    # group structure
    seen: set[int] = set()
    for gid in scenario.group_ids():
        scenario.ap_by_id(gid)
        ids = scenario.groups[gid]
        if not ids:
            raise ScenarioError(f"group {gid} is empty")
        for order, uid in enumerate(ids, start=1):
            user = scenario.user_by_id(uid)
            if user.group_id != gid or user.order_index != order:
                raise ScenarioError(
                    f"user {uid}: group/order fields disagree with the "
                    f"group table")
            if uid in seen:
                raise ScenarioError(f"user {uid} appears in two groups")
            seen.add(uid)
    if seen != {u.id for u in scenario.users}:
        raise ScenarioError("some users are not assigned to any group")

    if scenario.gamma_min < 0:
        raise ScenarioError("gamma_min must be >= 0")
    if scenario.action_step <= 0:
        raise ScenarioError("action_step must be > 0")
