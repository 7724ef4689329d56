"""Scenario configuration: JSON schema, solar profiles and built-in layouts.

A scenario file is a JSON object with exactly the top-level keys
``floor``, ``rooms``, ``vlc_aps``, ``wifi_aps``, ``receiver``,
``illumination``, ``solar_profile`` and ``users``.  Unknown keys are
rejected at every level.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator


class ConfigError(ValueError):
    """Scenario or solar-profile input failed validation."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FloorConfig(_Strict):
    width: float = Field(18.0, gt=0)
    depth: float = Field(18.0, gt=0)
    height: float = Field(3.0, gt=0)
    desk_height: float = Field(0.85, ge=0)

    @model_validator(mode="after")
    def _desk_below_ceiling(self):
        if self.desk_height >= self.height:
            raise ValueError("desk_height must be below the ceiling height")
        return self


class RoomConfig(_Strict):
    id: str
    x: float
    y: float
    width: float = Field(3.0, gt=0)
    depth: float = Field(3.0, gt=0)
    kind: Literal["internal", "external"]
    window: Optional[Literal["north", "south", "east", "west"]] = None

    @model_validator(mode="after")
    def _window_only_outside(self):
        if self.kind == "external" and self.window is None:
            raise ValueError(f"external room {self.id!r} needs a window wall")
        if self.kind == "internal" and self.window is not None:
            raise ValueError(f"internal room {self.id!r} cannot have a window")
        return self


class VlcConfig(_Strict):
    per_room: Literal[1, 4] = 4
    p_on: float = Field(15.0, gt=0)
    eta_dc: float = Field(0.1, gt=0, le=1)
    eta_ac: float = Field(0.09, gt=0, le=1)
    # lm per optical watt; 150 lm per electrical watt at eta_dc = 0.1
    efficacy: float = Field(1500.0, gt=0)
    semi_angle: float = Field(30.0, gt=0, lt=90)
    bandwidth: float = Field(100e6, gt=0)

    @model_validator(mode="after")
    def _ac_below_dc(self):
        if self.eta_ac > self.eta_dc:
            raise ValueError("eta_ac must not exceed eta_dc")
        return self


class WifiConfig(_Strict):
    positions: list[tuple[float, float, float]] = Field(
        default_factory=lambda: [(0.0, 0.0, 12.0), (18.0, 0.0, 12.0),
                                 (0.0, 18.0, 12.0), (18.0, 18.0, 12.0)])
    p_on: float = Field(10.0, ge=0)
    p_max: float = Field(14.0, gt=0)
    bandwidth_per_user: float = Field(2e6, gt=0)
    wavelength: float = Field(0.125, gt=0)
    floor_attenuation_db: float = Field(-30.0, le=0)
    noise_dbm: float = -90.0
    eta: float = Field(0.1, gt=0, le=1)


class ReceiverConfig(_Strict):
    detector_area: float = Field(1.0e-4, gt=0)
    oe_responsivity: float = Field(0.54, gt=0)
    optical_filter_gain: float = Field(1.0, gt=0)
    lens_refractive_index: float = Field(1.5, gt=0)
    fov: float = Field(90.0, gt=0, le=90)
    noise_power: float = Field(4.7e-14, gt=0)


class DaylightConfig(_Strict):
    profile: Literal["uniform", "linear"] = "uniform"
    external: float = Field(3.0, ge=0)  # percent
    near_window: float = Field(5.0, ge=0)
    far_wall: float = Field(1.0, ge=0)


class IlluminationConfig(_Strict):
    target_lux: float = Field(300.0, ge=0)
    grid: int = Field(3, ge=1)
    daylight: DaylightConfig = DaylightConfig()


class SolarConfig(_Strict):
    csv: Optional[str] = None
    hourly: Optional[list[float]] = None
    day: float = Field(110.0, ge=0)
    night: float = Field(0.0, ge=0)
    day_start: int = Field(6, ge=0, le=23)
    day_end: int = Field(19, ge=1, le=24)

    @model_validator(mode="after")
    def _one_source(self):
        if self.csv is not None and self.hourly is not None:
            raise ValueError("give either csv or hourly, not both")
        if self.hourly is not None:
            _check_hourly(self.hourly)
        return self


class UsersConfig(_Strict):
    count: int = Field(100, ge=0)
    rate_bps: float = Field(6e6, gt=0)
    placement: Literal["uniform_rooms"] = "uniform_rooms"


class Scenario(_Strict):
    floor: FloorConfig = FloorConfig()
    rooms: list[RoomConfig]
    vlc_aps: VlcConfig = VlcConfig()
    wifi_aps: WifiConfig = WifiConfig()
    receiver: ReceiverConfig = ReceiverConfig()
    illumination: IlluminationConfig = IlluminationConfig()
    solar_profile: SolarConfig = SolarConfig()
    users: UsersConfig = UsersConfig()

    @model_validator(mode="after")
    def _rooms_fit(self):
        ids = [r.id for r in self.rooms]
        if len(set(ids)) != len(ids):
            raise ValueError("room ids must be unique")
        for r in self.rooms:
            if r.x < 0 or r.y < 0 or r.x + r.width > self.floor.width + 1e-9 \
                    or r.y + r.depth > self.floor.depth + 1e-9:
                raise ValueError(f"room {r.id!r} lies outside the floor")
        return self

    def with_updates(self, **sections) -> "Scenario":
        """Copy with some sections' fields replaced, e.g. ``users={"count": 8}``."""
        data = self.model_dump()
        for key, patch in sections.items():
            if key not in data:
                raise ConfigError(f"unknown scenario section {key!r}")
            if isinstance(patch, dict):
                data[key].update(patch)
            else:
                data[key] = patch
        return parse_scenario(data)


def _check_hourly(values):
    if len(values) != 24:
        raise ValueError(f"solar profile needs 24 hourly values, got {len(values)}")
    if any(v < 0 for v in values):
        raise ValueError("solar radiation must be >= 0")


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_validation(err)) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"{path}: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_scenario(data)


def dump_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scn.model_dump(), indent=2) + "\n")


def load_solar_csv(path) -> list[float]:
    """Read a ``hour,rsun_wm2`` CSV with one row per hour 0..23."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["hour", "rsun_wm2"]:
                raise ConfigError(f"{path}: header must be 'hour,rsun_wm2'")
            rows = {}
            for row in reader:
                hour = int(row["hour"])
                if not 0 <= hour <= 23 or hour in rows:
                    raise ConfigError(f"{path}: bad or duplicate hour {hour}")
                rows[hour] = float(row["rsun_wm2"])
    except (OSError, ValueError, KeyError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"{path}: {err}") from None
    if sorted(rows) != list(range(24)):
        raise ConfigError(f"{path}: need exactly the 24 hours 0..23")
    values = [rows[h] for h in range(24)]
    try:
        _check_hourly(values)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None
    return values


def hourly_profile(solar: SolarConfig, base_dir=None) -> list[float]:
    if solar.hourly is not None:
        return list(solar.hourly)
    if solar.csv is not None:
        p = Path(solar.csv)
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        return load_solar_csv(p)
    return [solar.day if solar.day_start <= h < solar.day_end else solar.night for h in range(24)]


def rsun_at_hour(solar: SolarConfig, hour: int, base_dir=None) -> float:
    if not 0 <= hour <= 23:
        raise ConfigError(f"hour must be in 0..23, got {hour}")
    return hourly_profile(solar, base_dir)[hour]


# -- built-in layouts ------------------------------------------------------

def office_rooms(cell: float = 3.0, cells: int = 6) -> list[RoomConfig]:
    """Perimeter ring of external rooms, central 2x2 internal rooms.

    Corner cells are stairways and the second ring is the annular corridor,
    so a 6x6 grid yields 16 external and 4 internal rooms.
    """
    rooms = []
    last = cells - 1
    for i in range(cells):
        for j in range(cells):
            on_edge = i in (0, last) or j in (0, last)
            corner = i in (0, last) and j in (0, last)
            inner = 2 <= i <= last - 2 and 2 <= j <= last - 2
            if corner or not (on_edge or inner):
                continue
            if on_edge:
                window = ("west" if i == 0 else "east" if i == last
                          else "south" if j == 0 else "north")
                rooms.append(RoomConfig(id=f"E{i}{j}", x=i * cell, y=j * cell, width=cell,
                                        depth=cell, kind="external", window=window))
            else:
                rooms.append(RoomConfig(id=f"I{i}{j}", x=i * cell, y=j * cell, width=cell,
                                        depth=cell, kind="internal"))
    return rooms


def office_scenario(**overrides) -> Scenario:
    """The 18 m x 18 m floor: 20 rooms, 80 VLC APs, 4 WiFi APs upstairs."""
    scn = Scenario(rooms=office_rooms())
    return scn.with_updates(**overrides) if overrides else scn


def desk_scenario(n_rooms: int = 1, n_wifi: int = 2, n_users: int = 8,
                  rate_bps: float = 6e6, eta_ac: float = 0.09,
                  wifi_height: float = 12.0) -> Scenario:
    """A row of external 3 m rooms with WiFi APs in the upstairs corners.

    Small enough for the exact solvers: ``4 * n_rooms + n_wifi`` APs.
    """
    if not 1 <= n_wifi <= 4:
        raise ConfigError("desk scenario supports 1..4 WiFi APs")
    width = 3.0 * n_rooms
    rooms = [RoomConfig(id=f"D{k}", x=3.0 * k, y=0.0, kind="external", window="south")
             for k in range(n_rooms)]
    corners = [(0.0, 0.0), (width, 3.0), (width, 0.0), (0.0, 3.0)]
    return Scenario(
        floor=FloorConfig(width=width, depth=3.0),
        rooms=rooms,
        vlc_aps=VlcConfig(eta_ac=eta_ac),
        wifi_aps=WifiConfig(positions=[(x, y, wifi_height) for x, y in corners[:n_wifi]]),
        users=UsersConfig(count=n_users, rate_bps=rate_bps),
    )


BUILTIN_SCENARIOS = {"office": office_scenario, "desk": desk_scenario}


def resolve_scenario(spec: str) -> tuple[Scenario, Optional[Path]]:
    """Built-in name or JSON path -> (scenario, directory for relative CSVs)."""
    if spec in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[spec](), None
    path = Path(spec)
    return load_scenario(path), path.parent
