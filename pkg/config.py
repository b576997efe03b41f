"""Configuration management for the poc-set memory toolkit."""

import os
from dataclasses import dataclass
from typing import Optional


@dataclass
class DualConfig:
    """Dual graph construction settings."""

    max_tags: int = 20  # |VΓ(P)| can reach 2**max_tags


@dataclass
class WorldConfig:
    """Finite world (atomized state space) settings."""

    compass_atoms: int = 360
    measure_tolerance: float = 1e-9
    measure_positive: bool = False


@dataclass
class UpdateConfig:
    """Excitation propagation settings."""

    default_budget: str = "inf"
    charge_start: float = 1.0


@dataclass
class DeformationConfig:
    """Structural updating settings."""

    weight_tolerance: float = 1e-12
    default_threshold: float = 0.05


@dataclass
class LoggingConfig:
    """Logging settings."""

    level: str = "WARNING"


@dataclass
class SimulationConfig:
    """Observation stream simulation settings."""

    default_seed: int = 0
    default_steps: int = 20


@dataclass
class AppConfig:
    """Main application configuration."""

    dual: Optional[DualConfig] = None
    world: Optional[WorldConfig] = None
    update: Optional[UpdateConfig] = None
    deformation: Optional[DeformationConfig] = None
    logging: Optional[LoggingConfig] = None
    simulation: Optional[SimulationConfig] = None

    def __post_init__(self) -> None:
        if self.dual is None:
            self.dual = DualConfig()
        if self.world is None:
            self.world = WorldConfig()
        if self.update is None:
            self.update = UpdateConfig()
        if self.deformation is None:
            self.deformation = DeformationConfig()
        if self.logging is None:
            self.logging = LoggingConfig()
        if self.simulation is None:
            self.simulation = SimulationConfig()


class ConfigManager:
    """Manages toolkit configuration with environment variable support."""

    @staticmethod
    def load_config() -> AppConfig:
        """Load configuration from environment variables and defaults."""
        return AppConfig(
            dual=DualConfig(
                max_tags=int(os.getenv("POCMEM_MAX_TAGS", "20")),
            ),
            world=WorldConfig(
                compass_atoms=int(os.getenv("POCMEM_COMPASS_ATOMS", "360")),
                measure_tolerance=float(
                    os.getenv("POCMEM_MEASURE_TOLERANCE", "1e-9")
                ),
                measure_positive=os.getenv("POCMEM_MEASURE_POSITIVE", "False").lower()
                == "true",
            ),
            update=UpdateConfig(
                default_budget=os.getenv("POCMEM_BUDGET", "inf"),
                charge_start=float(os.getenv("POCMEM_CHARGE_START", "1.0")),
            ),
            deformation=DeformationConfig(
                weight_tolerance=float(os.getenv("POCMEM_WEIGHT_TOLERANCE", "1e-12")),
                default_threshold=float(os.getenv("POCMEM_THRESHOLD", "0.05")),
            ),
            logging=LoggingConfig(
                level=os.getenv("POCMEM_LOG_LEVEL", "WARNING").upper(),
            ),
            simulation=SimulationConfig(
                default_seed=int(os.getenv("POCMEM_SEED", "0")),
                default_steps=int(os.getenv("POCMEM_STEPS", "20")),
            ),
        )


def max_tags_bound(explicit: Optional[int] = None) -> int:
    """Resolve the dual-graph size guard, preferring an explicit bound."""
    if explicit is not None:
        return explicit
    dual = ConfigManager.load_config().dual
    assert dual is not None
    return dual.max_tags
