import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    # Data paths
    SCENARIO_DIR: str = os.getenv("SCENARIO_DIR", "data/scenarios")
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "test_output")

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Ray casting: "reject" raises on a non-unit direction, "normalize" rescales it
    RAY_DIRECTION_POLICY: str = os.getenv("RAY_DIRECTION_POLICY", "reject")
    RAY_UNIT_TOLERANCE: float = float(os.getenv("RAY_UNIT_TOLERANCE", "1e-9"))

    # Batch execution
    BATCH_WORKERS: int = int(os.getenv("BATCH_WORKERS", "1"))

    # Plot output
    PLOT_FORMAT: str = os.getenv("PLOT_FORMAT", "svg")

    # HTTP surface
    API_HOST: str = os.getenv("API_HOST", "0.0.0.0")
    API_PORT: int = int(os.getenv("API_PORT", "8000"))

    # Shipped scenarios
    CANONICAL_SCENARIOS = [
        "cluttered_field.yaml",
        "dead_end_corridor.yaml",
        "full_width_wall.yaml",
    ]

    ALGORITHMS = ["eroas", "eroas-nomem", "apf", "dwa"]

    @property
    def normalize_rays(self) -> bool:
        return self.RAY_DIRECTION_POLICY.lower() == "normalize"

    def get_runtime_config(self) -> dict:
        """Get the process-level settings as a plain dictionary."""
        return {
            "scenario_dir": self.SCENARIO_DIR,
            "output_dir": self.OUTPUT_DIR,
            "log_level": self.LOG_LEVEL,
            "ray_direction_policy": self.RAY_DIRECTION_POLICY,
            "batch_workers": self.BATCH_WORKERS,
            "plot_format": self.PLOT_FORMAT,
        }


config = Config()
