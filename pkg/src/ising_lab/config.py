import logging
from pathlib import Path
from typing import Optional, Sequence

from hydra import compose, initialize_config_dir
from omegaconf import DictConfig, OmegaConf

# configs/ lives at the project root, three levels above this file
CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"
CONFIG_NAME = "config"

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'


def load_config(overrides: Optional[Sequence[str]] = None, config_dir: Optional[Path] = None) -> DictConfig:
    """
    Composes the primary config plus its group defaults.

    Overrides use Hydra syntax, e.g. ``["sample_k.C=8", "run.logging_level=DEBUG"]``.
    """
    directory = Path(config_dir) if config_dir else CONFIG_DIR
    with initialize_config_dir(config_dir=str(directory), version_base=None):
        cfg = compose(config_name=CONFIG_NAME, overrides=list(overrides or []))
    return cfg


def configure_logging(level: str = "INFO") -> None:
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)
    logging.basicConfig(level=numeric_level, format=LOG_FORMAT, datefmt=LOG_DATEFMT, force=True)


def config_to_dict(cfg: DictConfig) -> dict:
    return OmegaConf.to_container(cfg, resolve=True)
