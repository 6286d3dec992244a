"""Utils package"""
from .run_config import RunConfig, load_config
from .checkpoint import load_checkpoint, save_checkpoint
