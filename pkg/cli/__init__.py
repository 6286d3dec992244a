"""Command-line package"""
from .commands import build_parser, run_cli
