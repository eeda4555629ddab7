#!/usr/bin/env python3
"""
Wardowski Solver - Main Entry Point

This module provides the main entry point for the wardowski-solver batch
driver, which verifies contraction conditions, derives comparison functions
and runs certified Picard iteration from experiment config files.
"""

# absolute import: this file also runs as a plain script, outside the package
from wardowski_solver.cli import main

if __name__ == "__main__":
    main()
