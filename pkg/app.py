#!/usr/bin/env python3
"""
Entry point for the correspondence matcher CLI.
Run with: python3 app.py match scene.mcorr scene.mres
"""
from icgtm import create_cli

cli = create_cli()

if __name__ == '__main__':
    cli()
