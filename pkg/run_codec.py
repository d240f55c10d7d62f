#!/usr/bin/env python3
"""
Entry point for the codec and its experiment harness.

Usage:
    python run_codec.py encode in.pgm out.lnrmc --qp 28 --mode lnrm --alpha 0.5
    python run_codec.py decode out.lnrmc recon.pgm
    python run_codec.py report corpus/ --variants sse,lnrm:2,lnrm:1,lnrm:0.5

See python run_codec.py --help for all subcommands.
"""

from lnrm_codec.cli import main

if __name__ == "__main__":
    exit(main())
