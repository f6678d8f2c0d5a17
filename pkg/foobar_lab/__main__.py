#!/usr/bin/env python
# coding: utf8

"""Entry point of ``python -m foobar_lab``."""

import sys

from .cli import main

sys.exit(main())
