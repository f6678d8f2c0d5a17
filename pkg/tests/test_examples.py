#!/usr/bin/env python
# coding: utf8

import os

import pytest

from foobar_lab.examples import toy_attack


def test_example_toy_attack():
    """Run the TOY_ATTACK example."""
    toy_attack.main(test=True)


def test_example_gallery():
    """Run the GALLERY example."""
    pytest.importorskip('pygame')
    os.environ.setdefault('SDL_VIDEODRIVER', 'dummy')
    from foobar_lab.examples import gallery
    gallery.main(test=True)
