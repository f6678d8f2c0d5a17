#!/usr/bin/env python
# coding: utf8

""" Example package. """
