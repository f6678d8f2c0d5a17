#!/usr/bin/env python
# coding: utf8

"""Display fooling images next to their base pattern."""

# pylint: disable=import-error
import pygame
# pylint: enable=import-error

import numpy as np

from foobar_lab.dataset import quantize
from foobar_lab.examples import toy_attack

SCALE = 4
MARGIN = 8


def image_surface(pixels, shape):
    """Gray level surface of a flat image, scaled by ``SCALE``."""
    gray = quantize(pixels).reshape(shape).T
    surface = pygame.surfarray.make_surface(np.stack([gray] * 3, axis=-1))
    return pygame.transform.scale(surface, (shape[1] * SCALE, shape[0] * SCALE))


def draw_gallery(screen, results):
    """Blit one row per fooling instance: pattern left, solution right."""
    height, width = 28 * SCALE, 28 * SCALE
    screen.fill((30, 30, 30))
    for row, (spec, outcome) in enumerate(results):
        top = MARGIN + row * (height + MARGIN)
        if spec.pattern is not None:
            screen.blit(image_surface(spec.pattern.pixels, spec.pattern.shape),
                        (MARGIN, top))
        if outcome.is_feasible:
            screen.blit(image_surface(outcome.pixels, (28, 28)),
                        (2 * MARGIN + width, top))
    return screen.get_rect()


def main(test=False):
    """ Main program.

    :param test: Indicate function is being tested
    :type test: bool
    :return: None
    """
    _, results, _ = toy_attack.run(test)
    # Keep a screen sized gallery
    results = results[:6]

    # Init pygame
    pygame.init()
    size = (3 * MARGIN + 2 * 28 * SCALE,
            MARGIN + len(results) * (28 * SCALE + MARGIN))
    screen = pygame.display.set_mode(size)

    # Main loop
    while True:

        for event in pygame.event.get():
            if event.type == pygame.QUIT:
                pygame.quit()
                return

        pygame.display.update(draw_gallery(screen, results))

        # At first loop returns
        if test:
            pygame.quit()
            break


if __name__ == '__main__':
    main()
