"""The module contains a helper for testing purposes."""

# ruff: noqa: D401

import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np

from xhv.constants import outgassing_to_si
from xhv.geom.builders import PortSpec, build_box, build_cylinder_body
from xhv.geom.scene import Scene
from xhv.mcflow import SimConfig
from xhv.reorder import BRIGHT_TO_DARK, DARK_TO_BRIGHT, REORDER


def box_with_port(side=0.1, port=0.03, outgassing=1e-12, resolution=16):
    """Builds a cube outgassing at ``outgassing`` mbar l s^-1 cm^-2 with a
    black port of diameter ``port`` on its bottom face.
    """
    return build_box((side, side, side), [PortSpec('-z', port, tag='pump_port')], resolution,
                     wall_outgassing=outgassing_to_si(outgassing))


def coin(diameter=0.05, thickness=0.01, resolution=16):
    """Builds a flat cylinder whose top face is tagged 'pump' and the rest
    'coin'.
    """
    body = build_cylinder_body(diameter, thickness, resolution)
    tags = ['pump' if normal[2] > 0.99 else 'coin' for normal in body.normals]
    return Scene(body.vertices, 0.0, 0.0, tags, gas=body.gas)


def scripted_reorders(count, mean_interval, *, slots=20, dark=(3, 9, 14), minimum=30.0,
                      seed=0):
    """Generates a script of ``count`` countable events for synthesize_frames.

    The intervals are the quantiles of an exponential distribution with the
    given mean, shifted so that no interval is shorter than ``minimum``
    seconds. Every tenth event is a dark ion appearing, followed half the
    minimum interval later by its return to the bright state. Returns the
    script, the expected event kinds and the intervals.
    """
    rng = np.random.default_rng(seed)
    quantiles = (np.arange(count) + 0.5) / count
    intervals = minimum - (mean_interval - minimum) * np.log1p(-quantiles)
    rng.shuffle(intervals)

    state = set(dark)
    script = [(0.0, tuple(sorted(state)))]
    kinds = []
    timestamp = 0.0
    for k, interval in enumerate(intervals):
        timestamp += interval
        if k % 10 == 5:
            free = [s for s in range(2, slots - 2) if s not in state]
            added = free[int(rng.integers(len(free)))]
            script.append((timestamp, tuple(sorted(state | {added}))))
            script.append((timestamp + minimum / 2.0, tuple(sorted(state))))
            kinds += [BRIGHT_TO_DARK, DARK_TO_BRIGHT]
            continue

        moves = [(s, s + step) for s in sorted(state) for step in (-1, 1)
                 if 2 <= s + step < slots - 2 and s + step not in state]
        source, target = moves[int(rng.integers(len(moves)))]
        state = (state - {source}) | {target}
        script.append((timestamp, tuple(sorted(state))))
        kinds.append(REORDER)

    return script, kinds, intervals


class Helper(unittest.TestCase):
    """The class represents the base class containing helpers for testing purposes."""

    def setUp(self):
        """Initialize a small simulation configuration and a scratch directory."""
        self._config = SimConfig(particles=4000, seed=1, batch_size=1000)
        self._tmp = Path(tempfile.mkdtemp(prefix='xhv-'))
        self.addCleanup(shutil.rmtree, self._tmp, ignore_errors=True)

    def _check_close(self, got, want, rel):
        """A helper that checks if ``got`` lies within the relative tolerance
        ``rel`` of ``want``.
        """
        self.assertLessEqual(abs(got - want), rel * abs(want),
                             f'{got!r} differs from {want!r} by more than {rel:.3g}')

    def _check_conservation(self, tally):
        """A helper that checks if every injected particle ended in exactly one
        way: absorbed, capped, lost or leaked.
        """
        self.assertEqual(tally.injected, tally.terminated)
        self.assertEqual(tally.injected,
                         int(tally.absorbed.sum()) + tally.capped + tally.lost + tally.leaked)

    def _check_unit_vectors(self, vectors):
        """A helper that checks if all the rows of ``vectors`` have unit length."""
        np.testing.assert_allclose(np.linalg.norm(vectors, axis=-1), 1.0, rtol=1e-12)

    def _check_watertight(self, scene, points=1000, seed=0):
        """A helper that checks if the real facets of ``scene`` enclose its gas
        volume.

        Random points of the bounding box are kept when a random ray from
        them first hits the front side of a facet. A ray cast from every kept
        point must then hit the front side of a facet as well.
        """
        real = ~scene.virtual
        closed = Scene(scene.vertices[real], scene.sticking[real], scene.outgassing[real],
                       [t for t, r in zip(scene.tags, real, strict=True) if r], gas=scene.gas)
        corners = closed.vertices.reshape(-1, 3)
        rng = np.random.default_rng(seed)

        def cast(origins):
            directions = rng.standard_normal(origins.shape)
            directions /= np.linalg.norm(directions, axis=1)[:, None]
            t, facets = closed.cast(origins, directions)
            facing = np.einsum('ij,ij->i', directions, closed.normals[np.maximum(facets, 0)])
            return t, facets, facing

        candidates = rng.uniform(corners.min(axis=0), corners.max(axis=0), (20 * points, 3))
        _, facets, facing = cast(candidates)
        inside = candidates[(facets >= 0) & (facing < 0.0)][:points]
        self.assertEqual(points, len(inside), 'too few points inside the scene')

        t, facets, facing = cast(inside)
        self.assertTrue(np.all(facets >= 0), f'{int((facets < 0).sum())} rays escaped')
        self.assertTrue(np.all(np.isfinite(t)))
        self.assertTrue(np.all(facing < 0.0), 'a ray hit the back side of a facet')

    def _write(self, name, text):
        """A helper that writes ``text`` to the scratch file ``name`` and
        returns its path.
        """
        path = self._tmp / name
        path.write_text(text, encoding='utf-8')
        return path
