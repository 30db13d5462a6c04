import hashlib
import os

import numpy as np

from lipkey.harness import load_manifest
from lipkey.image import load_pgm
from lipkey.synth import LABEL_CYCLE, generate_corpus, render_scene


def corpus_digest(directory):
    digest = hashlib.sha256()
    for name in sorted(os.listdir(directory)):
        digest.update(name.encode())
        with open(os.path.join(directory, name), "rb") as fh:
            digest.update(fh.read())
    return digest.hexdigest()


class TestCorpus:
    def test_byte_reproducible(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        generate_corpus(str(a), 9, seed=7)
        generate_corpus(str(b), 9, seed=7)
        assert corpus_digest(a) == corpus_digest(b)

    def test_different_seed_differs(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        generate_corpus(str(a), 6, seed=7)
        generate_corpus(str(b), 6, seed=8)
        assert corpus_digest(a) != corpus_digest(b)

    def test_manifest_loads_and_cycles_labels(self, tmp_path):
        manifest = generate_corpus(str(tmp_path / "c"), 9, seed=1)
        entries = load_manifest(manifest)
        assert len(entries) == 9
        assert [e.label for e in entries] == [LABEL_CYCLE[i % 3] for i in range(9)]

    def test_images_load_and_rois_fit(self, tmp_path):
        manifest = generate_corpus(str(tmp_path / "c"), 6, seed=2)
        for entry in load_manifest(manifest):
            with open(entry.image_path, "rb") as fh:
                img = load_pgm(fh.read())
            assert (img.width, img.height) == (320, 243)
            roi = entry.roi
            assert roi is not None
            assert 0 <= roi.x and roi.x + roi.w <= img.width
            assert 0 <= roi.y and roi.y + roi.h <= img.height


class TestScenes:
    def test_symmetric_mode_mirrors_pixels(self):
        for label in LABEL_CYCLE:
            scene = render_scene(label, np.random.SeedSequence([1, 2]), symmetric=True)
            pixels = scene.image.pixels
            assert np.array_equal(pixels, pixels[:, ::-1])

    def test_default_mode_not_exactly_symmetric(self):
        scene = render_scene("smile", np.random.SeedSequence([3, 4]))
        pixels = scene.image.pixels
        assert not np.array_equal(pixels, pixels[:, ::-1])

    def test_deterministic_given_seed(self):
        a = render_scene("laugh", np.random.SeedSequence([5, 6]))
        b = render_scene("laugh", np.random.SeedSequence([5, 6]))
        assert a.image == b.image and a.roi == b.roi
