import numpy as np
import pytest

from bridge_diffusion.src.audio.metrics import snr_db
from bridge_diffusion.src.audio.synthetic import (
    ColouredNoiseGenerator,
    HarmonicSpeechGenerator,
    synthetic_mixtures,
)
from bridge_diffusion.src.common.config import SyntheticConfig


class TestSyntheticMixtures:
    @pytest.fixture()
    def config(self):
        return SyntheticConfig(n_mixtures=3, duration_s=0.5, snr_range_db=(0, 20))

    def test_count_and_length(self, config):
        mixtures = synthetic_mixtures(config, seed=1)

        assert len(mixtures) == 3
        assert all(len(m.mixture) == 8000 for m in mixtures)

    def test_reproducible(self, config):
        first = synthetic_mixtures(config, seed=1)
        second = synthetic_mixtures(config, seed=1)

        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.mixture.samples, b.mixture.samples)

    def test_mixture_prefix_independent_of_count(self, config):
        few = synthetic_mixtures(config, seed=1)
        many = synthetic_mixtures(config.copy(update={"n_mixtures": 5}), seed=1)

        np.testing.assert_array_equal(few[2].clean.samples, many[2].clean.samples)

    def test_snr_in_range_and_realised(self, config):
        for mixture in synthetic_mixtures(config, seed=4):
            assert 0 <= mixture.snr_db <= 20
            assert snr_db(mixture.mixture, mixture.clean) == pytest.approx(
                mixture.snr_db, abs=1e-9,
            )

    @pytest.mark.parametrize(
        "generator_class",
        [
            pytest.param(HarmonicSpeechGenerator, id="Speech"),
            pytest.param(ColouredNoiseGenerator, id="Noise"),
        ],
    )
    def test_peak_normalised(self, generator_class):
        signal = generator_class(16000).generate(np.random.default_rng(0), 4000)

        assert np.max(np.abs(signal.samples)) == pytest.approx(0.5)
