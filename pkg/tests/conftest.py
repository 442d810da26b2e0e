import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from anonvoice.channel import SynthesisChannel, synth_population
from anonvoice.embeddings import EmbeddingDataset
from anonvoice.identity import GeneratorConfig, IdentityGenerator, fit_generator


@dataclass(frozen=True)
class World:
    """Shared fitted assets for the attack and acceptance tests (d=64)."""

    population: EmbeddingDataset          # 40 speakers x 30 utterances, tight clusters
    population_noisy: EmbeddingDataset    # same shape, sigma_w=1.1 (EER ~ 2%)
    dev: EmbeddingDataset                 # 100 speakers x 5 utterances (pools 250/gender)
    training: EmbeddingDataset            # 96 voices, 48 per gender
    generator: IdentityGenerator
    channel: SynthesisChannel
    dimension: int = 64


@pytest.fixture(scope="session")
def world() -> World:
    population, _ = synth_population(40, 30, 1.0, 0.05, 64, seed=11)
    population_noisy, _ = synth_population(40, 30, 1.0, 1.1, 64, seed=12)
    dev, _ = synth_population(100, 5, 1.0, 0.05, 64, seed=101)
    training, _ = synth_population(96, 1, 1.0, 0.05, 64, seed=202)
    generator = fit_generator(dev, training, GeneratorConfig(gmm_seed=5))
    return World(
        population=population,
        population_noisy=population_noisy,
        dev=dev,
        training=training,
        generator=generator,
        channel=SynthesisChannel(0.03, seed=7),
    )


@pytest.fixture(scope="session")
def generator_96f(world) -> IdentityGenerator:
    """Generator whose training-selection pool is exactly 96 same-gender voices."""
    big, _ = synth_population(192, 1, 1.0, 0.05, 64, seed=203)
    females = [r for r in big.records if r.gender == "f"][:96]
    return fit_generator(world.dev, EmbeddingDataset(females), GeneratorConfig(gmm_seed=6))
