import json

import numpy as np
import pytest

from stegarmor.channel import ChannelModel, recompress
from stegarmor.corpus import synthetic_image
from stegarmor.costs import WET_COST, compute_costs
from stegarmor.embedder import (
    SCHEDULE,
    CoverAnalysis,
    EmbedConfig,
    StegoRecipe,
    auto_extract,
    embed,
    embed_fixed,
    extract,
    message_length,
    random_message,
)
from stegarmor.errors import CapacityExceeded, ExtractFailure, InvalidPayload, NotFound
from stegarmor.jpeg import CoeffImage, QuantTable, SpatialImage, compress, count_nzac

LOSSLESS = ChannelModel(lossless=True)


@pytest.fixture(scope="module")
def fragile():
    """A cover with large saturated regions, which recompression disturbs."""
    return compress(synthetic_image(3, 128, "bright"), 75)


@pytest.fixture(scope="module")
def robust():
    return compress(synthetic_image(0, 128, "gradient"), 75)


def test_schedule_order():
    assert SCHEDULE[:13] == tuple((1, t) for t in range(1, 13)) + ((2, 1),)
    assert len(SCHEDULE) == 72 and SCHEDULE[-1] == (6, 12)


def test_message_length_and_payload_validation(robust):
    n = count_nzac(robust)
    assert message_length(robust, 0.1) == round(0.1 * n)
    for bad in (0, -0.5):
        with pytest.raises(InvalidPayload):
            message_length(robust, bad)
    with pytest.raises(InvalidPayload):
        embed(robust, [], EmbedConfig(channel=LOSSLESS))
    with pytest.raises(InvalidPayload):
        embed(robust, [0, 1, 2], EmbedConfig(channel=LOSSLESS))


@pytest.mark.parametrize("alpha", [0.7, 1.0])
@pytest.mark.parametrize("payload", [0.05, 0.2])
def test_lossless_channel_is_exact(robust, fragile, alpha, payload):
    for cover in (robust, fragile):
        msg = random_message(message_length(cover, payload), 3)
        stego, recipe, report = embed(cover, msg, EmbedConfig(alpha=alpha, channel=LOSSLESS))
        assert [(a.e_n, a.t) for a in report.attempts] == [(1, 1)]
        assert report.error_rate == 0 and not report.exhausted
        assert np.array_equal(extract(stego, recipe), msg)


def test_golden_trace_on_fragile_cover(fragile):
    msg = random_message(message_length(fragile, 0.05), 0)
    stego, recipe, report = embed(fragile, msg, EmbedConfig(channel=ChannelModel(75)))
    trace = [(a.e_n, a.t) for a in report.attempts]
    assert trace == list(SCHEDULE[: len(trace)])
    assert len(trace) > 1, "expected this cover to need escalation"
    assert (recipe.e_n, recipe.t) == trace[-1]
    assert all(a.error_rate > 1e-4 for a in report.attempts[:-1])
    assert report.error_rate <= 1e-4 and not report.exhausted


def test_soundness_by_independent_resimulation(fragile, robust):
    for cover in (fragile, robust):
        for q in (75, 60):
            msg = random_message(message_length(cover, 0.05), q)
            stego, recipe, report = embed(cover, msg, EmbedConfig(channel=ChannelModel(q)))
            received = recompress(stego, q)
            try:
                got = extract(received, recipe)
            except ExtractFailure as exc:
                got = exc.bits
            rate = float(np.mean(got != msg))
            assert rate == report.error_rate
            if not report.exhausted:
                assert rate <= 1e-4


def test_robust_cover_stops_early(robust):
    msg = random_message(message_length(robust, 0.05), 1)
    _, recipe, report = embed(robust, msg, EmbedConfig(channel=ChannelModel(75)))
    assert (recipe.e_n, recipe.t) == (1, 1) and len(report.attempts) == 1


def test_exhaustion_returns_best_attempt():
    cover = compress(synthetic_image(8, 64, "bright"), 95)
    msg = random_message(message_length(cover, 0.3), 0)
    stego, recipe, report = embed(cover, msg, EmbedConfig(threshold=0.0, channel=ChannelModel(30)))
    assert report.exhausted
    assert [(a.e_n, a.t) for a in report.attempts] == list(SCHEDULE)
    best = min(a.error_rate for a in report.attempts)
    assert report.error_rate == best
    first_best = next(a for a in report.attempts if a.error_rate == best)
    assert (recipe.e_n, recipe.t) == (first_best.e_n, first_best.t)
    assert stego is not None


def test_infeasible_attempts_are_recorded(robust):
    # E6 holds 21 * 256 elements; t = 12 expands 2000 bits beyond that
    msg = random_message(2000, 2)
    analysis = CoverAnalysis(robust)
    _, _, attempt = embed_fixed(robust, msg, EmbedConfig(), 6, 12, analysis)
    assert not attempt.feasible and attempt.error_rate == 1.0


def test_capacity_exceeded():
    cover = compress(synthetic_image(2, 16, "texture"), 75)
    with pytest.raises(CapacityExceeded):
        embed(cover, np.ones(64 * cover.n_blocks, dtype=np.uint8), EmbedConfig(channel=LOSSLESS))


def test_wrong_domain_fails(robust):
    msg = random_message(message_length(robust, 0.1), 5)
    stego, recipe, _ = embed(robust, msg, EmbedConfig(channel=LOSSLESS))
    wrong = StegoRecipe(3, recipe.t, recipe.n_m, recipe.h, recipe.stc_seed, recipe.cover_table)
    with pytest.raises(ExtractFailure) as info:
        extract(stego, wrong)
    rate = float(np.mean(info.value.bits != msg))
    assert 0.35 < rate < 0.65


def test_crc_auto_extract_finds_recipe(fragile):
    msg = random_message(message_length(fragile, 0.05), 11)
    cfg = EmbedConfig(channel=ChannelModel(75), crc=True)
    stego, recipe, _ = embed(fragile, msg, cfg)
    assert recipe.crc_mode == "crc32"
    received = recompress(stego, 75)
    bits, e_n, t = auto_extract(received, msg.size, 10, 0, fragile.table)
    assert (e_n, t) == (recipe.e_n, recipe.t)
    assert np.array_equal(bits, msg)
    assert np.array_equal(extract(received, recipe), msg)


def test_auto_extract_on_noise_is_not_found():
    rng = np.random.default_rng(0)
    for trial in range(3):
        noise = compress(SpatialImage(rng.integers(0, 256, (64, 64), dtype=np.uint8)), 75)
        with pytest.raises(NotFound):
            auto_extract(noise, 100, 10, trial, noise.table)


def test_auto_extract_without_crc_is_not_found(robust):
    msg = random_message(200, 4)
    stego, _, _ = embed(robust, msg, EmbedConfig(channel=LOSSLESS))
    with pytest.raises(NotFound):
        auto_extract(stego, msg.size, 10, 0, robust.table)


def test_recipe_json_round_trip(robust):
    recipe = StegoRecipe(4, 7, 1234, 10, 99, robust.table)
    doc = json.loads(recipe.to_json())
    assert doc == {"e_n": 4, "t": 7, "n_m": 1234, "h": 10, "stc_seed": 99,
                   "cover_qf": 75, "crc_mode": "none"}
    assert StegoRecipe.from_json(recipe.to_json()) == recipe
    custom = StegoRecipe(1, 1, 10, 10, 0, QuantTable(tuple(range(1, 65))), "crc32")
    doc = custom.to_dict()
    assert doc["cover_qf"] is None and doc["cover_table"][63] == 64
    assert StegoRecipe.from_dict(doc) == custom


def test_cost_ceiling_never_binds(small_covers):
    for cover in small_covers:
        _, d = compute_costs(cover)
        assert d.xi_plus.max() < WET_COST and d.xi_minus.max() < WET_COST


def test_non_ijg_cover_with_explicit_channel():
    px = synthetic_image(5, 64, "texture").pixels
    base = compress(SpatialImage(px), 80)
    table = QuantTable(tuple(min(s + 1, 255) for s in base.table.steps))
    cover = CoeffImage(base.width, base.height, base.coeffs, table)
    msg = random_message(message_length(cover, 0.05), 0)
    stego, recipe, report = embed(cover, msg, EmbedConfig(channel=ChannelModel(80)))
    assert StegoRecipe.from_json(recipe.to_json()).cover_table == table
    if not report.exhausted:
        assert np.mean(extract(recompress(stego, 80), recipe) != msg) <= 1e-4
