import json

import numpy as np
import pytest

from biant.errors import ConfigError, EmptySupport
from biant.generate import (
    ALL_SAMPLED,
    GREEDY_FIRST,
    CandidateSet,
    GenerationConfig,
    dump_candidates,
    generate_candidates,
    renormalize_masked,
)
from biant.model import ModelConfig, init_params
from biant.prompt import DETAILED_DESCRIPTION, SPECIAL_TOKEN
from biant.vocab import ActionLabel

from conftest import make_video


def observed_prefix(n=4, seed=40):
    return make_video("v", n, seed=seed).segments


def test_generation_config_validation():
    with pytest.raises(ConfigError):
        GenerationConfig(k=0)
    with pytest.raises(ConfigError):
        GenerationConfig(temperature=0.0)
    with pytest.raises(ConfigError):
        GenerationConfig(strategy="beam")
    GenerationConfig(k=1, temperature=0.5, strategy=ALL_SAMPLED)


def test_candidate_set_rejects_mixed_lengths():
    a, b = ActionLabel(0, 0), ActionLabel(1, 1)
    CandidateSet("i", [(a, b), (b, a)])
    with pytest.raises(ConfigError):
        CandidateSet("i", [(a, b), (a,)])


def test_renormalize_masked_examples():
    dist = np.array([0.1, 0.2, 0.3, 0.4])
    out = renormalize_masked(dist, np.array([False, True, False, True]))
    assert np.allclose(out, [0.0, 2.0 / 6.0, 0.0, 4.0 / 6.0])
    assert out.sum() == pytest.approx(1.0)
    with pytest.raises(EmptySupport):
        renormalize_masked(dist, np.zeros(4, dtype=bool))
    with pytest.raises(EmptySupport):
        renormalize_masked(np.array([0.0, 0.0, 1.0]), np.array([True, True, False]))


def test_generate_shapes_and_lengths(tiny_params, space):
    cfg = GenerationConfig(k=5, seed=1)
    cs = generate_candidates(tiny_params, space, observed_prefix(), z=3, cfg=cfg,
                             mode=SPECIAL_TOKEN, instance_id="v:t0003")
    assert cs.instance_id == "v:t0003"
    assert len(cs.candidates) == 5
    for cand in cs.candidates:
        assert len(cand) == 3
        for a in cand:
            assert 0 <= a.verb < space.num_verbs
            assert 0 <= a.noun < space.num_nouns


def test_generate_k1_greedy_is_seed_invariant(tiny_params, space):
    obs = observed_prefix()
    a = generate_candidates(tiny_params, space, obs, 4, GenerationConfig(k=1, seed=0),
                            SPECIAL_TOKEN, "i")
    b = generate_candidates(tiny_params, space, obs, 4, GenerationConfig(k=1, seed=99),
                            SPECIAL_TOKEN, "i")
    assert a.candidates == b.candidates


def test_generate_repeated_call_is_deterministic(tiny_params, space):
    obs = observed_prefix()
    cfg = GenerationConfig(k=4, seed=7)
    a = generate_candidates(tiny_params, space, obs, 5, cfg, SPECIAL_TOKEN, "i")
    b = generate_candidates(tiny_params, space, obs, 5, cfg, SPECIAL_TOKEN, "i")
    assert a.candidates == b.candidates


def test_generate_candidates_keyed_by_instance_not_call_order(tiny_params, space):
    obs = observed_prefix()
    cfg = GenerationConfig(k=3, seed=7)
    first = [generate_candidates(tiny_params, space, obs, 4, cfg, SPECIAL_TOKEN, i)
             for i in ("a", "b")]
    second = [generate_candidates(tiny_params, space, obs, 4, cfg, SPECIAL_TOKEN, i)
              for i in ("b", "a")]
    assert first[0].candidates == second[1].candidates
    assert first[1].candidates == second[0].candidates


def test_low_temperature_sampling_matches_greedy(tiny_params, space):
    obs = observed_prefix()
    greedy = generate_candidates(tiny_params, space, obs, 4,
                                 GenerationConfig(k=1, seed=0), SPECIAL_TOKEN, "i")
    cold = generate_candidates(tiny_params, space, obs, 4,
                               GenerationConfig(k=2, temperature=1e-6, seed=5),
                               SPECIAL_TOKEN, "i")
    assert cold.candidates[0] == greedy.candidates[0]
    assert cold.candidates[1] == greedy.candidates[0]


def test_all_sampled_has_no_greedy_candidate(tiny_params, space):
    obs = observed_prefix()
    sampled = generate_candidates(tiny_params, space, obs, 6,
                                  GenerationConfig(k=6, strategy=ALL_SAMPLED, seed=3),
                                  SPECIAL_TOKEN, "i")
    assert len(set(sampled.candidates)) > 1


def test_generate_rejects_bad_z(tiny_params, space):
    with pytest.raises(ConfigError):
        generate_candidates(tiny_params, space, observed_prefix(), 0,
                            GenerationConfig(k=1), SPECIAL_TOKEN, "i")


def test_random_models_always_emit_grammar_complete_candidates(space):
    """Constrained decoding yields exactly-z futures for any parameter draw."""
    count = 0
    for seed in range(6):
        cfg = ModelConfig(vocab_size=space.size, context_len=96, embed_dim=8,
                          num_heads=2, num_layers=1, mlp_hidden=12, seed=seed)
        params = init_params(cfg)
        rng = np.random.default_rng(seed)
        for name, arr in params.arrays.items():
            params.arrays[name] = rng.normal(0.0, 0.4, arr.shape)
        for z in (1, 2, 5):
            cs = generate_candidates(params, space, observed_prefix(3, seed), z,
                                     GenerationConfig(k=3, seed=seed),
                                     DETAILED_DESCRIPTION, f"s{seed}:z{z}")
            count += sum(len(c) == z for c in cs.candidates)
    assert count == 6 * 3 * 3


def test_dump_candidates_jsonl(tmp_path, tiny_params, space):
    cs = generate_candidates(tiny_params, space, observed_prefix(), 2,
                             GenerationConfig(k=2, seed=1), SPECIAL_TOKEN, "vid:t0007")
    path = tmp_path / "cands.jsonl"
    dump_candidates(path, [cs])
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 2
    rec = json.loads(lines[0])
    assert rec["instance_id"] == "vid:t0007"
    assert rec["candidate_index"] == 0
    assert len(rec["actions"]) == 2
    assert set(rec["actions"][0]) == {"verb", "noun"}
