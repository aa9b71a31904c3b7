import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biant.errors import ConfigError, ContextOverflow, GrammarViolation, TruncatedOutput, UnknownLabel
from biant.prompt import (
    BOS,
    CTRL_BWD,
    CTRL_FWD,
    DETAILED_DESCRIPTION,
    EOS,
    EXPECT_NOUN,
    EXPECT_SEP_OR_EOS,
    EXPECT_VERB,
    PAD,
    SEP,
    SPECIAL_TOKEN,
    TokenSpace,
    decode_actions,
    dump_encoding,
    encode_instance,
    encode_preamble,
    next_token_mask,
)
from biant.sequence import BACKWARD, FORWARD, AnticipationInstance, WindowConfig, make_backward_instance, make_forward_instances
from biant.vocab import ActionLabel, demo_vocabulary

from conftest import make_video


def test_layout_is_contiguous_and_sized(space):
    assert (PAD, BOS, EOS, SEP, CTRL_FWD, CTRL_BWD) == (0, 1, 2, 3, 4, 5)
    assert space.fwd_desc_start == 6
    assert space.bwd_desc_start == 14
    assert space.verb_start == 22
    assert space.noun_start == 30
    assert space.size == 6 + 8 + 8 + 8 + 12


def test_token_helpers(space):
    assert space.verb_token(0) == space.verb_start
    assert space.noun_token(11) == space.size - 1
    assert space.verb_of(space.verb_token(5)) == 5
    assert space.noun_of(space.noun_token(7)) == 7
    assert space.is_verb_token(space.verb_token(3))
    assert not space.is_verb_token(space.noun_token(3))
    with pytest.raises(UnknownLabel):
        space.verb_token(8)
    with pytest.raises(UnknownLabel):
        space.noun_token(12)


def test_preamble_special(space):
    assert encode_preamble(space, SPECIAL_TOKEN, FORWARD) == [4]
    assert encode_preamble(space, SPECIAL_TOKEN, BACKWARD) == [5]


def test_preamble_description(space):
    fwd = encode_preamble(space, DETAILED_DESCRIPTION, FORWARD)
    bwd = encode_preamble(space, DETAILED_DESCRIPTION, BACKWARD)
    assert fwd == list(range(6, 14))
    assert bwd == list(range(14, 22))


def test_preamble_validation(space):
    with pytest.raises(ConfigError):
        encode_preamble(space, "prose", FORWARD)
    with pytest.raises(ConfigError):
        encode_preamble(space, SPECIAL_TOKEN, "sideways")


def smallest_instance():
    return AnticipationInstance(
        direction=FORWARD, observed=(ActionLabel(0, 0),), future=(ActionLabel(1, 2),),
        source_video="v", stop_index=0,
    )


def test_encode_smallest_instance(space):
    enc = encode_instance(space, smallest_instance(), SPECIAL_TOKEN)
    v, n = space.verb_token(0), space.noun_token(0)
    v2, n2 = space.verb_token(1), space.noun_token(2)
    assert enc.tokens.tolist() == [BOS, CTRL_FWD, v, n, SEP, v2, n2, EOS]
    assert enc.loss_mask.tolist() == [False] * 5 + [True] * 3
    assert enc.prompt_len == 5
    assert enc.z == 1


def test_encoded_lengths_default_config(space):
    video = make_video("v", 28, seed=11)
    fwd = make_forward_instances(video, WindowConfig())[0]
    bwd = make_backward_instance(fwd, 16)
    enc_f = encode_instance(space, fwd, SPECIAL_TOKEN)
    enc_b = encode_instance(space, bwd, SPECIAL_TOKEN)
    assert len(enc_f.tokens) == 1 + 1 + 3 * 8 + 3 * 20 == 86
    assert len(enc_b.tokens) == 1 + 1 + 3 * 16 + 3 * 12 == 86
    assert len(enc_f.tokens) == len(enc_b.tokens)
    desc_f = encode_instance(space, fwd, DETAILED_DESCRIPTION)
    assert len(desc_f.tokens) == 86 - 1 + 8


def test_mask_counts_3z_any_preamble(space):
    video = make_video("v", 30, seed=12)
    for fwd in make_forward_instances(video, WindowConfig()):
        for mode in (SPECIAL_TOKEN, DETAILED_DESCRIPTION):
            enc = encode_instance(space, fwd, mode)
            assert int(enc.loss_mask.sum()) == 3 * 20
            assert enc.loss_mask[enc.prompt_len:].all()
            assert not enc.loss_mask[: enc.prompt_len].any()
        bwd = make_backward_instance(fwd, 16)
        enc = encode_instance(space, bwd, SPECIAL_TOKEN)
        assert int(enc.loss_mask.sum()) == 3 * 12


def test_mask_without_structure_tokens(space):
    enc = encode_instance(space, smallest_instance(), SPECIAL_TOKEN, loss_on_structure=False)
    assert enc.loss_mask.tolist() == [False] * 5 + [True, True, False]
    video = make_video("v", 28, seed=13)
    fwd = make_forward_instances(video, WindowConfig())[0]
    enc = encode_instance(space, fwd, SPECIAL_TOKEN, loss_on_structure=False)
    assert int(enc.loss_mask.sum()) == 2 * 20
    structure = enc.tokens[enc.prompt_len + 2 :: 3]
    assert all(int(t) in (SEP, EOS) for t in structure)


def test_encode_context_overflow(space):
    video = make_video("v", 28, seed=14)
    fwd = make_forward_instances(video, WindowConfig())[0]
    with pytest.raises(ContextOverflow):
        encode_instance(space, fwd, SPECIAL_TOKEN, max_len=50)
    encode_instance(space, fwd, SPECIAL_TOKEN, max_len=86)


def test_encode_rejects_unknown_labels(space):
    inst = AnticipationInstance(
        direction=FORWARD, observed=(ActionLabel(0, 0),), future=(ActionLabel(8, 0),),
        source_video="v", stop_index=0,
    )
    with pytest.raises(UnknownLabel):
        encode_instance(space, inst, SPECIAL_TOKEN)


def test_decode_actions_examples(space):
    tokens = [space.verb_token(0), space.noun_token(1), SEP,
              space.verb_token(2), space.noun_token(0), EOS]
    assert decode_actions(space, tokens) == [ActionLabel(0, 1), ActionLabel(2, 0)]
    with pytest.raises(GrammarViolation):
        decode_actions(space, [space.verb_token(0), space.verb_token(1)])
    with pytest.raises(TruncatedOutput):
        decode_actions(space, [])
    with pytest.raises(TruncatedOutput):
        decode_actions(space, [space.verb_token(0), space.noun_token(1), SEP])
    with pytest.raises(GrammarViolation):
        decode_actions(space, [space.verb_token(0), space.noun_token(1), EOS, SEP])
    with pytest.raises(GrammarViolation):
        decode_actions(space, [SEP])


@given(seed=st.integers(0, 200), n_obs_bwd=st.integers(1, 27),
       mode=st.sampled_from([SPECIAL_TOKEN, DETAILED_DESCRIPTION]),
       backward=st.booleans())
@settings(max_examples=80, deadline=None)
def test_decode_encode_round_trip(seed, n_obs_bwd, mode, backward):
    space = TokenSpace(demo_vocabulary())
    video = make_video("v", 28, seed=seed)
    inst = make_forward_instances(video, WindowConfig())[0]
    if backward:
        inst = make_backward_instance(inst, n_obs_bwd)
    enc = encode_instance(space, inst, mode)
    assert tuple(decode_actions(space, enc.target_region())) == inst.future


def test_next_token_mask_states(space):
    m = next_token_mask(space, EXPECT_VERB, 0, 20)
    assert int(m.sum()) == 8 and m[space.verb_start : space.noun_start].all()
    m = next_token_mask(space, EXPECT_NOUN, 0, 20)
    assert int(m.sum()) == 12 and m[space.noun_start :].all()
    m = next_token_mask(space, EXPECT_SEP_OR_EOS, 20, 20)
    assert int(m.sum()) == 1 and m[EOS]
    m = next_token_mask(space, EXPECT_SEP_OR_EOS, 3, 20)
    assert int(m.sum()) == 1 and m[SEP]
    with pytest.raises(ConfigError):
        next_token_mask(space, "expect_miracle", 0, 20)


def test_dump_encoding_readable(space):
    enc = encode_instance(space, smallest_instance(), SPECIAL_TOKEN)
    line = dump_encoding(space, enc)
    assert "[forward]" in line and "|" in line
    assert "take" in line and "plate" in line
