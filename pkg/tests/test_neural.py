import numpy as np
import pytest

from polspell.corpus import ErrorCase
from polspell.errors import LoadError
from polspell.neural import (
    CharVocab,
    HookShape,
    Seq2SeqModel,
    TrainConfig,
    TrainingError,
    batch_loss,
    correct_token,
    decode_greedy,
    encode,
    external_layers_load,
    gradient_check,
    hook_state,
    load_model,
    save_model,
    step_distribution,
    train,
)
from polspell.neural.vocab import EOS, SOS, UNK

VOCAB = CharVocab.from_texts(["abcłó"])


def tiny(bidirectional=False, hook=None, seed=0, hidden=3, embed=2):
    return Seq2SeqModel.create(VOCAB, hidden, embed, bidirectional, hook, seed)


def tie_directions(model):
    for part in ("enc", "dec", "out"):
        for suffix in ("W", "b"):
            model.params[f"{part}.bwd.{suffix}"] = model.params[f"{part}.fwd.{suffix}"].copy()
    for s in ("h", "c"):
        model.buffers[f"init.bwd.{s}"] = model.buffers[f"init.fwd.{s}"].copy()
    return model


class TestVocab:
    def test_round_trip(self):
        assert VOCAB.decode(VOCAB.encode("łaba")) == "łaba"

    def test_unknown(self):
        assert VOCAB.encode("x") == [UNK]
        assert VOCAB.decode([SOS, UNK]) == ""


class TestEncode:
    def test_single_char(self):
        states = encode(tiny(), "a")
        h, c = states["fwd"]
        assert h.shape == (3,) and np.all(np.isfinite(h))

    def test_palindrome_tied_bi_states_equal(self):
        model = tie_directions(tiny(bidirectional=True, hidden=4))
        states = encode(model, "abcba")
        for a, b in zip(states["fwd"], states["bwd"]):
            np.testing.assert_array_equal(a, b)

    def test_deterministic(self):
        model = tiny(bidirectional=True)
        a, b = encode(model, "abó"), encode(model, "abó")
        for d in model.directions:
            np.testing.assert_array_equal(a[d][0], b[d][0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            encode(tiny(), "")


class TestDecode:
    def test_forced_eos(self):
        model = tiny()
        model.params["out.fwd.b"][EOS] = 100.0
        form, probs = decode_greedy(model, encode(model, "ab"), 10)
        assert form == "" and len(probs) == 1

    def test_max_len_respected(self):
        model = tiny()
        model.params["out.fwd.b"][VOCAB.encode("a")[0]] = 100.0
        form, probs = decode_greedy(model, encode(model, "ab"), 6)
        assert form == "aaaaaa" and len(probs) == 6

    def test_distribution_normalized(self):
        model = tiny(bidirectional=True)
        states = encode(model, "abc")
        prev = SOS
        for _ in range(5):
            dist, states = step_distribution(model, states, prev)
            assert abs(dist.sum() - 1.0) < 1e-6
            assert np.all(dist >= 0)
            prev = int(np.argmax(dist))

    def test_tied_bi_equals_uni(self):
        bi = tie_directions(tiny(bidirectional=True, hidden=4, seed=5))
        uni = Seq2SeqModel(
            VOCAB, 4, 2, False, None,
            {k: v for k, v in bi.params.items() if ".bwd." not in k},
            {k: v for k, v in bi.buffers.items() if ".bwd." not in k},
        )
        a = correct_token(bi, "abba")
        b = correct_token(uni, "abba")
        assert a[0] == b[0]
        np.testing.assert_allclose(a[1], b[1], atol=1e-12)


class TestHook:
    def test_zero_weights_give_relu_bias(self):
        model = tiny(bidirectional=True, hook=HookShape(3, 4))
        model.params["hook.W"][:] = 0.0
        model.params["hook.b"][:] = np.linspace(-1, 1, 6)
        h, c = hook_state(model, np.ones((3, 4)))
        np.testing.assert_array_equal(np.concatenate([h, c]), np.maximum(np.linspace(-1, 1, 6), 0))

    def test_hook_feeds_both_directions(self):
        model = tiny(bidirectional=True, hook=HookShape(3, 4))
        assert not model.buffers
        layers = np.random.default_rng(0).normal(size=(3, 4))
        a = encode(model, "ab", layers)
        b = encode(model, "ab", np.zeros((3, 4)))
        assert not np.allclose(a["fwd"][0], b["fwd"][0])

    def test_hook_absent_when_disabled(self):
        model = tiny(bidirectional=True)
        assert not any(k.startswith("hook.") for k in model.params)
        assert model.layer_weights() is None


class TestGradients:
    @pytest.mark.parametrize("bidirectional,hook", [(False, None), (True, None), (True, HookShape(3, 2))])
    def test_matches_finite_difference(self, bidirectional, hook):
        model = tiny(bidirectional, hook, seed=2)
        ext = np.random.default_rng(0).normal(size=(3, 2)) if hook else None
        assert gradient_check(model, ("abó", "aób"), ext) < 1e-4

    def test_mixture_objective(self):
        model = tiny(True, seed=4)
        assert gradient_check(model, ("ab", "ba"), objective="mixture") < 1e-4

    def test_spread_weights_small_gradient(self):
        # With weights pushed away from init, dec.bwd.W[85] has a gradient of
        # ~1.5e-8 and O(eps**2) truncation dominates the relative error at
        # eps=1e-4 (~4e-4). Shrinking eps shows the analytic value is right.
        rng = np.random.default_rng(8)
        model = Seq2SeqModel.create(CharVocab.from_texts(["abcłó"]), 4, 3, True, None, 8)
        for value in model.params.values():
            value += rng.normal(0, 0.3, value.shape)
        sample = tuple("".join(rng.choice(list("abcłó"), int(rng.integers(1, 5)))) for _ in range(2))
        assert sample == ("óó", "łł")
        assert gradient_check(model, sample, eps=1e-4) > 1e-4
        assert gradient_check(model, sample, eps=1e-5) < 1e-4

    def test_padding_does_not_change_loss(self):
        model = tiny(True, seed=1)
        alone, gold_alone, _ = batch_loss(model, ["ab"], ["ba"])
        both, gold_both, _ = batch_loss(model, ["ab", "cabał"], ["ba", "cabała"])
        np.testing.assert_allclose(gold_both[:3, 0], gold_alone[:3, 0], atol=1e-12)


class TestTraining:
    CASES = [ErrorCase("ab", "ba"), ErrorCase("bc", "cb"), ErrorCase("łó", "ół")]

    def test_deterministic(self):
        cfg = TrainConfig(epochs=3, batch_size=2, seed=9, lr=0.01)
        _, h1 = train(tiny(), self.CASES, cfg)
        _, h2 = train(tiny(), self.CASES, cfg)
        assert h1 == h2 and len(h1) == 3

    def test_does_not_mutate_input(self):
        model = tiny()
        before = model.params["embedding"].copy()
        train(model, self.CASES, TrainConfig(epochs=1, batch_size=2))
        np.testing.assert_array_equal(model.params["embedding"], before)

    def test_nan_raises(self):
        model = tiny()
        model.params["enc.fwd.W"][0, 0] = np.nan
        with pytest.raises(TrainingError, match="epoch 1, batch 1"):
            train(model, self.CASES, TrainConfig(epochs=1))

    def test_config_validated(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)


class TestIo:
    def test_round_trip(self, tmp_path):
        model = tiny(True, HookShape(3, 2))
        model.loss_history = [1.5, 0.25]
        save_model(model, tmp_path / "m.bin")
        loaded = load_model(tmp_path / "m.bin")
        assert loaded.vocab == model.vocab and loaded.mode == "bi"
        assert loaded.hook == model.hook and loaded.loss_history == [1.5, 0.25]
        for k, v in model.params.items():
            np.testing.assert_array_equal(loaded.params[k], v.astype(np.float32))
        save_model(loaded, tmp_path / "again.bin")
        assert (tmp_path / "m.bin").read_bytes() == (tmp_path / "again.bin").read_bytes()

    def test_bad_magic(self, write):
        with pytest.raises(LoadError, match="magic"):
            load_model(write("m.bin", "nope"))

    def test_bad_version(self, tmp_path):
        save_model(tiny(), tmp_path / "m.bin")
        data = bytearray((tmp_path / "m.bin").read_bytes())
        data[4] = 9
        (tmp_path / "m.bin").write_bytes(bytes(data))
        with pytest.raises(LoadError, match="version"):
            load_model(tmp_path / "m.bin")

    def test_truncated(self, tmp_path):
        save_model(tiny(), tmp_path / "m.bin")
        data = (tmp_path / "m.bin").read_bytes()
        (tmp_path / "m.bin").write_bytes(data[:-4])
        with pytest.raises(LoadError, match="truncated"):
            load_model(tmp_path / "m.bin")

    def test_external_layers(self, write):
        text = "".join(f"kot {i} {i} {i + 0.5} 0 1\n" for i in range(3))
        stacks = external_layers_load(write("l.txt", text), dim=4)
        assert stacks["kot"].shape == (3, 4)
        np.testing.assert_array_equal(stacks["kot"][2], [2, 2.5, 0, 1])

    def test_external_missing_layer(self, write):
        with pytest.raises(LoadError) as err:
            external_layers_load(write("l.txt", "kot 0 1 2\nkot 2 1 2\n"))
        assert err.value.line == 1

    def test_external_malformed(self, write):
        with pytest.raises(LoadError) as err:
            external_layers_load(write("l.txt", "kot 0 1 2\nkot 1 1\n"))
        assert err.value.line == 2
        with pytest.raises(LoadError):
            external_layers_load(write("m.txt", "kot 5 1 2\n"))
