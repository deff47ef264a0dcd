"""Patching behavior: degeneracies, reversibility, rejections."""

import pytest
import torch

from grouprope_adapter import AdapterError, PatchSpec, build_tiny_rotary_model, patch_model


@pytest.fixture(scope="module")
def model():
    return build_tiny_rotary_model(vocab=96, hidden=64, layers=3, heads=4, kv_heads=2, seed=7)


@pytest.fixture(scope="module")
def token_ids():
    return torch.randint(0, 96, (1, 24), generator=torch.Generator().manual_seed(3))


def logits(model, ids):
    with torch.no_grad():
        return model(ids, use_cache=False).logits


class TestDegeneracies:
    def test_off_scheme_is_exact(self, model, token_ids):
        baseline = logits(model, token_ids)
        with patch_model(model, PatchSpec(scheme="off")):
            assert torch.equal(logits(model, token_ids), baseline)

    def test_covering_window_within_tolerance(self, model, token_ids):
        baseline = logits(model, token_ids)
        spec = PatchSpec(scheme="self", capacity=16, growth_rate=0.02, window=64)
        with patch_model(model, spec):
            diff = (logits(model, token_ids) - baseline).abs().max().item()
        assert diff <= 1e-4

    def test_unit_group_size_within_tolerance(self, model, token_ids):
        baseline = logits(model, token_ids)
        with patch_model(model, PatchSpec(scheme="se", group_size=1, window=4)):
            diff = (logits(model, token_ids) - baseline).abs().max().item()
        assert diff <= 1e-4


class TestGroupedRuns:
    def test_grouped_logits_finite_and_differ(self, model, token_ids):
        baseline = logits(model, token_ids)
        spec = PatchSpec(scheme="self", capacity=8, growth_rate=0.5, window=4)
        with patch_model(model, spec):
            patched = logits(model, token_ids)
        assert torch.isfinite(patched).all()
        assert (patched - baseline).abs().max().item() > 1e-3

    def test_constant_scheme_runs(self, model, token_ids):
        with patch_model(model, PatchSpec(scheme="se", group_size=4, window=4)):
            assert torch.isfinite(logits(model, token_ids)).all()


class TestReversibility:
    def test_unpatch_restores_exact_logits(self, model, token_ids):
        baseline = logits(model, token_ids)
        handle = patch_model(model, PatchSpec(scheme="se", group_size=4, window=2))
        assert not torch.equal(logits(model, token_ids), baseline)
        handle.unpatch()
        assert torch.equal(logits(model, token_ids), baseline)

    def test_repatching_after_unpatch(self, model, token_ids):
        spec = PatchSpec(scheme="self", capacity=4, growth_rate=0.3, window=2)
        with patch_model(model, spec):
            first = logits(model, token_ids)
        with patch_model(model, spec):
            second = logits(model, token_ids)
        assert torch.equal(first, second)


class TestRejections:
    def test_non_rotary_model_rejected(self):
        torch.manual_seed(0)
        plain = torch.nn.Sequential(torch.nn.Embedding(10, 8), torch.nn.Linear(8, 10))
        with pytest.raises(AdapterError, match="unsupported-architecture"):
            patch_model(plain, PatchSpec(scheme="se", group_size=2, window=2))

    def test_populated_cache_rejected(self, model, token_ids):
        from transformers import DynamicCache

        cache = DynamicCache(config=model.config)
        with torch.no_grad():
            model(token_ids, past_key_values=cache, use_cache=True)  # unpatched prefill
        assert cache.get_seq_length() > 0
        spec = PatchSpec(scheme="se", group_size=2, window=2)
        with patch_model(model, spec):
            with torch.no_grad():
                with pytest.raises(AdapterError, match="unsupported"):
                    model(token_ids[:, :1], past_key_values=cache, use_cache=True)

    def test_max_len_enforced(self, model, token_ids):
        spec = PatchSpec(scheme="se", group_size=2, window=2, max_len=8)
        with patch_model(model, spec):
            with pytest.raises(AdapterError, match="invalid-input"):
                logits(model, token_ids)

    def test_bad_specs_rejected(self):
        with pytest.raises(AdapterError):
            PatchSpec(scheme="both")
        with pytest.raises(AdapterError):
            PatchSpec(scheme="self", capacity=None)
        with pytest.raises(AdapterError):
            PatchSpec(scheme="se", group_size=2, capacity=4)
        with pytest.raises(AdapterError):
            PatchSpec(scheme="se", group_size=0)
