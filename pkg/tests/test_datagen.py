from __future__ import annotations

import pytest

from medens.corpus import Dataset, Provenance, write_dataset
from medens.datagen import (
    GenerationJob,
    MixSpec,
    SplitSpec,
    generate_gcf,
    make_split,
    mix,
    round_half_up,
    select_priming_universe,
    synthesize_labeled,
    synthesize_snippets,
)
from medens.ensemble import EnsembleConfig
from medens.errors import NotEnoughSynthetic, ResumeMismatch, TestTooLarge, UniverseTooSmall
from medens.llmclient import EchoBackend, MockBackend
from medens.medner import DictionaryRecognizer, default_lexicon

from util import synthetic_example, tiny_universe


@pytest.fixture(scope="module")
def demo_recognizer():
    return DictionaryRecognizer(default_lexicon())


class TestMakeSplit:
    def test_sizes(self):
        ds = synthesize_labeled("H", 120, seed=1)
        train, test = make_split(ds, SplitSpec(test_size=20, seed=2))
        assert len(train.examples) == 100
        assert len(test.examples) == 20
        assert set(train.ids()) | set(test.ids()) == set(ds.ids())
        assert set(train.ids()) & set(test.ids()) == set()

    def test_zero_test_size(self):
        ds = synthesize_labeled("H", 10, seed=1)
        train, test = make_split(ds, SplitSpec(test_size=0, seed=2))
        assert train.examples == ds.examples
        assert test.examples == []

    def test_determinism(self):
        ds = synthesize_labeled("H", 50, seed=1)
        a = make_split(ds, SplitSpec(test_size=10, seed=3))
        b = make_split(ds, SplitSpec(test_size=10, seed=3))
        assert a[0].ids() == b[0].ids()
        assert a[1].ids() == b[1].ids()

    def test_test_too_large(self):
        ds = synthesize_labeled("H", 10, seed=1)
        with pytest.raises(TestTooLarge):
            make_split(ds, SplitSpec(test_size=10, seed=0))

    def test_manifests_record_parent_and_seed(self):
        ds = synthesize_labeled("H", 30, seed=1)
        train, test = make_split(ds, SplitSpec(test_size=5, seed=9))
        assert train.manifest.parents == ("H",)
        assert test.manifest.seed == 9


class TestSelectPrimingUniverse:
    def test_subset_size(self):
        ds = synthesize_labeled("H", 300, seed=1)
        universe = select_priming_universe(ds, size=210, seed=4)
        assert len(universe.examples) == 210
        assert len(set(universe.ids())) == 210
        assert set(universe.ids()) <= set(ds.ids())

    def test_whole_train_is_permutation(self):
        ds = synthesize_labeled("H", 25, seed=1)
        universe = select_priming_universe(ds, size=25, seed=4)
        assert sorted(universe.ids()) == sorted(ds.ids())
        assert universe.ids() != ds.ids()  # permuted order with this seed

    def test_determinism(self):
        ds = synthesize_labeled("H", 40, seed=1)
        assert select_priming_universe(ds, 10, 7).ids() == select_priming_universe(ds, 10, 7).ids()

    def test_too_small(self):
        ds = synthesize_labeled("H", 5, seed=1)
        with pytest.raises(UniverseTooSmall):
            select_priming_universe(ds, size=6, seed=0)


class TestMix:
    def _human(self, n):
        return synthesize_labeled("H", n, seed=11)

    def _synthetic(self, n):
        examples = [
            synthetic_example(f"g-{i}", f"generated question {i}?", f"answer {i}", f"summary {i}.")
            for i in range(n)
        ]
        return Dataset.build("G", examples, seed=0)

    def test_alpha_half(self):
        mixed = mix(self._human(100), self._synthetic(80), MixSpec(alpha=0.5, seed=3))
        assert len(mixed.examples) == 150
        assert mixed.manifest.counts() == {"human": 100, "synthetic": 50}
        assert mixed.manifest.alpha == 0.5

    def test_alpha_zero_is_reshuffled_human(self):
        human = self._human(30)
        mixed = mix(human, self._synthetic(5), MixSpec(alpha=0, seed=3))
        assert sorted(mixed.ids()) == sorted(human.ids())
        assert mixed.manifest.counts() == {"human": 30, "synthetic": 0}

    def test_not_enough_synthetic(self):
        with pytest.raises(NotEnoughSynthetic) as err:
            mix(self._human(100), self._synthetic(200), MixSpec(alpha=3, seed=0))
        assert err.value.need == 300

    def test_determinism(self):
        a = mix(self._human(40), self._synthetic(40), MixSpec(alpha=1, seed=5))
        b = mix(self._human(40), self._synthetic(40), MixSpec(alpha=1, seed=5))
        assert a.ids() == b.ids()

    def test_size_formula(self):
        for alpha in (0.25, 0.5, 1.0, 2.0):
            human = self._human(40)
            mixed = mix(human, self._synthetic(80), MixSpec(alpha=alpha, seed=1))
            assert len(mixed.examples) == 40 + round_half_up(alpha * 40)


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(2.4) == 2
    assert round_half_up(3.0) == 3


class TestGenerateGcf:
    def _setup(self, k=2, n=3, p=3, universe_size=10):
        snippets = synthesize_snippets(p + 2, seed=21, source="gen")
        universe = Dataset.build("L", tiny_universe(universe_size), seed=0)
        job = GenerationJob(
            target_size=p,
            ensemble=EnsembleConfig(k_trials=k, n_priming=n, seed=13),
            universe_ref=universe.name,
            backend_id="echo",
        )
        return snippets, universe, job

    def test_counts_and_provenance(self, demo_recognizer):
        snippets, universe, job = self._setup(k=2, n=3, p=3)
        ds = generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer)
        assert len(ds.examples) == 3
        assert ds.name == "GCF_3^{k=2}"
        assert ds.manifest.counts() == {"human": 0, "synthetic": 3}
        for ex in ds.examples:
            assert ex.provenance.kind == Provenance.SYNTHETIC
            assert ex.provenance.k == 2
            assert ex.provenance.backend_id == "echo"
        # input order preserved
        assert ds.ids() == [s.id for s in snippets[:3]]

    def test_k10_manifest_name(self, demo_recognizer):
        snippets, universe, job = self._setup(k=1, n=3, p=3)
        job = GenerationJob(
            target_size=3,
            ensemble=EnsembleConfig(k_trials=10, n_priming=1, seed=13),
            universe_ref=universe.name,
            backend_id="echo",
        )
        ds = generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer)
        assert ds.name == "GCF_3^{k=10}"

    def test_universe_too_small_before_any_call(self, demo_recognizer):
        snippets, universe, job = self._setup()
        small = Dataset.build("L", tiny_universe(5), seed=0)
        job = GenerationJob(
            target_size=3,
            ensemble=EnsembleConfig(k_trials=10, n_priming=21, seed=13),
            universe_ref="L",
            backend_id="mock",
        )
        backend = MockBackend()
        with pytest.raises(UniverseTooSmall):
            generate_gcf(snippets, small, job, backend, demo_recognizer)
        assert backend.calls == 0

    def test_resume_equals_uninterrupted(self, tmp_path, demo_recognizer):
        from medens.errors import HttpError
        from util import dr, pt, snip

        snippets = [
            snip(f"gen-{i}", dr(f"Question about topic {i}, any fever?"), pt(f"answer {i}"))
            for i in range(5)
        ]
        universe = Dataset.build("L", tiny_universe(10), seed=0)
        job = GenerationJob(
            target_size=5,
            ensemble=EnsembleConfig(k_trials=2, n_priming=3, seed=13),
            universe_ref="L",
            backend_id="echo",
        )

        # oracle: one uninterrupted run
        full = generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer)

        class FailsOnThird(EchoBackend):
            def complete(self, request):
                if "topic 2" in request.prompt.rsplit("[STOP]", 1)[-1]:
                    raise HttpError(503, "flaky")
                return super().complete(request)

        ckpt = tmp_path / "ckpts"
        with pytest.raises(HttpError):
            generate_gcf(snippets, universe, job, FailsOnThird(), demo_recognizer,
                         checkpoint_dir=ckpt, max_workers=1)

        resumed = generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer,
                               checkpoint_dir=ckpt)
        assert resumed.examples == full.examples
        assert resumed.manifest == full.manifest

    def test_resume_mismatch(self, tmp_path, demo_recognizer):
        snippets, universe, job = self._setup(p=3)
        ckpt = tmp_path / "ckpts"
        generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer, checkpoint_dir=ckpt)
        other = GenerationJob(
            target_size=3,
            ensemble=EnsembleConfig(k_trials=2, n_priming=3, seed=999),  # different seed
            universe_ref=job.universe_ref,
            backend_id="echo",
        )
        with pytest.raises(ResumeMismatch):
            generate_gcf(snippets, universe, other, EchoBackend(), demo_recognizer,
                         checkpoint_dir=ckpt)

    def test_checkpoint_file_round_trips(self, tmp_path, demo_recognizer):
        snippets, universe, job = self._setup(p=3)
        ckpt = tmp_path / "ckpts"
        ds = generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer,
                          checkpoint_dir=ckpt)
        resumed = generate_gcf(snippets, universe, job, EchoBackend(), demo_recognizer,
                               checkpoint_dir=ckpt)
        assert resumed == ds


def test_no_test_set_leakage(tmp_path):
    full = synthesize_labeled("H", 200, seed=17)
    train, test = make_split(full, SplitSpec(test_size=40, seed=17))
    universe = select_priming_universe(train, size=50, seed=17)
    assert set(universe.ids()) & set(test.ids()) == set()
    # generation snippets drawn from train only
    gen_snippets = [ex.snippet for ex in train.examples[:20]]
    assert {s.id for s in gen_snippets} & set(test.ids()) == set()


def test_split_then_write_is_deterministic(tmp_path):
    ds = synthesize_labeled("H", 60, seed=23)
    outputs = []
    for run in range(2):
        train, test = make_split(ds, SplitSpec(test_size=10, seed=23))
        path = tmp_path / f"train-{run}.jsonl"
        write_dataset(train, path)
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_synthesize_labeled_is_deterministic():
    a = synthesize_labeled("H", 25, seed=3)
    b = synthesize_labeled("H", 25, seed=3)
    assert a == b


def test_golden_seeded_selections():
    # frozen outputs pin split/selection determinism across processes
    ds = synthesize_labeled("H", 30, seed=77)
    train, test = make_split(ds, SplitSpec(test_size=6, seed=101))
    assert test.ids() == ["H-6", "H-11", "H-14", "H-17", "H-18", "H-27"]
    universe = select_priming_universe(train, size=5, seed=101)
    assert universe.ids() == ["H-12", "H-26", "H-16", "H-0", "H-10"]
