"""Definition generation, blinding, and the pair export."""

import json

import pytest

from dejargon.corpus import ArticleRecord
from dejargon.definitions import (
    Definition,
    UnblindKeyStore,
    assemble_pairs,
    audit_blinding,
    default_pair_id,
    make_blind_pair,
)
from dejargon.errors import PreconditionError, StoreError
from dejargon.llm_gateway import LlmGateway, ModelConfig, chat_request, embed_request, write_fixture
from dejargon.profiles import render_definition_prompt
from dejargon.retrieval import Chunk, build_index

from conftest import stub_embedding, stub_vector
from datetime import date


ARTICLE = ArticleRecord(
    arxiv_id="2403.10002",
    title="Planning with Constraint-Aware Tree Search",
    abstract="We present a planner with a learned policy network and dual ascent pruning.",
    primary_category="cs.AI",
    all_categories=["cs.AI"],
    updated_at=date(2024, 3, 10),
)


def ok_definition(method="abstract_only", term="policy network", text="a short explanation"):
    return Definition(
        arxiv_id=ARTICLE.arxiv_id,
        term=term,
        method=method,
        text=text,
        context_used=["abstract"] if method == "abstract_only" else ["2403.10002:0"],
        status="ok",
    )


def no_context_definition(term="policy network"):
    return Definition(
        arxiv_id=ARTICLE.arxiv_id,
        term=term,
        method="rag",
        text=None,
        context_used=[],
        status="no_context",
    )


class TestDefinitionInvariants:
    def test_ok_requires_text(self):
        with pytest.raises(PreconditionError):
            Definition(
                arxiv_id="x", term="t", method="rag", text=None, context_used=[], status="ok"
            )

    def test_no_context_only_for_rag(self):
        with pytest.raises(PreconditionError):
            Definition(
                arxiv_id="x",
                term="t",
                method="abstract_only",
                text=None,
                context_used=["abstract"],
                status="no_context",
            )


class TestDefineAbstractOnly:
    def _gateway(self, tmp_path, term="policy network", text="recorded definition"):
        cfg = ModelConfig()
        bundle = render_definition_prompt(term, ARTICLE.abstract, mode="abstract_only", model_config=cfg)
        write_fixture(tmp_path, chat_request(bundle, cfg), {"text": text})
        return LlmGateway(mode="replay", fixtures_dir=tmp_path), cfg

    def test_replay_fixture_round_trip(self, tmp_path):
        from dejargon.definitions import define_abstract_only

        gw, cfg = self._gateway(tmp_path)
        d = define_abstract_only("policy network", ARTICLE, gw, cfg)
        assert d.text == "recorded definition"
        assert d.context_used == ["abstract"]
        assert d.status == "ok"

    def test_empty_term_rejected(self, tmp_path):
        from dejargon.definitions import define_abstract_only

        gw, cfg = self._gateway(tmp_path)
        with pytest.raises(PreconditionError):
            define_abstract_only("", ARTICLE, gw, cfg)

    def test_deterministic_in_replay(self, tmp_path):
        from dejargon.definitions import define_abstract_only

        gw, cfg = self._gateway(tmp_path)
        a = define_abstract_only("policy network", ARTICLE, gw, cfg)
        b = define_abstract_only("policy network", ARTICLE, gw, cfg)
        assert a == b


class TestDefineRag:
    def _index(self):
        texts = ["the policy network section", "the dual ascent section", "unrelated appendix"]
        chunks = [
            Chunk(
                arxiv_id=ARTICLE.arxiv_id,
                chunk_index=i,
                char_start=i * 100,
                char_end=i * 100 + len(t),
                text=t,
                vector=stub_embedding(t),
            )
            for i, t in enumerate(texts)
        ]
        return build_index(chunks)

    def test_retrieved_chunks_feed_the_prompt(self, tmp_path):
        from dejargon.definitions import define_rag

        cfg = ModelConfig()
        index = self._index()
        term = "policy network"
        # term embeds exactly onto chunk 0's vector -> cosine 1, others below 1
        write_fixture(
            tmp_path,
            embed_request([term], cfg),
            {"embeddings": [list(index.chunks[0].vector.values)]},
        )
        hits = index.search(index.chunks[0].vector, threshold=0.3, k=2)
        snippets = [h.chunk.text for h in hits]
        bundle = render_definition_prompt(term, snippets, mode="rag", model_config=cfg)
        write_fixture(tmp_path, chat_request(bundle, cfg), {"text": "rag-grounded text"})
        gw = LlmGateway(mode="replay", fixtures_dir=tmp_path)

        d = define_rag(term, ARTICLE, index, gw, cfg, threshold=0.3, k=2)
        assert d.status == "ok"
        assert d.text == "rag-grounded text"
        assert d.context_used == [h.chunk.chunk_id for h in hits]

    def test_no_context_short_circuits_without_completion(self, tmp_path):
        from dejargon.definitions import define_rag

        cfg = ModelConfig()
        index = self._index()
        term = "neutrino tomography"
        write_fixture(tmp_path, embed_request([term], cfg), {"embeddings": [stub_vector(term)]})
        # No chat fixture exists: any completion attempt would raise ReplayMissError.
        gw = LlmGateway(mode="replay", fixtures_dir=tmp_path)
        d = define_rag(term, ARTICLE, index, gw, cfg, threshold=0.999, k=3)
        assert d.status == "no_context"
        assert d.text is None
        assert d.context_used == []

    def test_threshold_minus_one_always_retrieves(self, tmp_path):
        from dejargon.definitions import define_rag

        cfg = ModelConfig()
        index = self._index()
        term = "dual ascent"
        write_fixture(tmp_path, embed_request([term], cfg), {"embeddings": [stub_vector(term)]})
        hits = index.search(stub_embedding(term), threshold=-1.0, k=5)
        bundle = render_definition_prompt(term, [h.chunk.text for h in hits], mode="rag", model_config=cfg)
        write_fixture(tmp_path, chat_request(bundle, cfg), {"text": "always ok"})
        gw = LlmGateway(mode="replay", fixtures_dir=tmp_path)
        d = define_rag(term, ARTICLE, index, gw, cfg, threshold=-1.0, k=5)
        assert d.status == "ok"


class TestBlindPair:
    def test_deterministic_slot_order(self):
        a = make_blind_pair(ok_definition(), ok_definition("rag"), seed=9)
        b = make_blind_pair(ok_definition(), ok_definition("rag"), seed=9)
        assert a == b

    def test_unblind_inverts_exactly(self):
        pair = make_blind_pair(
            ok_definition(text="abs text"), ok_definition("rag", text="rag text"), seed=3
        )
        key = pair.unblind_key
        slot_texts = {"slot_a": pair.slot_a, "slot_b": pair.slot_b}
        assert slot_texts[_slot_of(key, "abstract_only")] == "abs text"
        assert slot_texts[_slot_of(key, "rag")] == "rag text"

    def test_mismatched_units_rejected(self):
        other = Definition(
            arxiv_id="9999.00000",
            term="policy network",
            method="rag",
            text="t",
            context_used=["9999.00000:0"],
            status="ok",
        )
        with pytest.raises(PreconditionError):
            make_blind_pair(ok_definition(), other, seed=1)

    def test_no_context_member_rejected(self):
        with pytest.raises(PreconditionError):
            make_blind_pair(ok_definition(), no_context_definition(), seed=1)

    def test_slot_balance_over_sequential_ids(self):
        n = 4000
        abstract_in_a = 0
        for i in range(n):
            pair = make_blind_pair(
                ok_definition(), ok_definition("rag"), seed=123, pair_id=f"pair-{i:05d}"
            )
            if pair.unblind_key["slot_a"] == "abstract_only":
                abstract_in_a += 1
        assert 0.46 <= abstract_in_a / n <= 0.54

    def test_blinded_row_passes_leak_audit(self):
        pair = make_blind_pair(ok_definition(), ok_definition("rag"), seed=5)
        serialized = json.dumps(pair.blinded_row())
        assert audit_blinding(serialized) == []

    def test_audit_catches_method_markers(self):
        assert audit_blinding('{"note": "this came from the rag pipeline"}')
        assert audit_blinding('{"x": "abstract_only"}')
        assert audit_blinding("unblind me")


def _slot_of(key: dict, method: str) -> str:
    return next(slot for slot, m in key.items() if m == method)


class TestAssemblePairs:
    def _definitions(self):
        defs = []
        # three complete units, one no-context unit, one incomplete unit
        for term in ("alpha routing", "beta pruning", "gamma gating"):
            defs.append(ok_definition("abstract_only", term=term, text=f"{term} summary"))
            defs.append(ok_definition("rag", term=term, text=f"{term} expanded"))
        defs.append(ok_definition("abstract_only", term="delta fallback", text="delta summary"))
        defs.append(no_context_definition(term="delta fallback"))
        defs.append(ok_definition("abstract_only", term="epsilon only", text="epsilon summary"))
        return defs

    def test_routing_counts(self):
        assembly = assemble_pairs(self._definitions(), seed=11)
        assert assembly.paired == 3
        assert assembly.accuracy_only == 1
        assert assembly.skipped == 1
        assert len(assembly.blinded_rows) == 4

    def test_accuracy_only_rows_have_one_empty_slot(self):
        assembly = assemble_pairs(self._definitions(), seed=11)
        pid = default_pair_id(ARTICLE.arxiv_id, "delta fallback")
        row = next(r for r in assembly.blinded_rows if r["pair_id"] == pid)
        slots = [row["slot_a"], row["slot_b"]]
        assert slots.count(None) == 1
        key = assembly.key_store.unblind(pid)
        empty_slot = "slot_a" if row["slot_a"] is None else "slot_b"
        assert key[empty_slot] == "rag"

    def test_export_is_blind_and_key_unblinds(self):
        assembly = assemble_pairs(self._definitions(), seed=11)
        export = "\n".join(json.dumps(r) for r in assembly.blinded_rows)
        assert audit_blinding(export) == []
        for row in assembly.blinded_rows:
            key = assembly.key_store.unblind(row["pair_id"])
            assert set(key.values()) == {"abstract_only", "rag"}

    def test_key_store_round_trip(self, tmp_path):
        assembly = assemble_pairs(self._definitions(), seed=11)
        path = tmp_path / "keys.json"
        assembly.key_store.save(path)
        loaded = UnblindKeyStore.load(path)
        assert loaded.keys == assembly.key_store.keys
        assert loaded.seed == 11
        with pytest.raises(StoreError):
            loaded.unblind("not-a-pair")
