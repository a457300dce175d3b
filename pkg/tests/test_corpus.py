import json

import pytest
from hypothesis import given, strategies as st

from questionscope.corpus import (
    ArticleRecord,
    DataError,
    IngestStats,
    OutletMeta,
    build_context,
    ingest_articles,
    load_ontology,
    segment,
)

from fixtures import french_sentences


def art(text, article_id="a1", **kw):
    return ArticleRecord(article_id=article_id, source="x", published_at="2023-01-01",
                         text=text, **kw)


def write_articles(tmp_path, rows, name="articles.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + "\n",
                    encoding="utf-8")
    return str(path)


class TestIngest:
    def test_three_valid_lines(self, tmp_path):
        rows = [
            {"article_id": f"a{i}", "source": "lefigaro.fr",
             "published_at": "2023-05-01", "text": f"Texte {i}."}
            for i in range(3)
        ]
        stats = IngestStats()
        recs = list(ingest_articles(write_articles(tmp_path, rows), stats=stats))
        assert [r.article_id for r in recs] == ["a0", "a1", "a2"]
        assert stats.rejected == 0 and stats.yielded == 3

    def test_empty_text_rejected_with_line_number(self, tmp_path):
        rows = [
            {"article_id": "a0", "source": "x", "published_at": "2023-01-01", "text": "Bon."},
            {"article_id": "a1", "source": "x", "published_at": "2023-01-01", "text": "   "},
        ]
        path = write_articles(tmp_path, rows)
        with pytest.raises(DataError, match=":2:"):
            list(ingest_articles(path))

    def test_lenient_skips_bad_lines(self, tmp_path):
        path = tmp_path / "articles.jsonl"
        path.write_text(
            '{"article_id":"a0","source":"x","published_at":"d","text":"Bon."}\n'
            "not json at all\n"
            '{"article_id":"a1","source":"x","published_at":"d","text":"Encore."}\n',
            encoding="utf-8",
        )
        stats = IngestStats()
        recs = list(ingest_articles(str(path), lenient=True, stats=stats))
        assert [r.article_id for r in recs] == ["a0", "a1"]
        assert stats.rejected == 1

    def test_duplicate_article_id_rejected(self, tmp_path):
        rows = [
            {"article_id": "a0", "source": "x", "published_at": "d", "text": "Un."},
            {"article_id": "a0", "source": "x", "published_at": "d", "text": "Deux."},
        ]
        with pytest.raises(DataError, match="duplicate"):
            list(ingest_articles(write_articles(tmp_path, rows)))

    def test_unknown_keys_preserved(self, tmp_path):
        rows = [{"article_id": "a0", "source": "x", "published_at": "d",
                 "text": "Un.", "crawl_ts": 123}]
        (rec,) = ingest_articles(write_articles(tmp_path, rows))
        assert rec.extra == {"crawl_ts": 123}

    def test_ontology_join_arcinfo(self, tmp_path):
        onto_path = tmp_path / "ontology.csv"
        onto_path.write_text(
            "source,country_region,scale,type\n"
            "arcinfo.ch,Switzerland,hyper-local,general\n",
            encoding="utf-8",
        )
        ontology = load_ontology(str(onto_path))
        rows = [
            {"article_id": "a0", "source": "arcinfo.ch", "published_at": "d", "text": "Un."},
            {"article_id": "a1", "source": "inconnu.fr", "published_at": "d", "text": "Deux."},
        ]
        stats = IngestStats()
        recs = list(ingest_articles(write_articles(tmp_path, rows), ontology, stats=stats))
        assert recs[0].outlet == OutletMeta("arcinfo.ch", "Switzerland", "hyper-local", "general")
        assert recs[1].outlet is None
        assert stats.unknown_source == 1

    def test_duplicate_ontology_source(self, tmp_path):
        onto_path = tmp_path / "ontology.csv"
        onto_path.write_text(
            "source,country_region,scale,type\n"
            "a.ch,Switzerland,regional,general\n"
            "a.ch,Switzerland,national,general\n",
            encoding="utf-8",
        )
        with pytest.raises(DataError, match="duplicate"):
            load_ontology(str(onto_path))


class TestSegment:
    def test_terminal_punctuation_split(self):
        sents = segment(art("Il pleut. Pourquoi ?"))
        assert [s.text for s in sents] == ["Il pleut.", "Pourquoi ?"]

    def test_abbreviation_guard(self):
        sents = segment(art("M. Dupont est arrivé."))
        assert [s.text for s in sents] == ["M. Dupont est arrivé."]

    def test_hand_segmented_fixture(self):
        sents = segment(art(french_sentences.TEXT))
        assert [s.text for s in sents] == french_sentences.SENTENCES

    def test_sent_ids_contiguous(self):
        sents = segment(art(french_sentences.TEXT))
        assert [s.sent_id for s in sents] == list(range(len(sents)))

    def test_single_sentence_no_terminal(self):
        sents = segment(art("Une phrase sans ponctuation finale"))
        assert [s.text for s in sents] == ["Une phrase sans ponctuation finale"]

    def test_deterministic(self):
        a = segment(art(french_sentences.TEXT))
        b = segment(art(french_sentences.TEXT))
        assert a == b

    @given(st.lists(st.sampled_from(french_sentences.SENTENCES), min_size=1, max_size=30))
    def test_concatenation_recovers_text(self, chosen):
        # joining segmented sentences recovers the text modulo whitespace
        text = "\n".join(chosen)
        sents = segment(art(text))
        assert [s.sent_id for s in sents] == list(range(len(sents)))
        assert "".join(s.text for s in sents).replace(" ", "") == text.replace(
            " ", ""
        ).replace("\n", "")


class TestBuildContext:
    def make(self, n):
        return segment(art(" ".join(f"Phrase numéro {i} ici." for i in range(n))))

    def test_single_sentence_radius_three(self):
        sents = segment(art("Seule phrase."))
        ctx = build_context(sents, 0, 3)
        assert ctx.context_text == "<tgt>Seule phrase.</tgt>"

    def test_middle_target_radius_one(self):
        sents = self.make(5)
        ctx = build_context(sents, 2, 1)
        assert ctx.context_text == (
            "Phrase numéro 1 ici. </s> <tgt>Phrase numéro 2 ici.</tgt> </s> Phrase numéro 3 ici."
        )

    def test_left_clamp(self):
        sents = self.make(7)
        ctx = build_context(sents, 0, 3)
        assert ctx.context_text == (
            "<tgt>Phrase numéro 0 ici.</tgt> </s> Phrase numéro 1 ici."
            " </s> Phrase numéro 2 ici. </s> Phrase numéro 3 ici."
        )

    def test_unknown_sent_id(self):
        with pytest.raises(DataError):
            build_context(self.make(3), 9, 1)

    def test_radius_zero_round_trip(self):
        sents = self.make(4)
        ctx = build_context(sents, 1, 0)
        assert ctx.context_text == "<tgt>Phrase numéro 1 ici.</tgt>"
        stripped = ctx.context_text.removeprefix("<tgt>").removesuffix("</tgt>")
        assert stripped == sents[1].text

    def test_target_verbatim_between_markers(self):
        sents = segment(art(french_sentences.TEXT))
        for sid in (0, 5, len(sents) - 1):
            ctx = build_context(sents, sid, 3)
            assert f"<tgt>{sents[sid].text}</tgt>" in ctx.context_text
