"""
어휘 / word-budget 배치 / lexical shortlist 테스트
"""

import pytest

from core.exceptions import InputFormatError, ParameterError, VocabularyError
from decoding.batching import make_batches
from decoding.shortlist import LexTable, build_shortlist, load_frequencies, load_lex
from decoding.vocab import Vocab
from engine.model import EOS_ID, PAD_ID, UNK_ID


@pytest.mark.unit
class TestVocab:

    def test_reserved_ids(self, toy_vocab):
        assert (toy_vocab.eos_id, toy_vocab.unk_id, toy_vocab.pad_id) == (EOS_ID, UNK_ID, PAD_ID)
        assert toy_vocab.token(3) == "w3"

    def test_encode_unknown_and_eos(self, toy_vocab):
        assert toy_vocab.encode("w3 zebra w5", add_eos=True) == [3, UNK_ID, 5, EOS_ID]

    def test_decode_skips_eos_and_pad(self, toy_vocab):
        assert toy_vocab.decode([3, PAD_ID, 4, EOS_ID]) == "w3 w4"

    def test_duplicates_rejected(self):
        with pytest.raises(VocabularyError):
            Vocab(["</s>", "<unk>", "<pad>", "a", "a"])

    def test_file(self, toy_files):
        vocab = Vocab.load(toy_files["vocab"])
        assert len(vocab) == 40 and vocab.lookup("w39") == 39

    def test_ids_follow_line_numbers(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("</s>\n<unk>\n<pad>\nfoo\nbar\n", encoding="utf-8")
        vocab = Vocab.load(path)
        assert vocab.lookup("foo") == 3 and vocab.lookup("bar") == 4

    @pytest.mark.parametrize("text", ["</s>\n<unk>\n<pad>\n\nfoo\n", "</s>\n<unk>\n<pad>\n   \nfoo\n"])
    def test_blank_line_rejected(self, tmp_path, text):
        # Given: 중간에 빈 줄이 있는 어휘 파일
        path = tmp_path / "vocab.txt"
        path.write_text(text, encoding="utf-8")

        # When / Then: 뒤 토큰 id가 밀리는 대신 줄 번호와 함께 거부
        with pytest.raises(VocabularyError, match=":4:"):
            Vocab.load(path)

    def test_id_out_of_range(self, toy_vocab):
        with pytest.raises(VocabularyError):
            toy_vocab.token(40)


@pytest.mark.unit
class TestBatching:

    def test_budget_respected_and_every_sentence_once(self):
        # Given: 길이가 섞인 문장들
        sentences = [[1] * n for n in (5, 1, 3, 8, 2, 2, 4)]

        # When
        batches = make_batches(sentences, word_budget=8)

        # Then
        seen = sorted(i for b in batches for i in b.indices)
        assert seen == list(range(len(sentences)))
        assert all(b.word_count <= 8 for b in batches)

    def test_sentences_grouped_by_length(self):
        sentences = [[1] * n for n in (6, 1, 6, 1)]
        batches = make_batches(sentences, word_budget=2)
        assert [b.indices for b in batches] == [[1, 3], [0], [2]]

    def test_oversized_sentence_gets_own_batch(self):
        batches = make_batches([[1] * 10, [1, 1]], word_budget=4)
        assert [b.indices for b in batches] == [[1], [0]]

    def test_indices_within_batch_keep_input_order(self):
        batches = make_batches([[1, 1], [1], [1, 1], [1]], word_budget=100)
        assert len(batches) == 1
        assert batches[0].indices == [0, 1, 2, 3]

    def test_invalid_budget(self):
        with pytest.raises(ParameterError):
            make_batches([[1]], word_budget=0)


@pytest.mark.unit
class TestShortlist:

    def test_contains_reserved_frequent_and_translations(self, toy_lex, toy_vocab):
        shortlist = build_shortlist([[3, 4, EOS_ID]], toy_lex, toy_vocab, frequent=2, translations=1)
        # EOS, UNK, 빈도 w10 / w11, w3 → w13, w4 → w14
        assert shortlist.ids == (EOS_ID, UNK_ID, 10, 11, 13, 14)

    def test_sorted_unique_without_pad(self, toy_lex, toy_vocab):
        shortlist = build_shortlist([[3, 3, PAD_ID], [5, 9]], toy_lex, toy_vocab)
        assert list(shortlist.ids) == sorted(set(shortlist.ids))
        assert PAD_ID not in shortlist

    def test_translation_limit(self, toy_lex, toy_vocab):
        one = build_shortlist([[3]], toy_lex, toy_vocab, frequent=0, translations=1)
        two = build_shortlist([[3]], toy_lex, toy_vocab, frequent=0, translations=2)
        assert 23 not in one and 23 in two

    def test_unknown_target_tokens_ignored(self, toy_vocab):
        lex = LexTable.from_entries([("w3", "absent", 0.9)], frequent=["missing"])
        assert build_shortlist([[3]], lex, toy_vocab).ids == (EOS_ID, UNK_ID)

    def test_probability_range(self):
        with pytest.raises(InputFormatError):
            LexTable.from_entries([("a", "b", 1.5)])

    def test_equal_probabilities_keep_file_order(self):
        lex = LexTable.from_entries([("a", "x", 0.2), ("a", "y", 0.5), ("a", "z", 0.2)])
        assert [t for t, _ in lex.top_translations("a", 3)] == ["y", "x", "z"]


@pytest.mark.unit
class TestLexFiles:

    def test_load_with_frequencies(self, toy_files):
        lex = load_lex(toy_files["lex"], toy_files["freq"])
        assert lex.frequent == ("w10", "w11", "w12")
        assert lex.top_translations("w3", 1) == (("w13", 0.6),)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("w3 w13 0.5\n", encoding="utf-8")
        with pytest.raises(InputFormatError):
            load_lex(path)

    def test_malformed_count(self, tmp_path):
        path = tmp_path / "freq.tsv"
        path.write_text("w3\tmany\n", encoding="utf-8")
        with pytest.raises(InputFormatError):
            load_frequencies(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFormatError):
            load_lex(tmp_path / "nope.tsv")
