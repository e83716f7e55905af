import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duplexkit.core.tokens import (
    EndOfTurn,
    Header,
    Modality,
    Text,
    TimedWord,
    Unit,
)
from duplexkit.corpus import (
    MAX_SAMPLE_TOKENS,
    DialogueRecord,
    DialogueTurn,
    FilterRules,
    InterruptionAnnotation,
    dialogue_from_json,
    dialogue_to_json,
    filter_sample,
    form_interleaved,
    insert_interruption_record,
    render_training_sample,
    sample_to_json,
    split_by_headers,
)
from duplexkit.errors import DuplexError, TimelineError
from duplexkit.frontend.interleave import InterleaveState, flush, interleave
from duplexkit.frontend.units import TimedUnit

T = 40


def units(end_ms, start_ms=0):
    return tuple(TimedUnit(Unit((t // T) % 1024), t)
                 for t in range(start_ms, end_ms, T))


def w(surface, a, b):
    return TimedWord(surface, a, b)


class TestFormInterleaved:
    def test_empty_transcript_pure_units(self):
        log = units(400)
        out = form_interleaved([], log)
        assert out == [tu.unit for tu in log]

    def test_one_word_covering_everything(self):
        log = units(400)
        out = form_interleaved([w("hi", 0, 400)], log)
        assert out[0] == Text("hi")
        assert out[1:] == [tu.unit for tu in log]

    def test_units_between_words_preserved(self):
        log = units(800)
        out = form_interleaved([w("a", 0, 200), w("b", 400, 600)], log)
        # 5 units sit in [200, 400); they must appear between the groups
        texts = [i for i, t in enumerate(out) if isinstance(t, Text)]
        between = out[texts[0] + 1:texts[1]]
        in_span_a = [t for t in between if t in
                     [tu.unit for tu in log if tu.start_ms < 200]]
        emitted_units = [t for t in out if isinstance(t, Unit)]
        assert emitted_units == [tu.unit for tu in log]  # none lost

    def test_non_monotone_rejected(self):
        with pytest.raises(TimelineError):
            form_interleaved([w("b", 100, 200), w("a", 0, 50)], units(400))

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.integers(0, 2000), st.integers(0, 500)),
                    max_size=5),
           st.integers(min_value=1, max_value=60))
    def test_offline_equals_online_with_flush(self, word_shapes, n_units):
        t = 0
        words = []
        for i, (gap, dur) in enumerate(sorted(word_shapes)):
            start = t + gap
            words.append(w(f"w{i}", start, start + dur))
            t = start + dur
        log = units(n_units * T)
        offline = form_interleaved(words, log)
        state = InterleaveState()
        online = []
        for word in words:  # one word per confirmation batch
            state, out = interleave(state, [word], log, gap_cap_ms=None)
            online.extend(out)
        state, tail = flush(state, log, T)
        online.extend(tail)
        assert offline == online


def clean_dialogue():
    return DialogueRecord(turns=(
        DialogueTurn("User", (w("你好", 0, 200),), units(400)),
        DialogueTurn("Machine", (w("哈囉", 400, 600),), units(800, 400)),
        DialogueTurn("User", (w("再見", 800, 1000),), units(1200, 800)),
        DialogueTurn("Machine", (w("掰掰", 1200, 1400),), units(1600, 1200)),
    ))


class TestInsertInterruption:
    def ten_word_machine_turn(self):
        words = tuple(w(f"字{i}", i * 100, (i + 1) * 100) for i in range(10))
        return DialogueRecord(turns=(
            DialogueTurn("User", (w("問", 0, 50),), ()),
            DialogueTurn("Machine", words, units(1000)),
        ))

    def test_split_parse_back(self):
        dialogue = self.ten_word_machine_turn()
        note = InterruptionAnnotation(
            turn_index=1, split_word_index=6, interrupter="User",
            words=(w("等", 600, 650), w("一", 650, 700), w("下", 700, 750)))
        dialogue = insert_interruption_record(dialogue, note)
        sample = render_training_sample(dialogue, Modality.TEXT, Modality.TEXT,
                                        role="R", family="pretrain")
        segments = split_by_headers(sample.token_sequence)
        speakers = [s for s, _ in segments]
        assert speakers == ["system", "User", "Machine", "User", "Machine"]
        machine_parts = [toks for s, toks in segments if s == "Machine"]
        interruption = [toks for s, toks in segments if s == "User"][1]
        def text_len(toks):
            return sum(1 for t in toks if isinstance(t, Text))
        assert (text_len(machine_parts[0]), text_len(interruption),
                text_len(machine_parts[1])) == (6, 3, 4)

    def test_self_interruption_rejected(self):
        dialogue = self.ten_word_machine_turn()
        with pytest.raises(DuplexError) as exc:
            insert_interruption_record(dialogue, InterruptionAnnotation(
                turn_index=1, split_word_index=2, interrupter="Machine"))
        assert "consistency" in str(exc.value)

    def test_split_at_zero(self):
        dialogue = self.ten_word_machine_turn()
        note = InterruptionAnnotation(turn_index=1, split_word_index=0,
                                      interrupter="User",
                                      words=(w("喂", 0, 50),))
        dialogue = insert_interruption_record(dialogue, note)
        sample = render_training_sample(dialogue, Modality.TEXT, Modality.TEXT,
                                        role="R", family="pretrain")
        segments = split_by_headers(sample.token_sequence)
        machine_parts = [toks for s, toks in segments if s == "Machine"]
        assert sum(1 for t in machine_parts[0] if isinstance(t, Text)) == 0
        assert sum(1 for t in machine_parts[1] if isinstance(t, Text)) == 10

    def test_bad_indices_rejected(self):
        dialogue = self.ten_word_machine_turn()
        with pytest.raises(DuplexError):
            insert_interruption_record(dialogue, InterruptionAnnotation(
                turn_index=5, split_word_index=0, interrupter="User"))
        with pytest.raises(DuplexError):
            insert_interruption_record(dialogue, InterruptionAnnotation(
                turn_index=1, split_word_index=11, interrupter="User"))


class TestFilter:
    RULES = FilterRules(hallucination_patterns=("請訂閱",))

    def test_all_english_rejected(self):
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("hello", 0, 100), w("there", 100, 200)), ()),
            DialogueTurn("Machine", (w("hi", 200, 300),), ()),
        ))
        verdict = filter_sample(dialogue, self.RULES)
        assert (verdict.keep, verdict.reason) == (False, "language")

    def test_empty_middle_turn_rejected(self):
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("你好", 0, 100),), ()),
            DialogueTurn("Machine", (), ()),
            DialogueTurn("User", (w("在嗎", 200, 300),), ()),
        ))
        verdict = filter_sample(dialogue, self.RULES)
        assert (verdict.keep, verdict.reason) == (False, "missing_turn")

    def test_same_speaker_adjacency_rejected(self):
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("你好", 0, 100),), ()),
            DialogueTurn("User", (w("在嗎", 200, 300),), ()),
        ))
        verdict = filter_sample(dialogue, self.RULES)
        assert (verdict.keep, verdict.reason) == (False, "missing_turn")

    def test_hallucination_rejected_first(self):
        # the pattern fires before the structural empty-turn check
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("請", 0, 50), w("訂閱", 50, 100)), ()),
            DialogueTurn("Machine", (), ()),
        ))
        verdict = filter_sample(dialogue, self.RULES)
        assert (verdict.keep, verdict.reason) == (False, "hallucination")

    def test_clean_mandarin_kept(self):
        verdict = filter_sample(clean_dialogue(), self.RULES)
        assert verdict.keep and verdict.reason is None

    def test_code_switched_kept(self):
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("我想看", 0, 100), w("Netflix", 100, 200)), ()),
            DialogueTurn("Machine", (w("好的沒問題", 200, 300),), ()),
        ))
        assert filter_sample(dialogue, self.RULES).keep

    def test_digits_only_not_language_filtered(self):
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("123", 0, 100),), ()),
            DialogueTurn("Machine", (w("456", 100, 200),), ()),
        ))
        assert filter_sample(dialogue, self.RULES).keep


class TestRender:
    def test_recognition_style_sample(self):
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", (w("你好", 0, 200),), units(400)),
            DialogueTurn("Machine", (w("你好", 0, 200),), ()),
        ))
        sample = render_training_sample(
            dialogue, Modality.UNIT, Modality.TEXT,
            role="You are a speech recognition model.", family="pretrain")
        segments = split_by_headers(sample.token_sequence)
        user = [toks for s, toks in segments if s == "User"][0]
        machine = [toks for s, toks in segments if s == "Machine"][0]
        assert all(isinstance(t, (Unit, EndOfTurn)) for t in user)
        assert all(isinstance(t, (Text, EndOfTurn)) for t in machine)
        assert sample.system_prompt.startswith(
            "Modality: {User: unit, Machine: text}")

    def test_dialogue_text_to_hybrid(self):
        sample = render_training_sample(clean_dialogue(), Modality.TEXT,
                                        Modality.HYBRID, role="R")
        segments = split_by_headers(sample.token_sequence)
        for speaker, toks in segments[1:]:
            content = [t for t in toks if not isinstance(t, EndOfTurn)]
            if speaker == "User":
                assert all(isinstance(t, Text) for t in content)
            elif speaker == "Machine":
                assert any(isinstance(t, Unit) for t in content)
                assert any(isinstance(t, Text) for t in content)

    def test_text_to_text_dialogue_rejected(self):
        with pytest.raises(ValueError) as exc:
            render_training_sample(clean_dialogue(), Modality.TEXT,
                                   Modality.TEXT, role="R", family="dialogue")
        assert "not a dialogue combination" in str(exc.value)
        assert "text->hybrid" in str(exc.value)
        # the same pair is legal for the pretraining family
        render_training_sample(clean_dialogue(), Modality.TEXT, Modality.TEXT,
                               role="R", family="pretrain")

    def test_truncation_to_max_length(self):
        words = tuple(w(f"字{i}", i * 40, (i + 1) * 40) for i in range(9000))
        dialogue = DialogueRecord(turns=(
            DialogueTurn("User", words, units(9000 * 40)),
            DialogueTurn("Machine", (w("好", 360000, 360040),), ()),
        ))
        sample = render_training_sample(dialogue, Modality.HYBRID,
                                        Modality.TEXT, role="R")
        assert len(sample.token_sequence) == MAX_SAMPLE_TOKENS

    def test_round_trip_recovers_turns(self):
        dialogue = clean_dialogue()
        sample = render_training_sample(dialogue, Modality.HYBRID,
                                        Modality.HYBRID, role="R")
        segments = split_by_headers(sample.token_sequence)[1:]
        assert len(segments) == len(dialogue.turns)
        for (speaker, toks), turn in zip(segments, dialogue.turns):
            assert speaker == turn.speaker
            texts = [t.surface for t in toks if isinstance(t, Text)]
            unit_multiset = sorted(t.index for t in toks if isinstance(t, Unit))
            assert texts == [word.surface for word in turn.words]
            assert unit_multiset == sorted(tu.unit.index for tu in turn.units)


class TestCodec:
    def test_dialogue_json_round_trip(self):
        dialogue = insert_interruption_record(
            clean_dialogue(),
            InterruptionAnnotation(turn_index=1, split_word_index=1,
                                   interrupter="User",
                                   words=(w("喂", 500, 550),)))
        assert dialogue_from_json(dialogue_to_json(dialogue)) == dialogue

    def test_sample_json_shape(self):
        sample = render_training_sample(clean_dialogue(), Modality.TEXT,
                                        Modality.HYBRID, role="R")
        obj = sample_to_json(sample)
        assert obj["kind"] == "sample"
        assert obj["input_modality"] == "text"
        assert isinstance(obj["tokens"], list)
