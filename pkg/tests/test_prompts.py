"""Prompt asset integrity, boundaries and rendering."""

import pytest

import plainbench.prompts as prompts


def test_checksums_verify():
    digests = prompts.verify_checksums()
    assert set(digests) == set(prompts.CANONICAL_ASSETS)


def test_asset_boundaries():
    # first/last words pin that extraction captured whole texts
    system = prompts.asset_text("system")
    assert system.startswith("You are tasked with adapting a list of sentences")
    assert system.endswith("omit any unnecessary information.")
    assert "\n" not in system  # single paragraph

    baseline = prompts.asset_text("baseline")
    assert baseline.startswith("You are tasked with adapting")
    assert baseline.endswith("omit any unnecessary information.")
    assert baseline.count(prompts.GUIDELINES_MARKER) == 1

    guidelines = prompts.asset_text("guidelines")
    assert guidelines.startswith("These are guidelines for plain text adaptation")
    assert guidelines.endswith("norepinephrine (NE).//")
    assert '"K8 (8th grade level students, schooling age 13 to 14)"' in guidelines

    student = prompts.asset_text("student_persona")
    assert student.startswith("You are a smart 13 to 14-year-old student.")
    assert "Here are up to 5 questions you might ask:" in student
    assert student.endswith("replaced with simpler words?")

    integration = prompts.asset_text("integration")
    assert integration.startswith("You are tasked with adapting")
    assert "Final Output:" in integration
    assert integration.endswith("improved based on the questions asked.")


def test_sentence_list_format_stated_in_system_prompt():
    assert '["SENTENCE_1", "SENTENCE_2", ..., "SENTENCE_N"]' in \
        prompts.asset_text("system")


def test_render_system_is_identity():
    assert prompts.render_prompt("system") == prompts.asset_text("system")


def test_render_baseline_injects_guidelines_under_marker():
    rendered = prompts.render_baseline_prompt()
    assert rendered.startswith(prompts.asset_text("baseline"))
    # marker now appears twice: inline mention + the appended heading
    assert rendered.count(prompts.GUIDELINES_MARKER) == 2
    heading_pos = rendered.rfind(prompts.GUIDELINES_MARKER)
    below = rendered[heading_pos + len(prompts.GUIDELINES_MARKER):]
    assert below.strip() == prompts.asset_text("guidelines")


def test_missing_placeholder_named():
    with pytest.raises(ValueError, match="guidelines"):
        prompts.render_prompt("baseline")


def test_unexpected_binding_rejected():
    with pytest.raises(ValueError, match="unexpected"):
        prompts.render_prompt("system", {"guidelines": "text"})


def test_unknown_asset_rejected():
    with pytest.raises(KeyError):
        prompts.asset("no_such_prompt")
    with pytest.raises(KeyError):
        prompts.asset_text("no_such_prompt")


def test_repair_reminder_restates_output_contract():
    reminder = prompts.asset_text("repair_reminder")
    assert "Return only the list of adaptations" in reminder
    assert "same length" in reminder


def test_tampered_asset_detected(monkeypatch):
    real = prompts._read_asset_file

    def tampered(name):
        text = real(name)
        return text + "\nextra line" if name == "system.txt" else text

    monkeypatch.setattr(prompts, "_read_asset_file", tampered)
    monkeypatch.setattr(prompts, "_cache", {})
    with pytest.raises(prompts.PromptIntegrityError, match="system"):
        prompts.verify_checksums()
