from __future__ import annotations

import json
import shutil

import pytest

from promptevo.cli import FINAL_JSON, FINAL_SAMPLE, JOURNAL, SUMMARY, main
from scripted import EXCEPTION_RULE, RENDERER, SUBCLASS_RULE, FakeChatServer, write_run_files


@pytest.fixture(scope="module")
def recorded(tmp_path_factory):
    """One recorded run through the fake chat server, shared by the tests below."""
    root = tmp_path_factory.mktemp("recorded")
    with FakeChatServer() as server:
        llm = {"mode": "record", "base_url": server.url, "model": "fake", "auth_env": None, "cassette": "cassette.jsonl"}
        config = write_run_files(root, llm)
        code = main(["optimize", "--config", str(config)])
    assert code == 0
    return root


def replay_config(root, iterations: int = 3):
    return write_run_files(root, {"mode": "replay", "cassette": "cassette.jsonl"}, iterations)


class TestOptimize:
    def test_record_writes_artifacts(self, recorded):
        out = recorded / "out"
        for name in (JOURNAL, FINAL_JSON, FINAL_SAMPLE, SUMMARY):
            assert (out / name).is_file()
        art = json.loads((out / FINAL_JSON).read_text())
        assert art["rules"] == [EXCEPTION_RULE, SUBCLASS_RULE]
        assert art["fitness"] == 100.0
        sample = (out / FINAL_SAMPLE).read_text()
        assert sample.startswith(f"# focal method: {RENDERER}")
        assert "Subclass information:" in sample
        assert "final" in (out / SUMMARY).read_text()
        assert (recorded / "cassette.jsonl").stat().st_size > 0

    def test_replay_reproduces_the_recording(self, recorded, tmp_path, capsys):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        config = replay_config(tmp_path)
        assert main(["optimize", "--config", str(config), "--output", str(tmp_path / "again")]) == 0
        assert (tmp_path / "again" / JOURNAL).read_bytes() == (recorded / "out" / JOURNAL).read_bytes()
        assert "final prompt:" in capsys.readouterr().out

    def test_resume_of_finished_run(self, recorded, tmp_path):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        shutil.copytree(recorded / "out", tmp_path / "out")
        config = replay_config(tmp_path)
        before = (tmp_path / "out" / JOURNAL).read_bytes()
        assert main(["optimize", "--config", str(config), "--resume"]) == 0
        assert (tmp_path / "out" / JOURNAL).read_bytes() == before

    def test_resume_partial_run(self, recorded, tmp_path):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        config = replay_config(tmp_path)
        (tmp_path / "out").mkdir()
        full = (recorded / "out" / JOURNAL).read_bytes()
        (tmp_path / "out" / JOURNAL).write_bytes(b"".join(full.splitlines(keepends=True)[:2]))
        assert main(["optimize", "--config", str(config), "--resume"]) == 0
        assert (tmp_path / "out" / JOURNAL).read_bytes() == full

    def test_resume_with_other_seed_is_refused(self, recorded, tmp_path, capsys):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        shutil.copytree(recorded / "out", tmp_path / "out")
        config = replay_config(tmp_path)
        assert main(["optimize", "--config", str(config), "--resume", "--seed", "99"]) == 1
        assert "ResumeError" in capsys.readouterr().err


class TestConfigErrors:
    def test_missing_cassette_names_the_path(self, tmp_path, capsys):
        config = replay_config(tmp_path)
        assert main(["optimize", "--config", str(config)]) == 2
        assert str(tmp_path / "cassette.jsonl") in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        config = replay_config(tmp_path)
        data = json.loads(config.read_text())
        data["optimizer"]["populaton_size"] = 5
        config.write_text(json.dumps(data))
        assert main(["optimize", "--config", str(config)]) == 2
        assert "populaton_size" in capsys.readouterr().err

    def test_invalid_optimizer_values(self, tmp_path):
        config = replay_config(tmp_path)
        data = json.loads(config.read_text())
        data["optimizer"]["new_prompts_per_iteration"] = 9
        config.write_text(json.dumps(data))
        assert main(["optimize", "--config", str(config)]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["optimize", "--config", str(tmp_path / "none.json")]) == 2

    def test_unknown_focal_in_dev_set(self, recorded, tmp_path, capsys):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        config = replay_config(tmp_path)
        (tmp_path / "dev.json").write_text(json.dumps(["com.acme.Nope#f()"]))
        assert main(["optimize", "--config", str(config)]) == 2
        assert "com.acme.Nope" in capsys.readouterr().err

    def test_bad_parallelism(self, tmp_path):
        config = replay_config(tmp_path)
        assert main(["optimize", "--config", str(config), "--parallelism", "0"]) == 2


class TestOtherCommands:
    def test_evaluate_prompt_file(self, recorded, tmp_path, capsys):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        config = replay_config(tmp_path)
        capsys.readouterr()
        assert main(["evaluate", "--config", str(config), str(recorded / "out" / FINAL_JSON)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("LC 100.00  BC 100.00  fitness 100.00")
        report = json.loads(out[out.index("{") :])
        assert report["line_coverage"] == 100.0

    def test_evaluate_missing_prompt_file(self, tmp_path):
        (tmp_path / "cassette.jsonl").write_text("")
        config = replay_config(tmp_path)
        assert main(["evaluate", "--config", str(config), str(tmp_path / "nope.txt")]) == 2

    def test_extract_context(self, tmp_path, capsys):
        config = replay_config(tmp_path)
        assert main(["extract-context", "--config", str(config), RENDERER]) == 0
        out = capsys.readouterr().out
        bundle = json.loads(out[: out.index("\n}\n") + 2])
        assert bundle["subclass_signatures"]
        assert "Subclass information:" in out

    def test_extract_context_unknown_focal(self, tmp_path, capsys):
        config = replay_config(tmp_path)
        assert main(["extract-context", "--config", str(config), "com.acme.Nope#f()"]) == 1
        assert "com.acme.Nope" in capsys.readouterr().err

    def test_replay_verify(self, recorded, capsys):
        config = recorded / "config.json"
        assert main(["replay-verify", "--config", str(config), str(recorded / "out" / JOURNAL)]) == 0
        assert "replay identical" in capsys.readouterr().out

    def test_replay_verify_detects_tampering(self, recorded, tmp_path, capsys):
        shutil.copy(recorded / "cassette.jsonl", tmp_path / "cassette.jsonl")
        config = replay_config(tmp_path)
        journal = tmp_path / JOURNAL
        journal.write_bytes((recorded / "out" / JOURNAL).read_bytes().replace(b'"best_fitness":12.8125', b'"best_fitness":13.0', 1))
        assert main(["replay-verify", "--config", str(config), str(journal)]) == 1
        assert "journal mismatch: line 2 differs" in capsys.readouterr().out
