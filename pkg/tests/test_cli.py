import json
import subprocess
import sys

import pytest

from heritage_forge.cli import PipelineConfig, main
from heritage_forge.store import parse_ntriples
from tests.conftest import DATA, FIXTURES

RECORD = str(DATA / "versailles.json")


def body(text: str) -> str:
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))


@pytest.fixture()
def converted(tmp_path, monkeypatch):
    monkeypatch.delenv("HERITAGE_FORGE_BASE", raising=False)
    out = tmp_path / "out.nt"
    assert main(["convert", RECORD, "-r", "versailles", "-o", str(out)]) == 0
    return out


def test_convert_matches_golden(converted):
    text = converted.read_text(encoding="utf-8")
    assert body(text) == (FIXTURES / "versailles.golden.nt").read_text(encoding="utf-8")


def test_export_header(converted):
    header = [l for l in converted.read_text(encoding="utf-8").splitlines() if l.startswith("#")]
    assert header[0].startswith("# generator: heritage-forge ")
    assert "# hash: blake2b-128" in header
    assert "# base: https://example.org/heritage/" in header
    assert any(l.startswith("# input: versailles.json sha256:") for l in header)
    assert any("replacedTerm" in l for l in header)


def test_validate_golden(converted, capsys):
    assert main(["validate", str(converted)]) == 0
    assert "0 errors" in capsys.readouterr().out


def test_query_title(converted, capsys):
    assert main(["query", str(converted), "-q", str(FIXTURES / "title.rq")]) == 0
    assert capsys.readouterr().out == "title\nlé de tenture\n"


def test_stats(converted, capsys):
    assert main(["stats", str(converted), "--json"]) == 0
    s = json.loads(capsys.readouterr().out)
    assert s["triples"] == 40
    assert s["classes"]["http://www.cidoc-crm.org/cidoc-crm/E22_Man-Made_Object"] == 1


def test_annotate(converted, tmp_path, capsys):
    out = tmp_path / "ann.nt"
    rc = main(["annotate", str(converted), str(DATA / "predictions.sample.json"),
               "-t", "thesaurus.sample", "-o", str(out)])
    assert rc == 0
    g = parse_ntriples(out.read_text(encoding="utf-8"))
    assert len(g) > 40
    assert main(["validate", str(out)]) == 0


def test_convert_with_enrichment_and_turtle(tmp_path):
    recs = tmp_path / "r.json"
    recs.write_text(json.dumps({"institution": "mtt", "id": "9", "fields": [
        {"label": "Technique", "value": "Damask"}, {"label": "Matière", "value": "soie"}]}), encoding="utf-8")
    out = tmp_path / "o.nt"
    assert main(["convert", str(recs), "-r", "production", "-t", "thesaurus.sample", "-o", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "<http://data.silknow.org/vocabulary/168>" in text
    assert "replacedTerm" in body(text)
    ttl = tmp_path / "o.ttl"
    assert main(["convert", str(recs), "-r", "production", "--format", "ttl", "-o", str(ttl)]) == 0
    assert "@prefix crm:" in ttl.read_text(encoding="utf-8")


def test_missing_input_names_file(tmp_path, capsys):
    assert main(["convert", str(tmp_path / "nope.json"), "-r", "versailles"]) == 2
    assert "nope.json" in capsys.readouterr().err


def test_parse_error_names_file_and_position(tmp_path, capsys):
    bad = tmp_path / "bad.nt"
    bad.write_text('<http://ex.org/s> <http://ex.org/p> "x" .\n<http://ex.org/s> <http://ex.org/p>\n')
    assert main(["validate", str(bad)]) == 2
    assert f"{bad}:2:" in capsys.readouterr().err


def test_query_error_names_file(converted, tmp_path, capsys):
    q = tmp_path / "b.rq"
    q.write_text("SELECT ?x WHERE { ?y a ?z . }")
    assert main(["query", str(converted), "-q", str(q)]) == 2
    assert f"{q}:1:" in capsys.readouterr().err


def test_validation_errors_and_strict(tmp_path):
    g = tmp_path / "g.nt"
    g.write_text("<http://ex.org/s> <http://www.cidoc-crm.org/cidoc-crm/P102_has_title> <http://ex.org/t> .\n")
    assert main(["validate", str(g)]) == 0
    assert main(["validate", "--strict", str(g)]) == 1
    g.write_text("<http://ex.org/s> <http://ex.org/undeclared> <http://ex.org/t> .\n")
    assert main(["validate", str(g)]) == 1


def test_base_precedence(tmp_path, monkeypatch):
    out = tmp_path / "o.nt"
    monkeypatch.setenv("HERITAGE_FORGE_BASE", "https://env.example/kg/")
    main(["convert", RECORD, "-r", "versailles", "-o", str(out)])
    assert "<https://env.example/kg/object/" in out.read_text()
    main(["convert", RECORD, "-r", "versailles", "--base", "https://flag.example/", "-o", str(out)])
    assert "<https://flag.example/object/" in out.read_text()
    monkeypatch.delenv("HERITAGE_FORGE_BASE")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"base_namespace": "https://cfg.example/", "rule_paths": ["versailles"]}))
    assert main(["convert", RECORD, "--config", str(cfg), "-o", str(out)]) == 0
    assert "<https://cfg.example/object/" in out.read_text()


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"base_namespace": "https://no-slash"}))
    assert main(["convert", RECORD, "-r", "versailles", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["convert", RECORD, "-r", "versailles", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_pipeline_config_invariant():
    with pytest.raises(ValueError):
        PipelineConfig(base_namespace="https://x.org/kg")


def test_deterministic_and_worker_independent(tmp_path, monkeypatch):
    monkeypatch.delenv("HERITAGE_FORGE_BASE", raising=False)
    recs = tmp_path / "many.json"
    recs.write_text(json.dumps([{"institution": "v", "id": str(i), "fields": [
        {"label": "title", "value": f"t{i}"}, {"label": "Domaine", "value": "Textiles"}]} for i in range(40)]))
    outs = []
    for workers in ("1", "1", "3"):
        out = tmp_path / f"o{len(outs)}.nt"
        assert main(["convert", str(recs), "-r", "versailles", "--workers", workers, "-o", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_log_json(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "heritage_forge.cli", "convert", "--log-json", "-v",
                           RECORD, "-r", "versailles", "-o", str(tmp_path / "o.nt")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    lines = [json.loads(l) for l in proc.stderr.splitlines() if l.startswith("{")]
    assert lines and all({"level", "logger", "message"} <= set(l) for l in lines)
