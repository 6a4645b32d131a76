import csv
import json
import os

import pytest
from hypothesis import given, settings, strategies as st

from seutrace.bmc import BOUNDED, FAILED, PROVEN
from seutrace.campaign import (SAFE, UNDETERMINED, VULNERABLE, BitClassification, ConfigError, build_target,
                               classify, compare_report, config_from_dict, desk_config, load_config, rank_bits,
                               run_campaign, write_report)
from seutrace.campaign.cli import main
from seutrace.campaign.run import FAMILY_EFFECT
from seutrace import oracle as O
from seutrace.rv32 import CoreConfig

CUSTOM = "a_x1_small: assert property (valid && rd_addr == 5'd1 |-> rd_wdata <= 32'd10);\n"
BITS = "pc_q:[0-3]|rf_x1:[0-7]|rf_x7:[0-3]"


@pytest.fixture(scope="module")
def prop_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("props") / "x1.sva"
    p.write_text(CUSTOM)
    return str(p)


@pytest.fixture(scope="module")
def small_report(prop_file):
    return run_campaign(desk_config(families=("custom",), property_file=prop_file, bits=BITS))


# ------------------------------------------------------------ config


def test_config_defaults_and_validation():
    cfg = desk_config()
    assert cfg.k_max == 12 and cfg.mode == "harvest" and cfg.core.regfile_size == 8
    for bad in (dict(k_max=0), dict(families=()), dict(families=("nope",)), dict(budget=0),
                dict(workers=0), dict(mode="x"), dict(solver="external"), dict(families=("custom",))):
        with pytest.raises(ConfigError):
            desk_config(**bad)


def test_config_file(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[core]\nregfile_size = 16\n[env]\nprogram = "loop"\n[campaign]\nfamilies = ["crash"]\nk_max = 10\n')
    cfg = load_config(str(p))
    assert (cfg.core.regfile_size, cfg.env.mode, cfg.families, cfg.k_max) == (16, "concrete", ("crash",), 10)
    p.write_text("[core\n")
    with pytest.raises(ConfigError, match="TOML"):
        load_config(str(p))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))
    with pytest.raises(ConfigError, match="section"):
        config_from_dict({"cores": {}})
    with pytest.raises(ConfigError):
        config_from_dict({"core": {"regfile_size": 12}})
    with pytest.raises(ConfigError):
        config_from_dict({"env": {"colour": 1}})


def test_bit_selection(desk_target):
    cfg = desk_config(bits="pc_q:[0-3]")
    assert [desk_target.census.entries[b].label for b in cfg.select_bits(desk_target.census)] == \
        ["pc_q:0", "pc_q:1", "pc_q:2", "pc_q:3"]
    assert desk_config(bits="0-9").select_bits(desk_target.census) == list(range(10))
    for bad in ("9-0", "zzz", "(", "0-100000"):
        with pytest.raises(ConfigError):
            desk_config(bits=bad).select_bits(desk_target.census)


# ------------------------------------------------------ classification


verdict_st = st.dictionaries(st.sampled_from(["p0", "p1", "p2", "p3"]), st.sampled_from([PROVEN, BOUNDED, FAILED]),
                             min_size=1)


@settings(max_examples=100, deadline=None)
@given(verdicts=verdict_st, fams=st.lists(st.sampled_from(list(FAMILY_EFFECT)), min_size=4, max_size=4))
def test_classify_invariants(verdicts, fams, desk_target):
    families = {f"p{i}": f for i, f in enumerate(fams)}
    c = classify(0, desk_target.census, verdicts, families)
    failed = [p for p, v in verdicts.items() if v == FAILED]
    assert c.score == len(failed)
    assert (c.label == VULNERABLE) == bool(failed)
    assert (c.label == SAFE) == all(v == PROVEN for v in verdicts.values())
    assert c.effects == {FAMILY_EFFECT[families[p]] for p in failed}
    if c.label == UNDETERMINED:
        assert BOUNDED in verdicts.values() and not failed


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.sampled_from(["a_q", "b_q", "pc_q"]), st.integers(0, 31)),
                unique_by=lambda t: (t[1], t[2]), max_size=30))
def test_rank_order(items):
    cls = [BitClassification(i, r, b, score=s) for i, (s, r, b) in enumerate(items)]
    ranked = rank_bits(cls)
    keys = [(-c.score, c.register, c.bit_index) for c in ranked]
    assert keys == sorted(keys) and len(ranked) == len(cls)


# ------------------------------------------------------------ campaign


def test_report_conservation(small_report):
    rep = small_report
    assert sum(rep.counts().values()) == rep.total_bits == len(rep.bits)
    for rows in rep.tables().values():
        for row in rows.values():
            assert sum(row.values()) == rep.total_bits
    stats = rep.replay_stats()
    assert stats["witnesses"] == len(rep.vulnerable()) > 0 and stats["mismatches"] == 0


def test_small_campaign_witnesses_are_oracle_effects(small_report, desk_target):
    # the custom property watches only part of the retire interface, so the
    # oracle may see more; every formal violation must be a real corruption
    res = O.exhaustive_campaign(desk_target.golden, O.Stimulus(), 12, bits=small_report.bits)
    assert small_report.vulnerable() <= {b for b, e in res.effects.items() if O.SDC in e}
    ag = compare_report(small_report, res)
    assert all(why.startswith("undetermined") for _, why in ag.contradictions)


def test_write_report(small_report, tmp_path):
    paths = write_report(small_report, str(tmp_path / "rep"))
    for k in ("properties", "bits", "summary", "json"):
        assert os.path.getsize(paths[k]) > 0
    with open(paths["bits"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == small_report.total_bits
    for r in rows:
        if r["label"] == VULNERABLE:
            assert os.path.exists(os.path.join(tmp_path / "rep", r["evidence_ref"]))
    summary = json.loads(open(paths["json"]).read())
    assert summary["replay"]["mismatches"] == 0


def test_cache_resume(prop_file, tmp_path):
    cache = str(tmp_path / "v.jsonl")
    cfg = desk_config(families=("custom",), property_file=prop_file, bits="rf_x1:[0-5]", cache=cache)
    first = run_campaign(cfg)
    second = run_campaign(cfg)
    assert all(r.cached for r in second.verdicts.values())
    assert {b: c.label for b, c in first.classifications.items()} == \
        {b: c.label for b, c in second.classifications.items()}
    assert second.solver_calls < first.solver_calls
    # a truncated trailing line is ignored
    with open(cache, "a") as fh:
        fh.write('{"key": [1, 2')
    assert run_campaign(cfg).counts() == first.counts()


def test_unconsumed_register_is_coi_safe(prop_file):
    core = CoreConfig(regfile_size=8, debug_register_width=4)
    rep = run_campaign(desk_config(families=("custom",), property_file=prop_file, core=core, bits="dbg_scratch_q:.*"))
    assert len(rep.coi_safe) == 4
    assert all(r.method == "coi" for r in rep.verdicts.values())
    assert rep.counts()[SAFE] == 4


# ----------------------------------------------------------------- CLI


def _toml(tmp_path, prop_file, extra=""):
    p = tmp_path / "c.toml"
    p.write_text(f'[core]\nregfile_size = 8\n[env]\nprogram = "loop"\n[campaign]\nfamilies = ["custom"]\n'
                 f'property_file = "{prop_file}"\n{extra}')
    return str(p)


def test_cli_usage_errors(capsys, tmp_path):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["campaign", "--config", str(tmp_path / "none.toml")]) == 1
    assert main(["check", "--bit", "pc_q:99", "--property", "crash.ecall_mmode"]) == 1
    assert main(["check", "--bit", "pc_q:2", "--property", "crash.nope"]) == 1
    assert "seutrace" in capsys.readouterr().err


def test_cli_check_and_replay(capsys, tmp_path):
    out = tmp_path / "w.trace"
    assert main(["check", "--bit", "pc_q:0", "--property", "crash.insn_misaligned", "--trace-out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "Failed@" in text and "replay: ok" in text
    assert main(["replay", "--trace", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    tampered = [ln.replace(ln.split()[-1], "0x1") if " reg pc_q " in ln and ln.startswith("3 ") else ln
                for ln in lines]
    out.write_text("\n".join(tampered) + "\n")
    assert main(["replay", "--trace", str(out)]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_cli_campaign_and_diff(capsys, tmp_path, prop_file):
    cfg = _toml(tmp_path, prop_file)
    rep = tmp_path / "rep"
    assert main(["campaign", "--config", cfg, "--bits", "rf_x1:[0-3]", "--out", str(rep)]) == 0
    assert (rep / "bits.csv").exists() and "Vulnerable" in capsys.readouterr().out
    assert main(["diff", "--config", cfg, "--report", str(rep), "--families", "custom"]) in (0, 2)
    assert "agreement on decided bits: 100.0%" in capsys.readouterr().out
    ocsv = tmp_path / "o.csv"
    assert main(["oracle", "--config", cfg, "--bits", "rf_x1:[0-3]", "--out", str(ocsv)]) == 0
    assert main(["diff", "--config", cfg, "--report", str(rep), "--oracle", str(ocsv), "--families", "custom"]) in (0, 2)
    assert "agreement on decided bits: 100.0%" in capsys.readouterr().out
