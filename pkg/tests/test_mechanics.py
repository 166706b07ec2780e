"""Test environments, candidate synthesis, interest evaluation, banking."""

import dataclasses

import pytest

from gameforge import agents, gdl, mechanics as mech, rulesetdesign as rd


@pytest.fixture(scope="module")
def envs():
    return mech.builtin_environments()


def candidate(*rule_specs):
    rules = tuple(
        gdl.Rule(gdl.parse_trigger(trig),
                 tuple(gdl.parse_guard(g) for g in guards),
                 tuple(gdl.parse_command(c) for c in code))
        for trig, guards, code in rule_specs)
    return mech.MechanicCandidate(mech.candidate_id(rules), rules, 0)


WALL_DESTROY = ("OVERLAP avatar obstacle", [], ["DESTROY $2"])


# ── builtin_environments ──────────────────────────────────────────────

def test_three_certified_environments(envs):
    assert [e.name for e in envs] == ["wallgap", "lockedchamber",
                                      "hazardcorridor"]
    assert all(e.certified for e in envs)


def test_wallgap_seals_exit(envs):
    wallgap = envs[0]
    assert (5, 2) in wallgap.target_cells
    assert len(wallgap.baseline_cells) == 20  # the open 4×5 left half
    assert not set(wallgap.target_cells) & wallgap.baseline_cells


def test_lockedchamber_ring(envs):
    chamber = envs[1]
    assert len(chamber.target_cells) == 9  # 8 ring walls + the exit inside
    assert (3, 3) in chamber.target_cells


def test_hazard_cells_reachable_but_fatal(envs):
    corridor = envs[2]
    # dying on a hazard still counts as having entered its cell
    assert {(3, y) for y in range(5)} <= corridor.baseline_cells
    assert not set(corridor.target_cells) & corridor.baseline_cells


def test_certification_rerun_matches_shipped(envs):
    for env in envs:
        report = agents.exhaustive_solve(env.definition, 0)
        assert not report.winnable and not report.truncated
        assert frozenset(report.reachable_cells["avatar"]) == \
            env.baseline_cells
        assert not set(env.target_cells) & set(
            report.reachable_cells["avatar"])


# ── synthesize_candidates ─────────────────────────────────────────────

def test_synthesis_distinct_and_deterministic():
    vocab, bounds = mech.default_vocab(), mech.SynthBounds()
    a = mech.synthesize_candidates(vocab, bounds, 50, 3)
    b = mech.synthesize_candidates(vocab, bounds, 50, 3)
    assert len(a) == 50
    assert len({c.id for c in a}) == 50
    assert [c.id for c in a] == [c.id for c in b]


def test_synthesis_respects_bounds():
    vocab = mech.default_vocab()
    bounds = mech.SynthBounds(max_rules=2, max_commands=4)
    for c in mech.synthesize_candidates(vocab, bounds, 60, 9):
        assert 1 <= len(c.rules) <= 2
        assert all(1 <= len(r.code) <= 4 for r in c.rules)
        for r in c.rules:
            names = set()
            t = r.trigger
            if isinstance(t, gdl.OverlapTrigger):
                names |= {t.piece_a, t.piece_b}
            elif isinstance(t, gdl.CountTrigger):
                names.add(t.piece)
            assert names <= set(mech.ROLES)


def test_bounded_space_contains_wall_destroy():
    vocab = mech.default_vocab()
    bounds = mech.SynthBounds(max_rules=1, max_commands=1,
                              fixed_trigger="OVERLAP avatar obstacle")
    cands = mech.synthesize_candidates(vocab, bounds, 40, 5)
    texts = {gdl.command_text(c.rules[0].code[0]) for c in cands
             if not c.rules[0].guards}
    assert "DESTROY $2" in texts


def test_synthesis_rejects_zero_count():
    with pytest.raises(ValueError):
        mech.synthesize_candidates(mech.default_vocab(), mech.SynthBounds(),
                                   0, 1)


def test_normalization_swaps_overlap_operands():
    raw = gdl.Rule(gdl.parse_trigger("OVERLAP obstacle avatar"), (),
                   (gdl.parse_command("DESTROY $1"),))
    norm = mech._normalize_rule(raw)
    assert gdl.trigger_text(norm.trigger) == "OVERLAP avatar obstacle"
    assert gdl.command_text(norm.code[0]) == "DESTROY $2"
    flipped = gdl.Rule(gdl.parse_trigger("OVERLAP avatar obstacle"), (),
                       (gdl.parse_command("DESTROY $2"),))
    # the id sees through operand order, but not through extra rules
    assert mech.candidate_id((raw,)) == mech.candidate_id((flipped,))
    assert mech.candidate_id((raw,)) != mech.candidate_id((flipped, raw))


# ── evaluate_candidate ────────────────────────────────────────────────

def test_wall_destroy_is_interesting(envs):
    rep = mech.evaluate_candidate(candidate(WALL_DESTROY), envs)
    assert rep.interesting
    gap = rep.per_env["wallgap"]
    assert gap["newly_winnable"] and not gap["degenerate"]
    assert [4, 0] not in gap["newly_reachable_cells"]  # tuples, not lists
    assert (5, 2) in gap["newly_reachable_cells"]
    assert len(gap["newly_reachable_cells"]) == 15
    assert rep.per_env["lockedchamber"]["newly_winnable"]
    assert rep.per_env["hazardcorridor"]["newly_reachable_cells"] == []
    assert rep.witness["environment"] == "wallgap"
    assert rep.witness["win"] is not None


def test_instant_loss_is_degenerate_everywhere(envs):
    rep = mech.evaluate_candidate(candidate(("TICK 1", [], ["LOSE"])), envs)
    assert not rep.interesting and rep.witness is None
    assert all(d["degenerate"] for d in rep.per_env.values())


def test_pure_sfx_changes_nothing(envs):
    rep = mech.evaluate_candidate(
        candidate(("OVERLAP avatar obstacle", [], ["SFX ding"])), envs)
    assert not rep.interesting
    for d in rep.per_env.values():
        assert d["newly_reachable_cells"] == []
        assert not d["newly_winnable"]


def test_interest_invariant_holds(envs):
    for cand in (candidate(WALL_DESTROY),
                 candidate(("TICK 1", [], ["LOSE"])),
                 candidate(("TICK 1", [], ["WIN"])),
                 candidate(("COUNT avatar EQ 0", [], ["WIN"]))):
        rep = mech.evaluate_candidate(cand, envs)
        positive = any(d["newly_reachable_cells"] or d["newly_winnable"]
                       for d in rep.per_env.values())
        all_degen = all(d["degenerate"] for d in rep.per_env.values())
        assert rep.interesting == (positive and not all_degen)


def test_evaluation_deterministic_and_immutable(envs):
    cand = candidate(WALL_DESTROY)
    before = [e.definition for e in envs]
    a = mech.evaluate_candidate(cand, envs)
    b = mech.evaluate_candidate(cand, envs)
    assert a == b
    assert [e.definition for e in envs] == before


def test_uncertified_environment_rejected(envs):
    bogus = dataclasses.replace(envs[0], certified=False)
    with pytest.raises(mech.UncertifiedEnvironment):
        mech.evaluate_candidate(candidate(WALL_DESTROY), [bogus])


# ── bank_mechanic ─────────────────────────────────────────────────────

def test_banking_appends_pattern(envs):
    cand = candidate(WALL_DESTROY)
    rep = mech.evaluate_candidate(cand, envs)
    cat = rd.seed_catalogue()
    grown = mech.bank_mechanic(cand, rep, cat)
    assert len(grown.patterns) == len(cat.patterns) + 1
    assert grown.version == cat.version + 1
    assert len(cat.patterns) == 6  # the input catalogue is untouched
    new = grown.patterns[-1]
    assert new.pattern_name == f"Banked_{cand.id[:8]}"
    assert new.provenance == f"banked:{cand.id}"
    assert new.roles == ("avatar", "obstacle")
    assert new.required_vars == ()


def test_banking_idempotent(envs):
    cand = candidate(WALL_DESTROY)
    rep = mech.evaluate_candidate(cand, envs)
    cat = mech.bank_mechanic(cand, rep, rd.seed_catalogue())
    again = mech.bank_mechanic(cand, rep, cat)
    assert again is cat


def test_banking_requires_interest(envs):
    cand = candidate(("TICK 1", [], ["LOSE"]))
    rep = mech.evaluate_candidate(cand, envs)
    with pytest.raises(mech.NotInteresting):
        mech.bank_mechanic(cand, rep, rd.seed_catalogue())


def test_banked_pattern_records_score_requirement(envs):
    cand = candidate(("OVERLAP avatar obstacle", [],
                      ["DESTROY $2", "SCORE 1"]))
    rep = mech.evaluate_candidate(cand, envs)
    assert rep.interesting
    grown = mech.bank_mechanic(cand, rep, rd.seed_catalogue())
    assert grown.patterns[-1].required_vars == (rd.SCORE_VAR,)


def test_banked_pattern_instantiates_into_game(envs, bundled_game):
    cand = candidate(WALL_DESTROY)
    rep = mech.evaluate_candidate(cand, envs)
    grown = mech.bank_mechanic(cand, rep, rd.seed_catalogue())
    rules, new_vars = rd.instantiate_pattern(
        grown.patterns[-1], {"avatar": "playerpiece", "obstacle": "wall"},
        bundled_game)
    merged = dataclasses.replace(
        bundled_game, rules=bundled_game.rules + rules,
        variables=bundled_game.variables + new_vars)
    assert gdl.validate_game(merged).ok()
    assert gdl.trigger_text(rules[0].trigger) == "OVERLAP playerpiece wall"
