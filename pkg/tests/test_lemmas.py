import random
from collections import Counter

import pytest
from hypothesis import given, settings

from o3.chor import apply, enabled, initial_config
from o3.epp import keys_q, project_program, project_role
from o3.gen import GenConfig, gen_program, instruction_count, strategy
from o3.lemmas import LEMMAS, lemma1
from o3.syntax import CallIP, keys_proc, pn
from o3.wellformed import check_program


def test_generator_respects_bounds():
    cfg = GenConfig()
    for seed in range(300):
        prog = gen_program(seed, cfg)
        assert instruction_count(prog) <= cfg.max_instructions
        assert len(pn(prog.main)) <= cfg.max_processes
        assert len(prog.decls) <= cfg.max_depth
        assert check_program(prog).verdict
        project_program(prog)


@settings(max_examples=30, deadline=None)
@given(strategy())
def test_generated_programs_are_well_formed(prog):
    assert check_program(prog).verdict


@pytest.mark.parametrize("n", sorted(LEMMAS))
def test_lemma_on_generated_programs(n):
    for seed in range(200):
        bad = LEMMAS[n](gen_program(seed), random.Random(seed))
        assert not bad, (seed, bad)


def test_lemma1_needs_q_to_have_entered(corpus):
    # with the seller still pending, the body's receive keys already count
    # towards keys_q while its projection is only a bare call
    prog = corpus["buyitem"]
    c = initial_config(prog)
    first = next(x for x in enabled(c) if x.rule == "C-First" and x.actor == "buyer1")
    c = apply(c, first)
    assert isinstance(c.C[0], CallIP) and "seller" in c.C[0].pending
    have = Counter(keys_proc(project_role(c.C, "seller", prog.decl_map())))
    need = Counter(keys_q(c.C, "seller"))
    assert need - have
    assert lemma1(prog, random.Random(0)) == []
