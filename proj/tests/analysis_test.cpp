#include <lcpsim/analysis.h>
#include <lcpsim/scenario_file.h>

#include <doctest.h>

using namespace lcpsim;

namespace {

struct Chains
{
    LedgerStore s;
    Digest a2, a3, b2, b3;

    Chains()
    {
        a2 = s.apply(genesis().hash, {"a"}).hash;
        a3 = s.apply(a2, {}).hash;
        b2 = s.apply(genesis().hash, {"b"}).hash;
        b3 = s.apply(b2, {}).hash;
    }

    Digest
    deep(Digest d, int extra)
    {
        for (int k = 0; k < extra; ++k)
            d = s.apply(d, {}).hash;
        return d;
    }
};

}  // namespace

TEST_CASE("detect_fork")
{
    Chains c;
    RunReport r;

    SUBCASE("one chain")
    {
        r.fullValidations = {
            {1, NodeId(0), c.a2, 2}, {2, NodeId(1), c.a3, 3}, {3, NodeId(0), c.a3, 3}};
        CHECK_FALSE(detectFork(r, c.s));
    }
    SUBCASE("same sequence, different ledgers")
    {
        auto const l = c.deep(c.a2, 3);
        auto const lp = c.deep(c.b2, 3);
        r.fullValidations = {{4, NodeId(0), l, 5}, {6, NodeId(1), lp, 5}};
        auto const w = detectFork(r, c.s);
        REQUIRE(w);
        CHECK(w->nodes == std::pair(NodeId(0), NodeId(1)));
        CHECK(w->ledgers == std::pair(l, lp));
        CHECK(w->seqs == std::pair<std::uint64_t, std::uint64_t>(5, 5));
    }
    SUBCASE("higher non-descendant")
    {
        auto const l = c.deep(c.a2, 3);
        auto const lp = c.deep(c.b2, 5);
        r.fullValidations = {{4, NodeId(0), l, 5}, {6, NodeId(1), lp, 7}};
        auto const w = detectFork(r, c.s);
        REQUIRE(w);
        CHECK(w->seqs == std::pair<std::uint64_t, std::uint64_t>(5, 7));
    }
    SUBCASE("ancestor closure: a lower ledger on another branch also forks")
    {
        r.fullValidations = {{4, NodeId(0), c.a3, 3}, {6, NodeId(1), c.b2, 2}};
        CHECK(detectFork(r, c.s));
    }
}

TEST_CASE("detect_stuck")
{
    auto single = parseScenario(R"(
nodes: 1
unls:
  - {nodes: "0", members: "0"}
submissions:
  - {tick: 3, nodes: "0", tx: s}
max_ticks: 5
)");
    World one(std::move(single));
    one.run();
    CHECK_FALSE(detectStuck(one, 10));
    CHECK_THROWS_AS(detectStuck(one, 0), std::invalid_argument);

    auto shared = parseScenario(R"(
nodes: 6
unls:
  - {nodes: "0..5", members: "0..5"}
adversary: {kind: civil, max_delay: 2}
max_ticks: 15
)");
    World w(std::move(shared));
    w.run();
    auto const p = probe(w, 20);
    CHECK_FALSE(p.stuck);
    CHECK(p.probeStart == 15);
    CHECK(p.report.ticks == 35);
}

TEST_CASE("validation counting bounds examples")
{
    CHECK(lemma1Bounds(100, 100, 91, 20, 80) == Lemma1Bounds{51, 49});
    CHECK(lemma1Bounds(10, 10, 10, 0, 10) == Lemma1Bounds{10, 0});
    // At the same-sequence equality point O = 20 + 20 + 20 with m = q_i.
    CHECK(lemma1Bounds(100, 100, 60, 20, 80).maxContraJ == 80);
    // Lower clamp.
    CHECK(lemma1Bounds(10, 10, 2, 2, 8).minHonestJ == 0);
    CHECK_THROWS(lemma1Bounds(10, 10, 11, 0, 8));
    CHECK_THROWS(lemma1Bounds(10, 10, 5, 6, 8));
    CHECK_THROWS(lemma1Bounds(10, 10, 5, 0, 11));
}

TEST_CASE("counting searches agree with the closed forms on small instances")
{
    for (std::int64_t ni = 1; ni <= 5; ++ni)
        for (std::int64_t nj = 1; nj <= 5; ++nj)
            for (std::int64_t o = 0; o <= std::min(ni, nj); ++o)
                for (std::int64_t t = 0; t <= std::min<std::int64_t>(o, 1); ++t)
                    for (std::int64_t m = 0; m <= ni; ++m)
                    {
                        auto const closed = lemma1Bounds(ni, nj, o, t, m);
                        auto const region = lemma1Search(ni, nj, o, t, t, m);
                        REQUIRE(region == closed);
                        if (ni + nj - o <= 7)
                            REQUIRE(lemma1SubsetSearch(ni, nj, o, t, t, m) == closed);
                    }
    CHECK_THROWS_AS(lemma1SubsetSearch(8, 8, 2, 0, 0, 8), OracleLimit);
}

TEST_CASE("fork oracle examples at n = 10, q = 8")
{
    auto const at4 = makePairTopology(10, 10, 4, FractionCeil{}, 0);
    auto const found = bruteForceForkSearch(at4, NodeId(0), NodeId(1), true);
    REQUIRE(found);
    CHECK(found->byzantine.empty());

    auto const at5 = makePairTopology(10, 10, 5, FractionCeil{}, 0);
    CHECK_FALSE(bruteForceForkSearch(at5, NodeId(0), NodeId(1), true));

    auto const at5t1 = makePairTopology(10, 10, 5, FractionCeil{}, 1);
    CHECK(at5t1.pairFaultBound(NodeId(0), NodeId(1)) == 1);
    auto const byz = bruteForceForkSearch(at5t1, NodeId(0), NodeId(1), false);
    REQUIRE(byz);
    CHECK(byz->byzantine.size() == 1);
    auto const& [toI, toJ] = byz->byzantineVotes.begin()->second;
    CHECK(toI == Vote::L);
    CHECK(toJ == Vote::LPrime);

    CHECK_THROWS_AS(bruteForceForkSearch(at4, NodeId(0), NodeId(1), true, 12), OracleLimit);
}

TEST_CASE("oracle agrees with the same-sequence conditions for n <= 6")
{
    for (std::size_t ni = 4; ni <= 6; ++ni)
        for (std::size_t nj = 4; nj <= 6; ++nj)
            for (std::size_t o = 0; o <= std::min(ni, nj); ++o)
                for (std::size_t t = 0; t <= 1; ++t)
                {
                    auto const g = makePairTopology(ni, nj, o, FractionCeil{}, t);
                    auto const acc = bruteForceForkSearch(g, NodeId(0), NodeId(1), true);
                    auto const eq = bruteForceForkSearch(g, NodeId(0), NodeId(1), false);
                    auto const p = g.pairParams(NodeId(0), NodeId(1));
                    if (t == 0)
                        REQUIRE(
                            acc.has_value() ==
                            !checkCondition(p, Condition::SameSeqAccountable).holds);
                    REQUIRE(
                        eq.has_value() ==
                        !checkCondition(p, Condition::SameSeqByzantine).holds);
                }
}

TEST_CASE("a found assignment replays as a forking scenario")
{
    auto const g = makePairTopology(5, 5, 2, FractionCeil{}, 1);
    auto const a = bruteForceForkSearch(g, NodeId(0), NodeId(1), false);
    REQUIRE(a);
    auto const text = assignmentScenario(g, *a, false);
    auto exec = execute(parseScenario(text, "replay"));
    auto const w = exec.report.verdicts.fork;
    REQUIRE(w);
    CHECK(exec.world.nodes()[0].state().fullyValidated == *exec.world.named("L"));
    CHECK(exec.world.nodes()[1].state().fullyValidated == *exec.world.named("LPrime"));
}

TEST_CASE("two-group topology overlap")
{
    auto const g = makeTwoGroupTopology(100, 61, FractionCeil{});
    CHECK(g.size() == 139);
    CHECK(g.overlap(NodeId(0), NodeId(138)) == 61);
    CHECK(g.unlSize(NodeId(0)) == 100);
    CHECK(g.quorum(NodeId(0)) == 80);
}

TEST_CASE("rounds without full validation")
{
    RunReport r;
    Chains c;
    r.validations = {{1, NodeId(0), c.a2, 2}, {1, NodeId(1), c.b2, 2}, {3, NodeId(0), c.a3, 3}};
    r.fullValidations = {{4, NodeId(0), c.a3, 3}};
    CHECK(roundsWithoutFullValidation(r) == 1);
}

TEST_CASE("branch stability monitor")
{
    // Three nodes sharing a UNL; all validate a2, then node 2 contradicts it.
    TrustGraph g(
        {{NodeId(0), NodeId(1), NodeId(2)},
         {NodeId(0), NodeId(1), NodeId(2)},
         {NodeId(0), NodeId(1), NodeId(2)}},
        FractionCeil{});
    Chains c;
    RunReport r;
    r.validations = {
        {1, NodeId(0), c.a2, 2}, {1, NodeId(1), c.a2, 2}, {2, NodeId(0), c.a3, 3}};
    auto ok = checkBranchStability(r, g, {}, c.s);
    CHECK(ok.triggers == 1);
    CHECK(ok.violations.empty());

    r.validations.push_back({3, NodeId(2), c.b3, 3});
    auto bad = checkBranchStability(r, g, {}, c.s);
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0].offending.node == NodeId(2));
    CHECK_FALSE(bad.violations[0].offenderValidatedTrigger);
}

TEST_CASE("liveness check")
{
    Chains c;
    RunReport r;
    r.ticks = 20;
    r.nodes = {NodeSummary{NodeId(0)}, NodeSummary{NodeId(1)}};
    r.fullValidations = {{5, NodeId(0), c.a2, 2}, {6, NodeId(1), c.a2, 2},
                         {19, NodeId(0), c.a3, 3}};
    auto const ok = checkLiveness(r, {}, 0, 3);
    CHECK(ok.ok);
    CHECK(ok.rounds == 1);

    r.fullValidations.pop_back();
    r.fullValidations.push_back({10, NodeId(0), c.a3, 3});
    CHECK_FALSE(checkLiveness(r, {}, 0, 3).ok);
    CHECK_FALSE(checkLiveness(r, {}, 15, 3).ok);
}
