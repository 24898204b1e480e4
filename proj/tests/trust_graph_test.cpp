#include <lcpsim/analysis.h>
#include <lcpsim/trust_graph.h>

#include <doctest.h>

using namespace lcpsim;

namespace {

std::vector<NodeId>
range(std::uint32_t lo, std::uint32_t hi)
{
    std::vector<NodeId> out;
    for (auto v = lo; v <= hi; ++v)
        out.emplace_back(v);
    return out;
}

TrustGraph
stuckSplitGraph(std::map<NodeId, std::size_t> faults = {})
{
    std::vector<std::vector<NodeId>> unls;
    for (std::uint32_t n = 0; n < 102; ++n)
        unls.push_back(n <= 50 ? range(0, 100) : range(1, 101));
    return TrustGraph(std::move(unls), FractionCeil{}, faults);
}

PairParams
params(std::int64_t ni, std::int64_t nj, std::int64_t o, std::int64_t t)
{
    auto const qi = static_cast<std::int64_t>(quorum(ni, FractionCeil{}));
    auto const qj = static_cast<std::int64_t>(quorum(nj, FractionCeil{}));
    return {ni, qi, nj, qj, o, t};
}

}  // namespace

TEST_CASE("quorum examples")
{
    CHECK(quorum(5, FractionCeil{}) == 4);
    CHECK(quorum(1, FractionCeil{}) == 1);
    CHECK(quorum(6, FloorDivK{5}) == 5);
    CHECK(quorum(100, FractionCeil{}) == 80);
    CHECK(quorum(101, FractionCeil{}) == 81);
    CHECK_THROWS_AS(quorum(0, FractionCeil{}), InvalidGraph);
}

TEST_CASE("FloorDivK matches a brute-force table")
{
    // Largest fault count f with n - f > (k - 1) f, i.e. at most (n-1)/k faults.
    for (std::uint32_t k = 2; k <= 7; ++k)
        for (std::size_t n = 1; n <= 10; ++n)
        {
            std::size_t f = 0;
            while ((f + 1) * k <= n - 1)
                ++f;
            CHECK(quorum(n, FloorDivK{k}) == n - f);
        }
}

TEST_CASE("policy parameters are range checked")
{
    CHECK_THROWS_AS(validatePolicy(FractionCeil{Rational{1, 2}}), InvalidGraph);
    CHECK_THROWS_AS(validatePolicy(FractionCeil{Rational{11, 10}}), InvalidGraph);
    CHECK_THROWS_AS(validatePolicy(FloorDivK{1}), InvalidGraph);
    CHECK_NOTHROW(validatePolicy(FractionCeil{Rational{1, 1}}));
}

TEST_CASE("quorum is monotone and the 4/5 budget stays within a fifth")
{
    for (std::size_t n = 1; n < 1000; ++n)
    {
        CHECK(quorum(n + 1, FractionCeil{}) >= quorum(n, FractionCeil{}));
        CHECK(quorum(n + 1, FloorDivK{5}) >= quorum(n, FloorDivK{5}));
        CHECK(5 * (n - quorum(n, FractionCeil{})) <= n);
    }
}

TEST_CASE("graph construction rejects bad input")
{
    CHECK_THROWS_AS(TrustGraph({{}}, FractionCeil{}), InvalidGraph);
    CHECK_THROWS_AS(TrustGraph({{NodeId(3)}}, FractionCeil{}), InvalidGraph);
    // Budget above n - q.
    CHECK_THROWS_AS(
        TrustGraph({range(0, 4), range(0, 4), range(0, 4), range(0, 4), range(0, 4)},
                   FractionCeil{},
                   {{NodeId(0), 2}}),
        InvalidGraph);
}

TEST_CASE("overlap and pair fault bound")
{
    std::vector<std::vector<NodeId>> unls(10, range(0, 9));
    TrustGraph shared(unls, FractionCeil{});
    CHECK(shared.overlap(NodeId(0), NodeId(9)) == 10);
    CHECK(shared.faultBudget(NodeId(0)) == 2);
    CHECK(shared.pairFaultBound(NodeId(0), NodeId(1)) == 2);
    CHECK_THROWS(shared.overlap(NodeId(0), NodeId(10)));

    auto const split = stuckSplitGraph();
    CHECK(split.overlap(NodeId(0), NodeId(101)) == 100);
    CHECK(split.overlap(NodeId(101), NodeId(0)) == 100);

    TrustGraph disjoint({range(0, 1), range(2, 3), range(0, 1), range(2, 3)}, FractionCeil{});
    CHECK(disjoint.overlap(NodeId(0), NodeId(1)) == 0);
    CHECK(disjoint.pairFaultBound(NodeId(0), NodeId(1)) == 0);

    // t_i = 3, t_j = 5, O = 1.
    std::vector<std::vector<NodeId>> asym(40);
    asym[0] = range(0, 14);  // n = 15, q = 12, t = 3
    asym[1] = range(14, 39);  // n = 26, q = 21, t = 5
    for (std::uint32_t k = 2; k < 40; ++k)
        asym[k] = range(k, k);
    TrustGraph g(asym, FractionCeil{});
    CHECK(g.faultBudget(NodeId(0)) == 3);
    CHECK(g.faultBudget(NodeId(1)) == 5);
    CHECK(g.pairFaultBound(NodeId(0), NodeId(1)) == 1);

    auto const p = makeTwoGroupTopology(100, 95, FractionCeil{});
    CHECK(p.pairFaultBound(NodeId(0), NodeId(199 - 95)) == 20);
}

TEST_CASE("check_pair examples at n = 100")
{
    auto const acc = checkCondition(params(100, 100, 41, 20), Condition::SameSeqAccountable);
    CHECK(acc.holds);
    CHECK(acc.marginHalf == 2);

    auto const fs91 = checkCondition(params(100, 100, 91, 20), Condition::ForkSafety);
    CHECK(fs91.holds);
    CHECK(fs91.marginHalf == 2);

    auto const fs90 = checkCondition(params(100, 100, 90, 20), Condition::ForkSafety);
    CHECK_FALSE(fs90.holds);
    CHECK(fs90.marginHalf == 0);
    CHECK(formatHalf(fs90.marginHalf) == "0.0");
    CHECK(formatHalf(-3) == "-1.5");
    CHECK(formatHalf(5) == "2.5");

    CHECK(checkCondition(params(100, 100, 20, 20), Condition::Whitepaper).holds);
    CHECK_FALSE(checkCondition(params(100, 100, 19, 20), Condition::Whitepaper).holds);
    CHECK(checkCondition(params(100, 100, 61, 20), Condition::SameSeqByzantine).holds);
    CHECK_FALSE(checkCondition(params(100, 100, 60, 20), Condition::SameSeqByzantine).holds);
}

TEST_CASE("fork safety is evaluated for the ordered pair")
{
    // n_i = 10 (q 8), n_j = 20 (q 16), O = 10, t = 0:
    // (i, j): 20 > 20 + 4 fails; (j, i): 20 > 10 + 8 holds.
    auto const ij = checkCondition({10, 8, 20, 16, 10, 0}, Condition::ForkSafety);
    auto const ji = checkCondition({20, 16, 10, 8, 10, 0}, Condition::ForkSafety);
    CHECK_FALSE(ij.holds);
    CHECK(ji.holds);
}

TEST_CASE("SameSeqByzantine with t = 0 coincides with SameSeqAccountable")
{
    for (std::int64_t ni = 1; ni <= 30; ++ni)
        for (std::int64_t nj = 1; nj <= 30; ++nj)
            for (std::int64_t o = 0; o <= std::min(ni, nj); ++o)
            {
                auto const p = params(ni, nj, o, 0);
                auto const a = checkCondition(p, Condition::SameSeqAccountable);
                auto const b = checkCondition(p, Condition::SameSeqByzantine);
                REQUIRE(a.holds == b.holds);
                REQUIRE(a.marginHalf == b.marginHalf);
            }
}

TEST_CASE("Armknecht implies SameSeqAccountable for every quorum choice")
{
    for (std::int64_t ni = 1; ni <= 30; ++ni)
        for (std::int64_t nj = 1; nj <= 30; ++nj)
            for (std::int64_t qi = ni / 2 + 1; qi <= ni; ++qi)
                for (std::int64_t qj = nj / 2 + 1; qj <= nj; ++qj)
                    for (std::int64_t o = 0; o <= std::min(ni, nj); ++o)
                    {
                        PairParams p{ni, qi, nj, qj, o, 0};
                        if (checkCondition(p, Condition::Armknecht).holds)
                            REQUIRE(checkCondition(p, Condition::SameSeqAccountable).holds);
                    }
}

TEST_CASE("SameSeqAccountable can hold where Armknecht fails")
{
    // n_i - q_i = 0 and n_j - q_j = 2: 3 > 2 holds, 3 > 4 fails.
    PairParams p{4, 4, 10, 8, 3, 0};
    CHECK(checkCondition(p, Condition::SameSeqAccountable).holds);
    CHECK_FALSE(checkCondition(p, Condition::Armknecht).holds);
}

TEST_CASE("audit examples")
{
    std::vector<std::vector<NodeId>> unls(8, range(0, 7));
    std::map<NodeId, std::size_t> zero;
    for (std::uint32_t n = 0; n < 8; ++n)
        zero[NodeId(n)] = 0;
    TrustGraph shared(unls, FractionCeil{}, zero);
    CHECK(audit(shared, Condition::ForkSafety).empty());
    CHECK(auditTable(shared, Condition::ForkSafety).size() == 56);

    // The 102-node stuck topology passes the fork-safety arithmetic both with
    // t = 0 and with the default budget; it is stuck, not forked.
    std::map<NodeId, std::size_t> noFaults;
    for (std::uint32_t n = 0; n < 102; ++n)
        noFaults[NodeId(n)] = 0;
    CHECK(audit(stuckSplitGraph(noFaults), Condition::ForkSafety).empty());
    CHECK(audit(stuckSplitGraph(), Condition::ForkSafety).empty());

    TrustGraph disjoint({range(0, 1), range(0, 1), range(2, 3), range(2, 3)}, FractionCeil{});
    auto const fails = audit(disjoint, Condition::ForkSafety);
    REQUIRE(fails.size() == 8);
    for (auto const& f : fails)
        CHECK((f.i.value < 2) != (f.j.value < 2));
    for (std::size_t k = 1; k < fails.size(); ++k)
        CHECK(
            std::pair(fails[k - 1].i.value, fails[k - 1].j.value) <
            std::pair(fails[k].i.value, fails[k].j.value));
}

TEST_CASE("condition names round-trip")
{
    for (auto c : allConditions())
        CHECK((parseCondition(toString(c)) == c));
    CHECK_FALSE(parseCondition("nonsense"));
}
