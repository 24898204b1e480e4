#include <lcpsim/scenario_file.h>

#include <doctest.h>

#include <filesystem>

using namespace lcpsim;

namespace {

NodeSet
ids(std::initializer_list<std::uint32_t> v)
{
    NodeSet out;
    for (auto x : v)
        out.insert(NodeId(x));
    return out;
}

ParseError
parseFailure(std::string const& text)
{
    try
    {
        parseScenario(text, "case.scn");
    }
    catch (ParseError const& e)
    {
        return e;
    }
    FAIL("expected a parse error");
    return ParseError("", 0, 0);
}

}  // namespace

TEST_CASE("node lists")
{
    CHECK(parseNodeList("3", 10) == ids({3}));
    CHECK(parseNodeList("0..4", 10) == ids({0, 1, 2, 3, 4}));
    CHECK(parseNodeList("0..1, 7 ,9..9", 10) == ids({0, 1, 7, 9}));
    CHECK_THROWS_AS(parseNodeList("10", 10), ScenarioError);
    CHECK_THROWS_AS(parseNodeList("4..2", 10), ScenarioError);
    CHECK_THROWS_AS(parseNodeList("a", 10), ScenarioError);
    CHECK_THROWS_AS(parseNodeList("", 10), ScenarioError);
    CHECK(formatNodeList(ids({0, 1, 2, 5, 7, 8})) == "0..2,5,7..8");
    CHECK(formatNodeList({}) == "");
}

TEST_CASE("node list round trip")
{
    Rng rng(5);
    for (int k = 0; k < 200; ++k)
    {
        NodeSet s;
        for (int x = 0; x < 12; ++x)
            if (rng.below(2))
                s.insert(NodeId(static_cast<std::uint32_t>(rng.below(40))));
        if (s.empty())
            continue;
        CHECK(parseNodeList(formatNodeList(s), 40) == s);
    }
}

TEST_CASE("a full scenario parses")
{
    auto const s = parseScenario(R"(
# comment lines are allowed
name: everything
nodes: 6
quorum: {floor_div_k: 3}
unls:
  - {nodes: "0..4", members: "0..4"}
  - {nodes: "5", members: "0..3,5"}
faults:
  - {nodes: "5", budget: 0}
schedule: ["1/2", "3/4"]
ledgers:
  - {name: A, txs: [a]}
  - {name: B, parent: A}
bootstrap:
  - {nodes: "0..1", ledger: B, validate: false}
pending:
  - {nodes: "2..3", txs: [p, q]}
submissions:
  - {tick: 2, nodes: "4", tx: late}
tx_load: {every: 3, count: 2, max_lag: 1}
timing:
  - {nodes: "5", interval: 2, offset: 1}
adversary:
  kind: seeded
  min_delay: 1
  max_delay: 2
  drop: "1/20"
  partition_rate: "0"
  byzantine_rate: "1/3"
  byzantine: "4"
  accountability: true
inspect:
  - {tick: 1, node: 0, ledgers: [A]}
stop: {all_fully_validated_seq: 4}
max_ticks: 40
probe_ticks: 10
seed: 77
)");
    CHECK(s.name == "everything");
    CHECK(s.graph->size() == 6);
    CHECK(s.graph->quorum(NodeId(0)) == 4);
    CHECK(s.graph->faultBudget(NodeId(5)) == 0);
    CHECK(s.graph->faultBudget(NodeId(0)) == 1);
    CHECK(s.graph->unlSize(NodeId(5)) == 5);
    CHECK(s.schedule.at(5) == Rational{3, 4});
    CHECK(s.ledgers.size() == 2);
    CHECK(s.ledgers[1].parent == "A");
    CHECK_FALSE(s.bootstrap[0].validate);
    CHECK(s.pending[0].txs == TxSet{"p", "q"});
    CHECK(s.submissions[0].tx == TxId("late"));
    CHECK(s.txLoad->count == 2);
    CHECK(s.timing[0].interval == 2);
    auto const* seeded = std::get_if<SeededPolicy>(&s.adversary.kind);
    REQUIRE(seeded);
    CHECK(seeded->drop == Rational{1, 20});
    CHECK(s.adversary.accountability);
    CHECK(s.adversary.byzantine == ids({4}));
    CHECK(s.stop.allFullyValidatedSeq == 4u);
    CHECK(s.maxTicks == 40);
    CHECK(s.probeTicks == 10);
    CHECK(s.seed == 77);
}

TEST_CASE("errors carry file, line and column")
{
    auto const e = parseFailure("nodes: 2\nunls:\n  - {nodes: \"0..1\", members: \"0..1\"}\nmax_tick: 5\n");
    CHECK(std::string(e.what()) == "case.scn:4:1: unknown key 'max_tick'");
    CHECK(e.line() == 4);
    CHECK(e.column() == 1);

    auto const nested = parseFailure(
        "nodes: 2\nunls:\n  - {nodes: \"0..1\", members: \"0..1\", extra: 1}\n");
    CHECK(nested.line() == 3);
    CHECK(std::string(nested.what()).find("unknown key 'extra'") != std::string::npos);

    auto const range = parseFailure("nodes: 2\nunls:\n  - {nodes: \"0..2\", members: \"0\"}\n");
    CHECK(std::string(range.what()).find("out of range") != std::string::npos);

    auto const missing = parseFailure("nodes: 3\nunls:\n  - {nodes: \"0..1\", members: \"0\"}\n");
    CHECK(std::string(missing.what()).find("node 2 has no UNL") != std::string::npos);

    auto const twice = parseFailure(
        "nodes: 2\nunls:\n  - {nodes: \"0..1\", members: \"0\"}\n  - {nodes: \"1\", members: \"1\"}\n");
    CHECK(std::string(twice.what()).find("two UNLs") != std::string::npos);

    auto const syntax = parseFailure("nodes: [1\n");
    CHECK(syntax.line() >= 1);

    auto const ruleNeedsDisposition = parseFailure(
        "nodes: 2\nunls:\n  - {nodes: \"0..1\", members: \"0..1\"}\n"
        "adversary:\n  kind: scripted\n  rules:\n    - {kind: proposal}\n");
    CHECK(std::string(ruleNeedsDisposition.what()).find("delay or drop") != std::string::npos);

    auto const wrongKind = parseFailure(
        "nodes: 2\nunls:\n  - {nodes: \"0..1\", members: \"0..1\"}\n"
        "adversary: {kind: civil, min_delay: 2}\n");
    CHECK(std::string(wrongKind.what()).find("only applies to seeded") != std::string::npos);

    auto const badLedger = parseFailure(
        "nodes: 2\nunls:\n  - {nodes: \"0..1\", members: \"0..1\"}\n"
        "bootstrap:\n  - {nodes: \"0\", ledger: nowhere}\n");
    CHECK(std::string(badLedger.what()).find("nowhere") != std::string::npos);
}

TEST_CASE("every repository scenario parses")
{
    std::size_t count = 0;
    for (auto const& entry :
         std::filesystem::directory_iterator(std::string(LCPSIM_SOURCE_DIR) + "/scenarios"))
    {
        if (entry.path().extension() != ".scn")
            continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(loadScenario(entry.path().string()));
        ++count;
    }
    CHECK(count >= 5);
    CHECK_THROWS_AS(loadScenario("/nonexistent/file.scn"), ParseError);
}
