#include <lcpsim/analysis.h>
#include <lcpsim/report.h>
#include <lcpsim/scenario_file.h>

#include <doctest.h>

using namespace lcpsim;

namespace {

Scenario
civilFive()
{
    return parseScenario(R"(
name: civil-five
nodes: 5
unls:
  - {nodes: "0..4", members: "0..4"}
pending:
  - {nodes: "0..4", txs: [t1, t2]}
submissions:
  - {tick: 6, nodes: "0..4", tx: t3}
  - {tick: 12, nodes: "0..4", tx: t4}
max_ticks: 30
)");
}

Scenario
seededByzantine(bool accountability)
{
    auto s = parseScenario(R"(
name: seeded-byzantine
nodes: 7
unls:
  - {nodes: "0..6", members: "0..6"}
tx_load: {every: 2, count: 1, max_lag: 3}
adversary:
  kind: seeded
  min_delay: 1
  max_delay: 4
  drop: "1/10"
  partition_rate: "1/10"
  byzantine: "6"
max_ticks: 60
seed: 9
)");
    s.adversary.accountability = accountability;
    return s;
}

}  // namespace

TEST_CASE("civil shared UNL: every node fully validates the same ledgers")
{
    auto exec = execute(civilFive());
    auto const& r = exec.report;
    CHECK_FALSE(r.verdicts.fork);

    std::map<std::uint64_t, std::set<Digest>> bySeq;
    std::map<NodeId, std::uint64_t> highest;
    for (auto const& fv : r.fullValidations)
    {
        bySeq[fv.seq].insert(fv.ledger);
        highest[fv.node] = std::max(highest[fv.node], fv.seq);
    }
    REQUIRE(highest.size() == 5);
    for (auto const& [seq, ledgers] : bySeq)
        CHECK(ledgers.size() == 1);
    // Every node saw the same sequence numbers.
    for (auto const& [node, seq] : highest)
        CHECK(seq == highest.begin()->second);

    // All submitted txs ended up on the common chain.
    auto const& tip = r.nodes[0].fullyValidated;
    for (auto tx : {"t1", "t2", "t3", "t4"})
        CHECK(exec.world.store().chainContains(tip, tx));
}

TEST_CASE("same scenario and seed give byte-identical reports")
{
    auto a = execute(seededByzantine(false));
    auto b = execute(seededByzantine(false));
    CHECK(reportJson(a.report, a.world.store()) == reportJson(b.report, b.world.store()));
    CHECK(traceJsonl(a.report) == traceJsonl(b.report));

    auto other = seededByzantine(false);
    other.seed = 10;
    auto c = execute(other);
    CHECK(traceJsonl(a.report) != traceJsonl(c.report));
}

TEST_CASE("honest nodes never equivocate")
{
    for (bool acc : {false, true})
    {
        auto exec = execute(seededByzantine(acc));
        std::map<NodeId, std::uint64_t> lastSeq;
        std::set<std::tuple<NodeId, Digest, std::uint32_t>> proposals;
        for (auto const& t : exec.report.trace)
        {
            if (exec.world.isByzantine(t.node))
                continue;
            if (t.kind == TraceKind::Validate)
            {
                CHECK(t.seq > lastSeq[t.node]);
                lastSeq[t.node] = t.seq;
            }
            if (t.kind == TraceKind::Propose)
                CHECK(proposals.insert({t.node, t.ledger, t.round}).second);
        }
    }
}

TEST_CASE("under accountability every recipient sees one message per slot")
{
    auto exec = execute(seededByzantine(true));
    std::map<std::pair<NodeId, std::uint64_t>, Digest> validations;
    std::map<std::tuple<NodeId, Digest, std::uint32_t>, TxSet> proposals;
    std::size_t forged = 0;
    for (auto const& t : exec.report.trace)
    {
        if (t.kind != TraceKind::Forge)
            continue;
        ++forged;
        if (*t.message == MessageKind::Validation)
        {
            auto [it, fresh] = validations.emplace(std::pair(t.node, t.seq), t.ledger);
            CHECK(it->second == t.ledger);
        }
        else
        {
            auto [it, fresh] = proposals.emplace(std::tuple(t.node, t.ledger, t.round), t.txs);
            CHECK(it->second == t.txs);
        }
    }
    CHECK(forged > 0);
}

TEST_CASE("scripted forged validation reaches only its recipient")
{
    auto s = parseScenario(R"(
nodes: 5
unls:
  - {nodes: "0..4", members: "0..4"}
ledgers:
  - {name: X, txs: [forged]}
adversary:
  kind: scripted
  byzantine: "4"
  accountability: false
  injections:
    - {tick: 1, from: 4, to: "0", validation: X}
max_ticks: 2
)");
    World w(std::move(s));
    w.run();
    auto const x = *w.named("X");
    auto const& lv0 = w.nodes()[0].state().lastVals;
    REQUIRE(lv0.count(NodeId(4)) == 1);
    CHECK(lv0.at(NodeId(4)).ledger == x);
    CHECK(w.nodes()[1].state().lastVals.count(NodeId(4)) == 0);
}

TEST_CASE("empty queue: step only advances time")
{
    auto s = parseScenario(R"(
nodes: 2
unls:
  - {nodes: "0..1", members: "0..1"}
adversary: {kind: scripted, byzantine: "0..1"}
max_ticks: 3
)");
    World w(std::move(s));
    CHECK(w.queued() == 0);
    w.step();
    CHECK(w.now() == 1);
    CHECK(w.queued() == 0);
    CHECK(w.report().trace.empty());
}

TEST_CASE("partitions hold messages back instead of destroying them")
{
    auto s = parseScenario(R"(
nodes: 4
unls:
  - {nodes: "0..3", members: "0..3"}
pending:
  - {nodes: "0..3", txs: [p]}
adversary:
  kind: scripted
  partitions:
    - {groups: ["0..1", "2..3"], from: 1, until: 6}
max_ticks: 30
)");
    World w(std::move(s));
    for (int k = 0; k < 5; ++k)
        w.step();
    // Nothing from the other side has arrived.
    CHECK(w.nodes()[0].state().props.count(NodeId(2)) == 0);
    CHECK(w.nodes()[0].state().fullyValidatedSeq == 1);
    w.run();
    auto r = w.report();
    for (auto const& n : r.nodes)
        CHECK(n.fullyValidatedSeq >= 2);
    CHECK_FALSE(detectFork(r, w.store()));
}

TEST_CASE("dropped messages stay queued past the horizon")
{
    auto s = parseScenario(R"(
nodes: 3
unls:
  - {nodes: "0..2", members: "0..2"}
adversary:
  kind: scripted
  rules:
    - {from: "2", to: "0..1", drop: true}
max_ticks: 4
)");
    World w(std::move(s));
    w.run();
    CHECK(w.queued() > 0);
    auto const before = w.queued();
    auto probe = w;
    probe.makeCivil(1);
    probe.extend(1);
    probe.step();
    CHECK(probe.queued() < before);
}

TEST_CASE("scenario validation errors")
{
    auto base = R"(
nodes: 5
unls:
  - {nodes: "0..4", members: "0..4"}
)";
    // One Byzantine node fits t = 1, two do not.
    CHECK_NOTHROW(parseScenario(std::string(base) + "adversary: {kind: civil, byzantine: \"4\"}\n"));
    CHECK_THROWS_AS(
        parseScenario(std::string(base) + "adversary: {kind: civil, byzantine: \"3..4\"}\n"),
        ScenarioError);

    // Equivocation under accountability.
    auto const equivocate = std::string(base) + R"(
ledgers:
  - {name: X, txs: [x]}
  - {name: Y, txs: [y]}
adversary:
  kind: scripted
  byzantine: "4"
  accountability: true
  injections:
    - {tick: 1, from: 4, to: "0", validation: X}
    - {tick: 2, from: 4, to: "1", validation: Y}
)";
    CHECK_THROWS_AS(parseScenario(equivocate), ScenarioError);

    // Only Byzantine nodes inject.
    auto const honestInjects = std::string(base) + R"(
ledgers:
  - {name: X, txs: [x]}
adversary:
  kind: scripted
  injections:
    - {tick: 1, from: 3, to: "0", validation: X}
)";
    CHECK_THROWS_AS(parseScenario(honestInjects), ScenarioError);

    // Overlapping rules with different dispositions.
    auto const contradictory = std::string(base) + R"(
adversary:
  kind: scripted
  rules:
    - {kind: proposal, to: "0..2", delay: 2}
    - {kind: proposal, from: "1", drop: true}
)";
    CHECK_THROWS_AS(parseScenario(contradictory), ScenarioError);

    auto const disjointRules = std::string(base) + R"(
adversary:
  kind: scripted
  rules:
    - {kind: proposal, to: "0..2", delay: 2}
    - {kind: validation, to: "0..2", drop: true}
)";
    CHECK_NOTHROW(parseScenario(disjointRules));
}
