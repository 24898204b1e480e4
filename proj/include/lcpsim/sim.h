#pragma once

#include <lcpsim/protocol.h>

#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace lcpsim {

using Tick = std::uint64_t;
using NodeSet = std::set<NodeId>;

class ScenarioError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/** Portable seeded generator: mt19937_64 with rejection-sampled ranges. */
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed)
    {
    }

    /** Uniform in [0, n). n must be positive. */
    std::uint64_t
    below(std::uint64_t n);

    /** Uniform in [lo, hi]. */
    std::uint64_t
    between(std::uint64_t lo, std::uint64_t hi);

    bool
    chance(Rational const& p);

    /** Derives an independent stream seed from (seed, stream). */
    static std::uint64_t
    derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

enum class MessageKind { Proposal, Validation };

MessageKind
kindOf(Message const& m);

/**
 * One scripted routing rule for honest traffic. Unset fields match
 * everything; the sent-tick window is [sentFrom, sentUntil). A rule without
 * a delay drops the message.
 */
struct ScriptRule
{
    std::optional<MessageKind> kind;
    std::optional<NodeSet> from;
    std::optional<NodeSet> to;
    std::optional<std::uint32_t> round;
    std::optional<std::uint64_t> seq;
    std::optional<Tick> sentFrom;
    std::optional<Tick> sentUntil;
    std::optional<Tick> delay;

    bool
    matches(Message const& m, NodeId sender, NodeId recipient, Tick sent) const;
};

/** True when some message could match both rules. */
bool
rulesOverlap(ScriptRule const& a, ScriptRule const& b);

/** Cross-group traffic is held back while from <= deliver tick < until. */
struct Partition
{
    std::vector<NodeSet> groups;
    Tick from = 0;
    Tick until = 0;

    bool
    separates(NodeId a, NodeId b, Tick at) const;
};

/** A message a Byzantine node sends to chosen recipients. */
struct Injection
{
    Tick tick = 0;
    NodeId from;
    NodeSet to;
    MessageKind kind = MessageKind::Validation;
    std::string ledger;  // validated ledger, or the proposal's prior
    std::uint32_t round = 0;
    TxSet txs;
    Tick delay = 1;
};

struct CivilPolicy
{
    Tick maxDelay = 1;
};

struct ScriptedPolicy
{
    Tick defaultDelay = 1;
    std::vector<ScriptRule> rules;
};

struct SeededPolicy
{
    Tick minDelay = 1;
    Tick maxDelay = 3;
    Rational drop{0, 1};
    Rational partitionRate{0, 1};
    Tick partitionMax = 3;
    Rational byzantineRate{1, 2};
};

struct AdversaryPolicy
{
    std::variant<CivilPolicy, ScriptedPolicy, SeededPolicy> kind = CivilPolicy{};
    NodeSet byzantine;
    bool accountability = false;
    std::vector<Partition> partitions;
    std::vector<Injection> injections;
};

std::string
describe(AdversaryPolicy const& p);

struct LedgerDef
{
    std::string name;
    std::string parent;  // "genesis" or an earlier definition
    TxSet txs;
};

/** Nodes that begin the run as if deliberation had produced `ledger`. */
struct Bootstrap
{
    NodeSet nodes;
    std::string ledger;
    bool validate = true;
};

struct PendingSet
{
    NodeSet nodes;
    TxSet txs;
};

struct Submission
{
    Tick tick = 0;
    NodeSet nodes;
    TxId tx;
};

/** Every `every` ticks, `count` fresh txs reach each honest node within maxLag ticks. */
struct TxLoad
{
    Tick every = 1;
    std::size_t count = 1;
    Tick maxLag = 0;
};

struct Timing
{
    NodeSet nodes;
    Tick interval = 1;
    Tick offset = 0;
};

/** Snapshot of one node's preferred-branch view after deliveries at `tick`. */
struct Inspection
{
    Tick tick = 0;
    NodeId node;
    std::vector<std::string> ledgers;
};

struct StopConditions
{
    std::optional<std::uint64_t> allFullyValidatedSeq;
};

struct Scenario
{
    std::string name = "unnamed";
    std::shared_ptr<TrustGraph const> graph;
    ThresholdSchedule schedule;
    AdversaryPolicy adversary;
    std::vector<LedgerDef> ledgers;
    std::vector<Bootstrap> bootstrap;
    std::vector<PendingSet> pending;
    std::vector<Submission> submissions;
    std::optional<TxLoad> txLoad;
    std::vector<Timing> timing;
    std::vector<Inspection> inspections;
    Tick maxTicks = 50;
    Tick probeTicks = 0;
    std::uint64_t seed = 1;
    StopConditions stop;
};

/** Throws ScenarioError when the scenario cannot be executed as written. */
void
validate(Scenario const& s);

enum class TraceKind { Propose, Validate, FullyValidate, SwitchBranch, Forge };

std::string_view
toString(TraceKind k);

struct TraceRecord
{
    Tick tick = 0;
    NodeId node;
    TraceKind kind = TraceKind::Propose;
    Digest ledger;  // prior for proposals, target for switches
    std::uint64_t seq = 0;
    std::uint32_t round = 0;
    TxSet txs;
    std::optional<Digest> from;          // switch origin
    std::optional<NodeId> recipient;     // forged messages only
    std::optional<MessageKind> message;  // forged messages only
};

struct ValidationEvent
{
    Tick tick = 0;
    NodeId node;
    Digest ledger;
    std::uint64_t seq = 0;
};

struct NodeSummary
{
    NodeId node;
    bool byzantine = false;
    Digest fullyValidated;
    std::uint64_t fullyValidatedSeq = 1;
    std::uint64_t sMax = 0;
    Digest working;
    std::optional<Tick> lastFullValidation;
};

struct Annotation
{
    std::string name;
    Digest ledger;
    SupportTuple support;
};

struct InspectionResult
{
    Tick tick = 0;
    NodeId node;
    Digest preferred;
    std::vector<Annotation> annotations;
};

struct ForkWitness
{
    std::pair<NodeId, NodeId> nodes;
    std::pair<Digest, Digest> ledgers;
    std::pair<std::uint64_t, std::uint64_t> seqs;
    std::pair<Tick, Tick> ticks;
};

struct PinnedNode
{
    NodeId node;
    std::optional<Tick> lastFullValidation;
    std::uint64_t fullyValidatedSeq = 1;
    Digest working;
    Digest preferred;
    std::size_t branchSupport = 0;  // support for the working branch
    std::size_t unlSize = 0;
};

struct StuckEvidence
{
    Tick probeTicks = 0;
    Tick probeStart = 0;
    std::vector<PinnedNode> stuck;  // honest nodes without a new full validation
};

struct Verdicts
{
    std::optional<ForkWitness> fork;
    std::optional<StuckEvidence> stuck;
    bool stuckChecked = false;
    std::size_t roundsWithoutFullValidation = 0;
};

struct RunReport
{
    std::string scenario;
    std::uint64_t seed = 0;
    Tick ticks = 0;
    std::vector<TraceRecord> trace;
    std::vector<ValidationEvent> validations;      // honest emissions
    std::vector<ValidationEvent> fullValidations;  // honest L^ changes
    std::vector<NodeSummary> nodes;
    std::vector<InspectionResult> inspections;
    std::map<Digest, std::string> ledgerNames;
    Verdicts verdicts;
};

/** A queued delivery. Ordered by (deliverAt, recipient, provenance, order). */
struct SimEvent
{
    Tick deliverAt = 0;
    NodeId recipient;
    NodeId provenance;
    std::uint64_t order = 0;
    Message message;

    friend bool
    operator>(SimEvent const& a, SimEvent const& b)
    {
        return std::tie(a.deliverAt, a.recipient, a.provenance, a.order) >
            std::tie(b.deliverAt, b.recipient, b.provenance, b.order);
    }
};

/**
 * The whole simulated network. Copyable, so a finished run can be forked
 * into a probe continuation.
 */
class World
{
public:
    /** Validates the scenario and performs tick-0 initialisation. */
    explicit World(Scenario scenario);

    Tick
    now() const
    {
        return now_;
    }

    Tick
    horizon() const
    {
        return horizon_;
    }

    /** Advances one tick: submissions, deliveries, Byzantine traffic, steps. */
    void
    step();

    /** Steps until the horizon or a stop condition. */
    void
    run();

    /** Queues an arbitrary event; deliverAt must not be in the past. */
    void
    inject(SimEvent e);

    void
    partition(std::vector<NodeSet> groups, Tick from, Tick until);

    /**
     * Switches to civil delivery with the given delay for the remaining
     * run: Byzantine traffic, partitions and scripted rules are removed.
     */
    void
    makeCivil(Tick delay);

    /** Moves the horizon `ticks` further. */
    void
    extend(Tick ticks);

    bool
    stopReached() const;

    Scenario const&
    scenario() const
    {
        return scenario_;
    }

    TrustGraph const&
    graph() const
    {
        return *scenario_.graph;
    }

    LedgerStore const&
    store() const
    {
        return store_;
    }

    std::vector<Node> const&
    nodes() const
    {
        return nodes_;
    }

    bool
    isByzantine(NodeId id) const
    {
        return scenario_.adversary.byzantine.count(id) != 0;
    }

    std::optional<Digest>
    named(std::string const& name) const;

    std::size_t
    queued() const
    {
        return queue_.size();
    }

    /** Report of everything executed so far, with node summaries filled in. */
    RunReport
    report() const;

private:
    ProtocolContext
    context();

    void
    broadcast(NodeId sender, Outbox const& out);

    void
    send(NodeId sender, NodeId recipient, Message const& m, Tick deliverAt);

    void
    inspect();

    void
    scriptedInjections();

    std::optional<Tick>
    routeDelay(NodeId sender, NodeId recipient, Message const& m);

    void
    deliver(SimEvent const& e);

    void
    byzantineTraffic();

    void
    randomPartition();

    bool
    scheduled(NodeId id, Tick t) const;

    void
    record(TraceRecord r);

    Scenario scenario_;
    LedgerStore store_;
    std::vector<Node> nodes_;
    std::map<std::string, Digest> names_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue_;
    std::multimap<Tick, std::pair<NodeId, TxId>> submissions_;
    std::vector<std::uint64_t> emittedSeq_;
    std::vector<std::optional<Tick>> lastFull_;
    std::set<std::pair<NodeId, std::uint64_t>> byzValidationSlots_;
    std::set<std::tuple<NodeId, Digest, std::uint32_t>> byzProposalSlots_;
    std::uint64_t order_ = 0;
    std::uint64_t txCounter_ = 0;
    Tick now_ = 0;
    Tick horizon_ = 0;
    bool civil_ = false;
    Tick civilDelay_ = 1;
    Rng netRng_;
    Rng byzRng_;
    Rng txRng_;
    RunReport report_;
};

}  // namespace lcpsim
