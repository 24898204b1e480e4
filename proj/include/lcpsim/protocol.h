#pragma once

#include <lcpsim/ledger.h>
#include <lcpsim/rational.h>
#include <lcpsim/trust_graph.h>

#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

namespace lcpsim {

/** A node's r-th deliberation proposal of txs to apply to prior. */
struct Proposal
{
    TxSet txs;
    std::uint32_t round = 0;
    Digest prior;
    NodeId proposer;

    friend bool
    operator==(Proposal const&, Proposal const&) = default;
};

struct Validation
{
    Digest ledger;
    std::uint64_t seq = 0;
    NodeId validator;

    friend bool
    operator==(Validation const&, Validation const&) = default;
};

using Message = std::variant<Proposal, Validation>;

/**
 * Deliberation thresholds by round. The last step persists for every later
 * round; steps must be non-decreasing.
 */
class ThresholdSchedule
{
public:
    /** 1/2, 13/20, 7/10, 19/20 for rounds 0, 1, 2 and 3+. */
    ThresholdSchedule();
    explicit ThresholdSchedule(std::vector<Rational> steps);

    Rational const&
    at(std::uint32_t round) const;

    std::vector<Rational> const&
    steps() const
    {
        return steps_;
    }

private:
    std::vector<Rational> steps_;
};

/** Everything a node's protocol handlers read or mutate besides its state. */
struct ProtocolContext
{
    TrustGraph const& graph;
    LedgerStore& store;
    ThresholdSchedule const& schedule;
};

struct NodeState
{
    Digest working;  // L~
    std::uint32_t round = 0;
    TxSet position;
    std::map<NodeId, Proposal> props;
    std::map<std::pair<Digest, NodeId>, Proposal> propBuffer;
    std::map<NodeId, Validation> lastVals;
    std::map<Digest, std::set<NodeId>> valCounts;
    Digest fullyValidated;  // L^
    std::uint64_t fullyValidatedSeq = 1;
    std::uint64_t sMax = 0;
    TxSet pending;
};

/** Support counts of one ledger as seen by one node. */
struct SupportTuple
{
    std::size_t tip = 0;
    std::size_t branch = 0;
    std::size_t uncommitted = 0;

    friend bool
    operator==(SupportTuple const&, SupportTuple const&) = default;
};

/** Messages produced by one protocol handler invocation. */
struct Outbox
{
    std::vector<Message> messages;
    std::optional<Digest> switchedFrom;  // set when the step changed branch
    std::optional<Digest> switchedTo;
};

/**
 * One honest peer running deliberation, validation and preferred-branch
 * selection. Every handler is synchronous and deterministic.
 */
class Node
{
public:
    explicit Node(NodeId id);

    NodeId
    id() const
    {
        return id_;
    }

    NodeState const&
    state() const
    {
        return state_;
    }

    /** Adds a client transaction unless it is already fully validated. */
    void
    submit(ProtocolContext const& ctx, TxId tx);

    /** Begins deliberation on ledger and returns the round-0 proposal. */
    Proposal
    start(ProtocolContext const& ctx, Digest const& ledger);

    /** Returns true when the proposal was stored in props or the buffer. */
    bool
    onProposal(ProtocolContext const& ctx, Proposal const& p);

    /** Returns true when the fully validated ledger advanced. */
    bool
    onValidation(ProtocolContext const& ctx, Validation const& v);

    /** Recomputes the position from props and returns the next proposal. */
    Proposal
    updatePosition(ProtocolContext const& ctx);

    bool
    checkConsensus(ProtocolContext const& ctx) const;

    /** One periodic update: switch branch, or update and maybe validate. */
    Outbox
    deliberationStep(ProtocolContext const& ctx);

    /**
     * Treats deliberation on the current working ledger as having ended with
     * `ledger` (any child chosen by the scenario), validating it if allowed,
     * then starts deliberating on it.
     */
    Outbox
    adopt(ProtocolContext const& ctx, Digest const& ledger, bool validate);

    std::size_t
    tipSupport(Digest const& ledger) const;

    std::size_t
    branchSupport(LedgerStore const& store, Digest const& ledger) const;

    std::size_t
    uncommitted(std::uint64_t seq) const;

    /** tip(L), branch(L) and uncommitted(seq(L)). */
    SupportTuple
    annotate(LedgerStore const& store, Digest const& ledger) const;

    Digest
    preferredLedger(LedgerStore const& store) const;

private:
    NodeId id_;
    NodeState state_;
};

}  // namespace lcpsim
