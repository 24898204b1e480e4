#pragma once

#include <lcpsim/rational.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lcpsim {

/** Dense identifier of a node, 0..N-1. */
struct NodeId
{
    std::uint32_t value = 0;

    constexpr NodeId() = default;
    constexpr explicit NodeId(std::uint32_t v) : value(v)
    {
    }

    constexpr std::size_t
    index() const
    {
        return value;
    }

    friend constexpr auto
    operator<=>(NodeId, NodeId) = default;
};

inline std::ostream&
operator<<(std::ostream& os, NodeId id)
{
    return os << id.value;
}

class InvalidGraph : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/** q = ceil(ratio * n). */
struct FractionCeil
{
    Rational ratio{4, 5};
};

/** q = n - floor((n - 1) / k). */
struct FloorDivK
{
    std::uint32_t k = 5;
};

using QuorumPolicy = std::variant<FractionCeil, FloorDivK>;

/** Throws InvalidGraph when the policy parameters are out of range. */
void
validatePolicy(QuorumPolicy const& policy);

/** Quorum for a UNL of size n. Throws InvalidGraph for n == 0. */
std::size_t
quorum(std::size_t n, QuorumPolicy const& policy);

std::string
describe(QuorumPolicy const& policy);

/** The pairwise overlap conditions that the analysis can evaluate. */
enum class Condition {
    Whitepaper,
    Armknecht,
    SameSeqAccountable,
    SameSeqByzantine,
    ForkSafety,
};

std::string_view
toString(Condition c);

std::optional<Condition>
parseCondition(std::string_view name);

std::vector<Condition> const&
allConditions();

/** The raw quantities one ordered pair check depends on. */
struct PairParams
{
    std::int64_t ni = 0;
    std::int64_t qi = 0;
    std::int64_t nj = 0;
    std::int64_t qj = 0;
    std::int64_t overlap = 0;
    std::int64_t faults = 0;  // t_{i,j}
};

/**
 * Outcome of evaluating one condition on an ordered pair.
 *
 * marginHalf is (lhs - rhs) scaled by two so the n_j/2 term of the fork
 * safety bound stays integral. Strict conditions hold iff marginHalf > 0,
 * the whitepaper's non-strict one iff marginHalf >= 0.
 */
struct PairCheck
{
    bool holds = false;
    std::int64_t marginHalf = 0;
};

PairCheck
checkCondition(PairParams const& p, Condition c);

/** Renders a half-unit margin as a decimal, e.g. -3 -> "-1.5". */
std::string
formatHalf(std::int64_t marginHalf);

class TrustGraph
{
public:
    /**
     * unls[i] is the member list of node i's UNL. faultOverrides replaces the
     * default budget t_i = n_i - q_i for the listed nodes.
     */
    TrustGraph(
        std::vector<std::vector<NodeId>> unls,
        QuorumPolicy policy,
        std::map<NodeId, std::size_t> const& faultOverrides = {});

    std::size_t
    size() const
    {
        return unls_.size();
    }

    std::vector<NodeId> const&
    unl(NodeId i) const;

    bool
    trusts(NodeId i, NodeId j) const;

    /** Nodes whose UNL contains j, ascending. */
    std::vector<NodeId> const&
    listeners(NodeId j) const;

    std::size_t
    unlSize(NodeId i) const
    {
        return unl(i).size();
    }

    std::size_t
    quorum(NodeId i) const;

    std::size_t
    faultBudget(NodeId i) const;

    QuorumPolicy const&
    policy() const
    {
        return policy_;
    }

    std::size_t
    overlap(NodeId i, NodeId j) const;

    /** t_{i,j} = min(t_i, t_j, O_{i,j}). */
    std::size_t
    pairFaultBound(NodeId i, NodeId j) const;

    PairParams
    pairParams(NodeId i, NodeId j) const;

    PairCheck
    checkPair(NodeId i, NodeId j, Condition c) const;

private:
    void
    require(NodeId i) const;

    std::vector<std::vector<NodeId>> unls_;
    std::vector<std::vector<std::uint64_t>> bits_;
    std::vector<std::vector<NodeId>> listeners_;
    std::vector<std::size_t> quorums_;
    std::vector<std::size_t> faults_;
    QuorumPolicy policy_;
};

struct PairFailure
{
    NodeId i;
    NodeId j;
    std::int64_t marginHalf = 0;

    friend bool
    operator==(PairFailure const&, PairFailure const&) = default;
};

/** Every ordered pair of distinct nodes, ascending i then j. */
struct PairRow
{
    NodeId i;
    NodeId j;
    PairCheck check;
};

std::vector<PairRow>
auditTable(TrustGraph const& g, Condition c);

/** Failing ordered pairs only, ascending i then j. */
std::vector<PairFailure>
audit(TrustGraph const& g, Condition c);

}  // namespace lcpsim

template <>
struct std::hash<lcpsim::NodeId>
{
    std::size_t
    operator()(lcpsim::NodeId id) const noexcept
    {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
