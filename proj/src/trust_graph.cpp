#include <lcpsim/trust_graph.h>

#include <algorithm>
#include <array>
#include <bit>

namespace lcpsim {

void
validatePolicy(QuorumPolicy const& policy)
{
    std::visit(
        [](auto const& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FractionCeil>)
            {
                // ratio in (1/2, 1]
                if (p.ratio.den <= 0 || 2 * p.ratio.num <= p.ratio.den ||
                    p.ratio.num > p.ratio.den)
                    throw InvalidGraph(
                        "quorum ratio " + p.ratio.str() +
                        " must lie in (1/2, 1]");
            }
            else
            {
                if (p.k < 2)
                    throw InvalidGraph("quorum divisor k must be at least 2");
            }
        },
        policy);
}

std::size_t
quorum(std::size_t n, QuorumPolicy const& policy)
{
    if (n == 0)
        throw InvalidGraph("quorum of an empty UNL is undefined");
    return std::visit(
        [n](auto const& p) -> std::size_t {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FractionCeil>)
                return static_cast<std::size_t>(
                    p.ratio.ceilTimes(static_cast<std::int64_t>(n)));
            else
                return n - (n - 1) / p.k;
        },
        policy);
}

std::string
describe(QuorumPolicy const& policy)
{
    return std::visit(
        [](auto const& p) -> std::string {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FractionCeil>)
                return "fraction " + p.ratio.str();
            else
                return "floor_div_k " + std::to_string(p.k);
        },
        policy);
}

namespace {

constexpr std::array<std::pair<Condition, std::string_view>, 5> conditionNames{{
    {Condition::Whitepaper, "whitepaper"},
    {Condition::Armknecht, "armknecht"},
    {Condition::SameSeqAccountable, "same-seq-accountable"},
    {Condition::SameSeqByzantine, "same-seq-byzantine"},
    {Condition::ForkSafety, "fork-safety"},
}};

}  // namespace

std::string_view
toString(Condition c)
{
    for (auto const& [cond, name] : conditionNames)
        if (cond == c)
            return name;
    return "unknown";
}

std::optional<Condition>
parseCondition(std::string_view name)
{
    for (auto const& [cond, n] : conditionNames)
        if (n == name)
            return cond;
    return std::nullopt;
}

std::vector<Condition> const&
allConditions()
{
    static std::vector<Condition> const all = [] {
        std::vector<Condition> v;
        for (auto const& entry : conditionNames)
            v.push_back(entry.first);
        return v;
    }();
    return all;
}

PairCheck
checkCondition(PairParams const& p, Condition c)
{
    auto const slackI = p.ni - p.qi;
    auto const slackJ = p.nj - p.qj;
    auto const lhs = 2 * p.overlap;
    switch (c)
    {
        case Condition::Whitepaper: {
            auto const m = lhs - 2 * std::max(slackI, slackJ);
            return {m >= 0, m};
        }
        case Condition::Armknecht: {
            auto const m = lhs - 4 * std::max(slackI, slackJ);
            return {m > 0, m};
        }
        case Condition::SameSeqAccountable: {
            auto const m = lhs - 2 * (slackI + slackJ);
            return {m > 0, m};
        }
        case Condition::SameSeqByzantine: {
            auto const m = lhs - 2 * (slackI + slackJ + p.faults);
            return {m > 0, m};
        }
        case Condition::ForkSafety: {
            auto const m = lhs - (p.nj + 2 * slackI + 2 * p.faults);
            return {m > 0, m};
        }
    }
    return {};
}

std::string
formatHalf(std::int64_t marginHalf)
{
    auto const whole = marginHalf / 2;
    bool const half = marginHalf % 2 != 0;
    std::string out;
    if (marginHalf < 0)
        out = "-";
    out += std::to_string(whole < 0 ? -whole : whole);
    out += half ? ".5" : ".0";
    return out;
}

TrustGraph::TrustGraph(
    std::vector<std::vector<NodeId>> unls,
    QuorumPolicy policy,
    std::map<NodeId, std::size_t> const& faultOverrides)
    : unls_(std::move(unls)), policy_(policy)
{
    validatePolicy(policy_);
    auto const n = unls_.size();
    if (n == 0)
        throw InvalidGraph("trust graph has no nodes");

    auto const words = (n + 63) / 64;
    bits_.assign(n, std::vector<std::uint64_t>(words, 0));
    listeners_.assign(n, {});
    quorums_.resize(n);
    faults_.resize(n);

    for (std::size_t i = 0; i < n; ++i)
    {
        auto& members = unls_[i];
        if (members.empty())
            throw InvalidGraph("UNL of node " + std::to_string(i) + " is empty");
        std::sort(members.begin(), members.end());
        if (std::adjacent_find(members.begin(), members.end()) != members.end())
            throw InvalidGraph(
                "UNL of node " + std::to_string(i) + " lists a member twice");
        for (auto m : members)
        {
            if (m.index() >= n)
                throw InvalidGraph(
                    "UNL of node " + std::to_string(i) + " names unknown node " +
                    std::to_string(m.value));
            bits_[i][m.index() / 64] |= std::uint64_t{1} << (m.index() % 64);
            listeners_[m.index()].push_back(NodeId(static_cast<std::uint32_t>(i)));
        }
        quorums_[i] = lcpsim::quorum(members.size(), policy_);
        faults_[i] = members.size() - quorums_[i];
    }

    for (auto const& [id, t] : faultOverrides)
    {
        if (id.index() >= n)
            throw InvalidGraph(
                "fault override for unknown node " + std::to_string(id.value));
        auto const slack = unls_[id.index()].size() - quorums_[id.index()];
        if (t > slack)
            throw InvalidGraph(
                "fault budget " + std::to_string(t) + " of node " +
                std::to_string(id.value) + " exceeds n - q = " +
                std::to_string(slack));
        faults_[id.index()] = t;
    }
}

void
TrustGraph::require(NodeId i) const
{
    if (i.index() >= unls_.size())
        throw std::out_of_range("unknown node " + std::to_string(i.value));
}

std::vector<NodeId> const&
TrustGraph::unl(NodeId i) const
{
    require(i);
    return unls_[i.index()];
}

bool
TrustGraph::trusts(NodeId i, NodeId j) const
{
    require(i);
    if (j.index() >= unls_.size())
        return false;
    return (bits_[i.index()][j.index() / 64] >> (j.index() % 64)) & 1u;
}

std::vector<NodeId> const&
TrustGraph::listeners(NodeId j) const
{
    require(j);
    return listeners_[j.index()];
}

std::size_t
TrustGraph::quorum(NodeId i) const
{
    require(i);
    return quorums_[i.index()];
}

std::size_t
TrustGraph::faultBudget(NodeId i) const
{
    require(i);
    return faults_[i.index()];
}

std::size_t
TrustGraph::overlap(NodeId i, NodeId j) const
{
    require(i);
    require(j);
    auto const& a = bits_[i.index()];
    auto const& b = bits_[j.index()];
    std::size_t count = 0;
    for (std::size_t w = 0; w < a.size(); ++w)
        count += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
    return count;
}

std::size_t
TrustGraph::pairFaultBound(NodeId i, NodeId j) const
{
    return std::min({faultBudget(i), faultBudget(j), overlap(i, j)});
}

PairParams
TrustGraph::pairParams(NodeId i, NodeId j) const
{
    PairParams p;
    p.ni = static_cast<std::int64_t>(unlSize(i));
    p.qi = static_cast<std::int64_t>(quorum(i));
    p.nj = static_cast<std::int64_t>(unlSize(j));
    p.qj = static_cast<std::int64_t>(quorum(j));
    p.overlap = static_cast<std::int64_t>(overlap(i, j));
    p.faults = static_cast<std::int64_t>(pairFaultBound(i, j));
    return p;
}

PairCheck
TrustGraph::checkPair(NodeId i, NodeId j, Condition c) const
{
    return checkCondition(pairParams(i, j), c);
}

std::vector<PairRow>
auditTable(TrustGraph const& g, Condition c)
{
    std::vector<PairRow> rows;
    auto const n = static_cast<std::uint32_t>(g.size());
    rows.reserve(static_cast<std::size_t>(n) * (n > 0 ? n - 1 : 0));
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
            if (i != j)
                rows.push_back(
                    {NodeId(i), NodeId(j), g.checkPair(NodeId(i), NodeId(j), c)});
    return rows;
}

std::vector<PairFailure>
audit(TrustGraph const& g, Condition c)
{
    std::vector<PairFailure> out;
    for (auto const& row : auditTable(g, c))
        if (!row.check.holds)
            out.push_back({row.i, row.j, row.check.marginHalf});
    return out;
}

}  // namespace lcpsim
