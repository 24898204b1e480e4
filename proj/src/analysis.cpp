#include <lcpsim/analysis.h>
#include <lcpsim/scenario_file.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <sstream>

namespace lcpsim {

std::optional<ForkWitness>
detectFork(RunReport const& report, LedgerStore const& store)
{
    auto entries = report.fullValidations;
    std::stable_sort(entries.begin(), entries.end(), [](auto const& a, auto const& b) {
        return std::tie(a.tick, a.node) < std::tie(b.tick, b.node);
    });

    std::vector<ValidationEvent const*> distinct;
    for (auto const& e : entries)
    {
        bool seen = false;
        for (auto const* prior : distinct)
        {
            if (prior->ledger == e.ledger)
            {
                seen = true;
                break;
            }
            auto const& lo = prior->seq <= e.seq ? *prior : e;
            auto const& hi = prior->seq <= e.seq ? e : *prior;
            if (!store.isAncestorOrSelf(lo.ledger, hi.ledger))
            {
                ForkWitness w;
                w.nodes = {prior->node, e.node};
                w.ledgers = {prior->ledger, e.ledger};
                w.seqs = {prior->seq, e.seq};
                w.ticks = {prior->tick, e.tick};
                return w;
            }
        }
        if (!seen)
            distinct.push_back(&e);
    }
    return std::nullopt;
}

ProbeResult
probe(World const& snapshot, Tick probeTicks)
{
    if (probeTicks == 0)
        throw std::invalid_argument("probe_ticks must be positive");

    World w = snapshot;
    w.makeCivil(1);
    ProbeResult out;
    out.probeStart = w.now();
    for (Tick k = 0; k < probeTicks; ++k)
        w.step();
    out.report = w.report();
    out.store = w.store();

    StuckEvidence ev;
    ev.probeTicks = probeTicks;
    ev.probeStart = out.probeStart;
    for (auto const& s : out.report.nodes)
    {
        if (s.byzantine)
            continue;
        if (s.lastFullValidation && *s.lastFullValidation > out.probeStart)
            continue;
        auto const& node = w.nodes()[s.node.index()];
        PinnedNode p;
        p.node = s.node;
        p.lastFullValidation = s.lastFullValidation;
        p.fullyValidatedSeq = s.fullyValidatedSeq;
        p.working = s.working;
        p.preferred = node.preferredLedger(w.store());
        p.branchSupport = node.branchSupport(w.store(), s.working);
        p.unlSize = w.graph().unlSize(s.node);
        ev.stuck.push_back(p);
    }
    if (!ev.stuck.empty())
        out.stuck = std::move(ev);
    return out;
}

std::optional<StuckEvidence>
detectStuck(World const& snapshot, Tick probeTicks)
{
    return probe(snapshot, probeTicks).stuck;
}

std::size_t
roundsWithoutFullValidation(RunReport const& report)
{
    std::set<std::uint64_t> validated;
    std::set<std::uint64_t> full;
    for (auto const& v : report.validations)
        validated.insert(v.seq);
    for (auto const& f : report.fullValidations)
        full.insert(f.seq);
    return static_cast<std::size_t>(std::count_if(
        validated.begin(), validated.end(), [&](auto s) { return !full.count(s); }));
}

Execution
execute(Scenario scenario)
{
    auto const probeTicks = scenario.probeTicks;
    World w(std::move(scenario));
    w.run();
    auto report = w.report();
    report.verdicts.fork = detectFork(report, w.store());
    report.verdicts.roundsWithoutFullValidation = roundsWithoutFullValidation(report);
    if (probeTicks > 0)
    {
        report.verdicts.stuck = detectStuck(w, probeTicks);
        report.verdicts.stuckChecked = true;
    }
    return Execution{std::move(w), std::move(report)};
}

Lemma1Bounds
lemma1Bounds(
    std::int64_t ni,
    std::int64_t nj,
    std::int64_t overlap,
    std::int64_t t,
    std::int64_t m)
{
    if (ni < 1 || nj < 1 || overlap < 0 || overlap > std::min(ni, nj) || m < 0 ||
        m > ni || t < 0 || t > overlap)
        throw std::invalid_argument("infeasible counting parameters");
    Lemma1Bounds b;
    b.minHonestJ = std::max<std::int64_t>(0, overlap + m - ni - t);
    b.maxContraJ = std::clamp<std::int64_t>(ni + nj - overlap - m + t, 0, nj);
    return b;
}

Lemma1Bounds
lemma1Search(
    std::int64_t ni,
    std::int64_t nj,
    std::int64_t overlap,
    std::int64_t ti,
    std::int64_t tj,
    std::int64_t m)
{
    auto const A = ni - overlap;
    auto const S = overlap;
    auto const B = nj - overlap;
    auto minHonest = std::numeric_limits<std::int64_t>::max();
    auto maxContra = std::numeric_limits<std::int64_t>::min();

    for (std::int64_t bA = 0; bA <= std::min(A, ti); ++bA)
    for (std::int64_t bS = 0; bS <= std::min({S, ti - bA, tj}); ++bS)
    for (std::int64_t bB = 0; bB <= std::min(B, tj - bS); ++bB)
    {
        auto const hA = A - bA, hS = S - bS, hB = B - bB;
        for (std::int64_t lA = 0; lA <= hA; ++lA)
        for (std::int64_t byzAtoI = 0; byzAtoI <= bA; ++byzAtoI)
        for (std::int64_t lS = 0; lS <= hS; ++lS)
        for (std::int64_t byzStoI = 0; byzStoI <= bS; ++byzStoI)
        {
            if (lA + byzAtoI + lS + byzStoI != m)
                continue;
            for (std::int64_t pS = 0; pS <= hS - lS; ++pS)
            for (std::int64_t lB = 0; lB <= hB; ++lB)
            for (std::int64_t pB = 0; pB <= hB - lB; ++pB)
            for (std::int64_t byzStoJ = 0; byzStoJ <= bS; ++byzStoJ)
            for (std::int64_t byzBtoJ = 0; byzBtoJ <= bB; ++byzBtoJ)
            {
                minHonest = std::min(minHonest, lS + lB);
                maxContra = std::max(maxContra, pS + pB + byzStoJ + byzBtoJ);
            }
        }
    }
    if (minHonest == std::numeric_limits<std::int64_t>::max())
        throw std::invalid_argument("no assignment lets i see exactly m validations");
    return {minHonest, maxContra};
}

Lemma1Bounds
lemma1SubsetSearch(
    std::int64_t ni,
    std::int64_t nj,
    std::int64_t overlap,
    std::int64_t ti,
    std::int64_t tj,
    std::int64_t m)
{
    // Voter k is in UNL_i iff k < ni, in UNL_j iff k >= ni - overlap.
    auto const voters = static_cast<int>(ni + nj - overlap);
    if (voters > 12)
        throw OracleLimit("subset search is limited to 12 voters");
    auto const inI = [&](int k) { return k < ni; };
    auto const inJ = [&](int k) { return k >= ni - overlap; };

    auto minHonest = std::numeric_limits<std::int64_t>::max();
    auto maxContra = std::numeric_limits<std::int64_t>::min();

    // Dispositions: 0 = L, 1 = L', 2 = nothing. Byzantine voters pick one
    // disposition per observer, so 9 combinations.
    for (std::uint32_t byz = 0; byz < (1u << voters); ++byz)
    {
        std::int64_t inBudgetI = 0, inBudgetJ = 0;
        std::vector<int> radix(voters);
        for (int k = 0; k < voters; ++k)
        {
            bool const b = (byz >> k) & 1u;
            inBudgetI += b && inI(k);
            inBudgetJ += b && inJ(k);
            radix[k] = b ? 9 : 3;
        }
        if (inBudgetI > ti || inBudgetJ > tj)
            continue;

        std::vector<int> digit(voters, 0);
        while (true)
        {
            std::int64_t seenByI = 0, honestL = 0, contra = 0;
            for (int k = 0; k < voters; ++k)
            {
                bool const b = (byz >> k) & 1u;
                int const toI = b ? digit[k] / 3 : digit[k];
                int const toJ = b ? digit[k] % 3 : digit[k];
                if (inI(k) && toI == 0)
                    ++seenByI;
                if (inJ(k) && !b && toJ == 0)
                    ++honestL;
                if (inJ(k) && toJ == 1)
                    ++contra;
            }
            if (seenByI == m)
            {
                minHonest = std::min(minHonest, honestL);
                maxContra = std::max(maxContra, contra);
            }

            int k = 0;
            while (k < voters && ++digit[k] == radix[k])
                digit[k++] = 0;
            if (k == voters)
                break;
        }
    }
    if (minHonest == std::numeric_limits<std::int64_t>::max())
        throw std::invalid_argument("no assignment lets i see exactly m validations");
    return {minHonest, maxContra};
}

TrustGraph
makePairTopology(
    std::size_t ni,
    std::size_t nj,
    std::size_t overlap,
    QuorumPolicy const& policy,
    std::optional<std::size_t> faults)
{
    if (overlap > std::min(ni, nj))
        throw std::invalid_argument("overlap exceeds a UNL size");
    auto const voters = ni + nj - overlap;
    std::vector<std::vector<NodeId>> unls(2 + voters);
    std::vector<NodeId> all;
    for (std::size_t v = 0; v < voters; ++v)
        all.push_back(NodeId(static_cast<std::uint32_t>(2 + v)));
    for (std::size_t v = 0; v < voters; ++v)
    {
        if (v < ni)
            unls[0].push_back(all[v]);
        if (v >= ni - overlap)
            unls[1].push_back(all[v]);
        unls[2 + v] = all;
    }
    std::map<NodeId, std::size_t> overrides;
    if (faults)
    {
        overrides[NodeId(0)] = std::min(*faults, ni - quorum(ni, policy));
        overrides[NodeId(1)] = std::min(*faults, nj - quorum(nj, policy));
    }
    return TrustGraph(std::move(unls), policy, overrides);
}

std::optional<ForkAssignment>
bruteForceForkSearch(
    TrustGraph const& g,
    NodeId i,
    NodeId j,
    bool accountability,
    std::size_t limit)
{
    NodeSet voterSet(g.unl(i).begin(), g.unl(i).end());
    voterSet.insert(g.unl(j).begin(), g.unl(j).end());
    if (voterSet.size() > limit || voterSet.size() > 30)
        throw OracleLimit(
            "fork search over " + std::to_string(voterSet.size()) +
            " voters exceeds the limit of " + std::to_string(limit));

    std::vector<NodeId> const voters(voterSet.begin(), voterSet.end());
    auto const count = static_cast<std::uint32_t>(voters.size());
    auto maskOf = [&](std::vector<NodeId> const& unl) {
        std::uint32_t mask = 0;
        for (std::uint32_t k = 0; k < count; ++k)
            if (std::binary_search(unl.begin(), unl.end(), voters[k]))
                mask |= 1u << k;
        return mask;
    };
    std::vector<std::uint32_t> unlMask(g.size());
    for (std::uint32_t n = 0; n < g.size(); ++n)
        unlMask[n] = maskOf(g.unl(NodeId(n)));
    auto const maskI = unlMask[i.index()];
    auto const maskJ = unlMask[j.index()];
    auto const qi = static_cast<int>(g.quorum(i));
    auto const qj = static_cast<int>(g.quorum(j));

    std::uint32_t observers = 0;
    for (std::uint32_t k = 0; k < count; ++k)
        if (voters[k] == i || voters[k] == j)
            observers |= 1u << k;

    std::vector<int> voterIndex(g.size(), -1);
    for (std::uint32_t k = 0; k < count; ++k)
        voterIndex[voters[k].index()] = static_cast<int>(k);

    auto budgetsHold = [&](std::uint32_t byz) {
        for (std::uint32_t n = 0; n < g.size(); ++n)
        {
            if (voterIndex[n] >= 0 && ((byz >> voterIndex[n]) & 1u))
                continue;
            if (static_cast<std::size_t>(std::popcount(byz & unlMask[n])) >
                g.faultBudget(NodeId(n)))
                return false;
        }
        return true;
    };

    auto build = [&](std::uint32_t byz,
                     std::uint32_t honestL,
                     std::uint32_t byzToIL,
                     std::uint32_t byzToJL) {
        ForkAssignment a;
        a.i = i;
        a.j = j;
        for (std::uint32_t k = 0; k < count; ++k)
        {
            auto const bit = 1u << k;
            if (byz & bit)
            {
                a.byzantine.insert(voters[k]);
                a.byzantineVotes[voters[k]] = {
                    (byzToIL & bit) ? Vote::L : Vote::LPrime,
                    (byzToJL & bit) ? Vote::L : Vote::LPrime};
            }
            else
            {
                a.honest[voters[k]] = (honestL & bit) ? Vote::L : Vote::LPrime;
            }
        }
        return a;
    };

    auto const full = count == 32 ? ~0u : ((1u << count) - 1);
    for (std::uint64_t b = 0; b <= full; ++b)
    {
        auto const byz = static_cast<std::uint32_t>(b);
        if (byz & observers)
            continue;
        if (std::popcount(byz & maskI) > static_cast<int>(g.faultBudget(i)) ||
            std::popcount(byz & maskJ) > static_cast<int>(g.faultBudget(j)))
            continue;
        if (!budgetsHold(byz))
            continue;

        auto const honest = full & ~byz;
        // Every submask of honest, including zero.
        for (std::uint32_t hl = honest;; hl = (hl - 1) & honest)
        {
            auto const iHonest = std::popcount(hl & maskI);
            auto const jHonest = std::popcount((honest & ~hl) & maskJ);
            for (std::uint32_t toI = byz;; toI = (toI - 1) & byz)
            {
                auto const iCount = iHonest + std::popcount(toI & maskI);
                if (accountability)
                {
                    auto const jCount = jHonest + std::popcount((byz & ~toI) & maskJ);
                    if (iCount >= qi && jCount >= qj)
                        return build(byz, hl, toI, toI);
                }
                else
                {
                    for (std::uint32_t toJ = byz;; toJ = (toJ - 1) & byz)
                    {
                        auto const jCount =
                            jHonest + std::popcount((byz & ~toJ) & maskJ);
                        if (iCount >= qi && jCount >= qj)
                            return build(byz, hl, toI, toJ);
                        if (toJ == 0)
                            break;
                    }
                }
                if (toI == 0)
                    break;
            }
            if (hl == 0)
                break;
        }
    }
    return std::nullopt;
}

namespace {

std::string
policyYaml(QuorumPolicy const& p)
{
    return std::visit(
        [](auto const& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, FractionCeil>)
                return "{fraction: \"" + k.ratio.str() + "\"}";
            else
                return "{floor_div_k: " + std::to_string(k.k) + "}";
        },
        p);
}

}  // namespace

std::string
assignmentScenario(TrustGraph const& g, ForkAssignment const& a, bool accountability)
{
    std::ostringstream out;
    out << "# Replays a one-shot fork assignment: node " << a.i.value
        << " sees a quorum for L, node " << a.j.value << " for LPrime.\n";
    out << "name: oracle-replay\n";
    out << "nodes: " << g.size() << "\n";
    out << "quorum: " << policyYaml(g.policy()) << "\n";
    out << "unls:\n";
    for (std::uint32_t n = 0; n < g.size(); ++n)
    {
        auto const& unl = g.unl(NodeId(n));
        out << "  - {nodes: \"" << n << "\", members: \""
            << formatNodeList(NodeSet(unl.begin(), unl.end())) << "\"}\n";
    }
    out << "faults:\n";
    for (std::uint32_t n = 0; n < g.size(); ++n)
        out << "  - {nodes: \"" << n << "\", budget: " << g.faultBudget(NodeId(n))
            << "}\n";
    out << "ledgers:\n";
    out << "  - {name: L, parent: genesis, txs: [l]}\n";
    out << "  - {name: LPrime, parent: genesis, txs: [lprime]}\n";

    NodeSet forL, forLPrime;
    for (auto const& [node, vote] : a.honest)
        (vote == Vote::L ? forL : forLPrime).insert(node);
    out << "bootstrap:\n";
    if (!forL.empty())
        out << "  - {nodes: \"" << formatNodeList(forL) << "\", ledger: L}\n";
    if (!forLPrime.empty())
        out << "  - {nodes: \"" << formatNodeList(forLPrime) << "\", ledger: LPrime}\n";
    if (forL.empty() && forLPrime.empty())
        out << "  []\n";

    out << "adversary:\n";
    out << "  kind: scripted\n";
    out << "  accountability: " << (accountability ? "true" : "false") << "\n";
    if (!a.byzantine.empty())
    {
        out << "  byzantine: \"" << formatNodeList(a.byzantine) << "\"\n";
        out << "  injections:\n";
        auto name = [](Vote v) { return v == Vote::L ? "L" : "LPrime"; };
        for (auto const& [node, votes] : a.byzantineVotes)
        {
            out << "    - {tick: 0, from: " << node.value << ", to: \"" << a.i.value
                << "\", validation: " << name(votes.first) << "}\n";
            out << "    - {tick: 0, from: " << node.value << ", to: \"" << a.j.value
                << "\", validation: " << name(votes.second) << "}\n";
        }
    }
    out << "max_ticks: 1\n";
    return out.str();
}

TrustGraph
makeTwoGroupTopology(std::size_t n, std::size_t overlap, QuorumPolicy const& policy)
{
    if (overlap > n || n == 0)
        throw std::invalid_argument("two-group overlap must lie in [0, n]");
    auto const total = 2 * n - overlap;
    std::vector<NodeId> x, y;
    for (std::size_t k = 0; k < n; ++k)
        x.push_back(NodeId(static_cast<std::uint32_t>(k)));
    for (std::size_t k = n - overlap; k < total; ++k)
        y.push_back(NodeId(static_cast<std::uint32_t>(k)));
    auto const split = (total + 1) / 2;
    std::vector<std::vector<NodeId>> unls(total);
    for (std::size_t k = 0; k < total; ++k)
        unls[k] = k < split ? x : y;
    return TrustGraph(std::move(unls), policy);
}

StabilityResult
checkBranchStability(
    RunReport const& report,
    TrustGraph const& g,
    NodeSet const& byzantine,
    LedgerStore const& store)
{
    std::vector<NodeId> honest;
    for (std::uint32_t n = 0; n < g.size(); ++n)
        if (!byzantine.count(NodeId(n)))
            honest.push_back(NodeId(n));

    struct Progress
    {
        std::vector<std::size_t> count;  // per node: honest UNL members that validated
        std::size_t satisfied = 0;
        std::set<NodeId> validators;
        bool triggered = false;
    };
    std::map<Digest, Progress> progress;
    StabilityResult result;
    auto const& vals = report.validations;

    for (std::size_t idx = 0; idx < vals.size(); ++idx)
    {
        auto const& v = vals[idx];
        if (byzantine.count(v.node))
            continue;
        auto& p = progress[v.ledger];
        if (p.count.empty())
            p.count.assign(g.size(), 0);
        if (!p.validators.insert(v.node).second || p.triggered)
            continue;
        for (auto listener : g.listeners(v.node))
        {
            if (byzantine.count(listener))
                continue;
            auto& c = p.count[listener.index()];
            bool const before = 2 * c > g.unlSize(listener);
            ++c;
            if (!before && 2 * c > g.unlSize(listener))
                ++p.satisfied;
        }
        if (p.satisfied < honest.size())
            continue;

        p.triggered = true;
        ++result.triggers;
        for (std::size_t later = idx + 1; later < vals.size(); ++later)
        {
            auto const& w = vals[later];
            if (byzantine.count(w.node) || w.seq < v.seq)
                continue;
            if (!store.isAncestorOrSelf(v.ledger, w.ledger))
                result.violations.push_back(
                    {v.ledger, v.tick, w, p.validators.count(w.node) != 0});
        }
    }
    return result;
}

LivenessResult
checkLiveness(
    RunReport const& report,
    NodeSet const& byzantine,
    Tick settle,
    Tick tail)
{
    LivenessResult out;
    auto const cutoff = report.ticks > tail ? report.ticks - tail : 0;
    std::set<std::uint64_t> rounds;
    std::map<NodeId, std::set<std::uint64_t>> reached;
    for (auto const& f : report.fullValidations)
    {
        if (f.tick <= settle)
            continue;
        reached[f.node].insert(f.seq);
        if (f.tick <= cutoff)
            rounds.insert(f.seq);
    }
    out.rounds = rounds.size();
    if (rounds.empty())
    {
        out.ok = false;
        out.detail = "no full validation after tick " + std::to_string(settle);
        return out;
    }
    for (auto const& s : report.nodes)
    {
        if (byzantine.count(s.node) || s.byzantine)
            continue;
        auto const& mine = reached[s.node];
        for (auto seq : rounds)
            if (!mine.count(seq))
            {
                out.ok = false;
                out.detail = "node " + std::to_string(s.node.value) +
                    " never fully validated seq " + std::to_string(seq);
                return out;
            }
    }
    return out;
}

}  // namespace lcpsim
