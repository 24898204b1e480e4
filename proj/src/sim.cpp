#include <lcpsim/sim.h>

#include <algorithm>
#include <limits>

namespace lcpsim {

std::uint64_t
Rng::below(std::uint64_t n)
{
    if (n == 0)
        throw std::invalid_argument("Rng::below(0)");
    // Reject the low 2^64 mod n values so every residue is equally likely.
    std::uint64_t const threshold = (0 - n) % n;
    while (true)
    {
        auto const x = engine_();
        if (x >= threshold)
            return x % n;
    }
}

std::uint64_t
Rng::between(std::uint64_t lo, std::uint64_t hi)
{
    if (hi < lo)
        throw std::invalid_argument("Rng::between with hi < lo");
    if (lo == hi)
        return lo;
    return lo + below(hi - lo + 1);
}

bool
Rng::chance(Rational const& p)
{
    if (p.num <= 0)
        return false;
    if (p.num >= p.den)
        return true;
    return below(static_cast<std::uint64_t>(p.den)) <
        static_cast<std::uint64_t>(p.num);
}

std::uint64_t
Rng::derive(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finaliser
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

MessageKind
kindOf(Message const& m)
{
    return std::holds_alternative<Proposal>(m) ? MessageKind::Proposal
                                               : MessageKind::Validation;
}

bool
ScriptRule::matches(Message const& m, NodeId sender, NodeId recipient, Tick sent)
    const
{
    auto const k = kindOf(m);
    if (kind && *kind != k)
        return false;
    if (from && !from->count(sender))
        return false;
    if (to && !to->count(recipient))
        return false;
    if (round && (k != MessageKind::Proposal || std::get<Proposal>(m).round != *round))
        return false;
    if (seq && (k != MessageKind::Validation || std::get<Validation>(m).seq != *seq))
        return false;
    if (sentFrom && sent < *sentFrom)
        return false;
    if (sentUntil && sent >= *sentUntil)
        return false;
    return true;
}

namespace {

bool
setsMeet(std::optional<NodeSet> const& a, std::optional<NodeSet> const& b)
{
    if (!a || !b)
        return true;
    return std::any_of(a->begin(), a->end(), [&](NodeId n) { return b->count(n); });
}

std::optional<MessageKind>
impliedKind(ScriptRule const& r)
{
    if (r.kind)
        return r.kind;
    if (r.round)
        return MessageKind::Proposal;
    if (r.seq)
        return MessageKind::Validation;
    return std::nullopt;
}

}  // namespace

bool
rulesOverlap(ScriptRule const& a, ScriptRule const& b)
{
    auto const ka = impliedKind(a);
    auto const kb = impliedKind(b);
    if (ka && kb && *ka != *kb)
        return false;
    if ((a.round && b.seq) || (a.seq && b.round))
        return false;
    if (a.round && b.round && *a.round != *b.round)
        return false;
    if (a.seq && b.seq && *a.seq != *b.seq)
        return false;
    if (!setsMeet(a.from, b.from) || !setsMeet(a.to, b.to))
        return false;
    constexpr auto inf = std::numeric_limits<Tick>::max();
    auto const lo = std::max(a.sentFrom.value_or(0), b.sentFrom.value_or(0));
    auto const hi = std::min(a.sentUntil.value_or(inf), b.sentUntil.value_or(inf));
    return lo < hi;
}

bool
Partition::separates(NodeId a, NodeId b, Tick at) const
{
    if (at < from || at >= until)
        return false;
    std::optional<std::size_t> ga, gb;
    for (std::size_t g = 0; g < groups.size(); ++g)
    {
        if (groups[g].count(a))
            ga = g;
        if (groups[g].count(b))
            gb = g;
    }
    return ga && gb && *ga != *gb;
}

std::string
describe(AdversaryPolicy const& p)
{
    return std::visit(
        [](auto const& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, CivilPolicy>)
                return "civil(max_delay=" + std::to_string(k.maxDelay) + ")";
            else if constexpr (std::is_same_v<K, ScriptedPolicy>)
                return "scripted(" + std::to_string(k.rules.size()) + " rules)";
            else
                return "seeded(delay=" + std::to_string(k.minDelay) + ".." +
                    std::to_string(k.maxDelay) + ", drop=" + k.drop.str() + ")";
        },
        p.kind);
}

std::string_view
toString(TraceKind k)
{
    switch (k)
    {
        case TraceKind::Propose:
            return "propose";
        case TraceKind::Validate:
            return "validate";
        case TraceKind::FullyValidate:
            return "fully-validate";
        case TraceKind::SwitchBranch:
            return "switch-branch";
        case TraceKind::Forge:
            return "forge";
    }
    return "unknown";
}

namespace {

struct Resolved
{
    Digest digest;
    std::uint64_t seq = 1;
};

std::map<std::string, Resolved>
resolveLedgers(std::vector<LedgerDef> const& defs)
{
    std::map<std::string, Resolved> out;
    out["genesis"] = {genesis().hash, 1};
    for (auto const& d : defs)
    {
        if (out.count(d.name))
            throw ScenarioError("ledger '" + d.name + "' defined twice");
        auto parent = out.find(d.parent);
        if (parent == out.end())
            throw ScenarioError(
                "ledger '" + d.name + "' names unknown parent '" + d.parent + "'");
        auto const seq = parent->second.seq + 1;
        out[d.name] = {ledgerDigest(parent->second.digest, seq, d.txs), seq};
    }
    return out;
}

void
requireNodes(TrustGraph const& g, NodeSet const& nodes, std::string const& where)
{
    for (auto n : nodes)
        if (n.index() >= g.size())
            throw ScenarioError(
                where + " names unknown node " + std::to_string(n.value));
}

void
requireProbability(Rational const& p, std::string const& what)
{
    if (p.den <= 0 || p.num < 0 || p.num > p.den)
        throw ScenarioError(what + " " + p.str() + " must lie in [0, 1]");
}

}  // namespace

void
validate(Scenario const& s)
{
    if (!s.graph)
        throw ScenarioError("scenario has no trust graph");
    auto const& g = *s.graph;
    auto const& adv = s.adversary;

    requireNodes(g, adv.byzantine, "byzantine set");
    for (std::uint32_t i = 0; i < g.size(); ++i)
    {
        NodeId const id(i);
        if (adv.byzantine.count(id))
            continue;
        std::size_t faulty = 0;
        for (auto m : g.unl(id))
            faulty += adv.byzantine.count(m);
        if (faulty > g.faultBudget(id))
            throw ScenarioError(
                "node " + std::to_string(i) + " trusts " + std::to_string(faulty) +
                " byzantine nodes, above its fault budget " +
                std::to_string(g.faultBudget(id)));
    }

    auto const ledgers = resolveLedgers(s.ledgers);
    auto requireLedger = [&](std::string const& name, std::string const& where) {
        auto it = ledgers.find(name);
        if (it == ledgers.end())
            throw ScenarioError(where + " names unknown ledger '" + name + "'");
        return it->second;
    };

    NodeSet booted;
    for (auto const& b : s.bootstrap)
    {
        requireNodes(g, b.nodes, "bootstrap");
        requireLedger(b.ledger, "bootstrap");
        for (auto n : b.nodes)
        {
            if (adv.byzantine.count(n))
                throw ScenarioError(
                    "bootstrap covers byzantine node " + std::to_string(n.value));
            if (!booted.insert(n).second)
                throw ScenarioError(
                    "node " + std::to_string(n.value) + " is bootstrapped twice");
        }
    }
    for (auto const& p : s.pending)
        requireNodes(g, p.nodes, "pending");
    for (auto const& sub : s.submissions)
        requireNodes(g, sub.nodes, "submission");
    for (auto const& t : s.timing)
    {
        requireNodes(g, t.nodes, "timing");
        if (t.interval == 0)
            throw ScenarioError("timing interval must be at least 1");
    }
    if (s.txLoad && (s.txLoad->every == 0))
        throw ScenarioError("tx_load.every must be at least 1");
    for (auto const& ins : s.inspections)
    {
        requireNodes(g, {ins.node}, "inspection");
        for (auto const& name : ins.ledgers)
            requireLedger(name, "inspection");
    }

    for (auto const& p : adv.partitions)
    {
        for (auto const& group : p.groups)
            requireNodes(g, group, "partition");
        if (p.from >= p.until)
            throw ScenarioError("partition window must satisfy from < until");
    }

    std::map<std::pair<NodeId, std::uint64_t>, Digest> validationSlots;
    std::map<std::tuple<NodeId, Digest, std::uint32_t>, TxSet> proposalSlots;
    for (auto const& inj : adv.injections)
    {
        if (!adv.byzantine.count(inj.from))
            throw ScenarioError(
                "injection from honest node " + std::to_string(inj.from.value) +
                "; only byzantine nodes can be scripted");
        requireNodes(g, inj.to, "injection");
        if (inj.delay == 0)
            throw ScenarioError("injection delay must be at least 1");
        auto const target = requireLedger(inj.ledger, "injection");
        if (!adv.accountability)
            continue;
        if (inj.kind == MessageKind::Validation)
        {
            auto [it, fresh] = validationSlots.emplace(
                std::make_pair(inj.from, target.seq), target.digest);
            if (!fresh && it->second != target.digest)
                throw ScenarioError(
                    "node " + std::to_string(inj.from.value) +
                    " equivocates on seq " + std::to_string(target.seq) +
                    " under accountability");
        }
        else
        {
            auto [it, fresh] = proposalSlots.emplace(
                std::make_tuple(inj.from, target.digest, inj.round), inj.txs);
            if (!fresh && !(it->second == inj.txs))
                throw ScenarioError(
                    "node " + std::to_string(inj.from.value) +
                    " equivocates on proposal round " + std::to_string(inj.round) +
                    " under accountability");
        }
    }

    std::visit(
        [&](auto const& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, CivilPolicy>)
            {
                if (k.maxDelay == 0)
                    throw ScenarioError("civil max_delay must be at least 1");
            }
            else if constexpr (std::is_same_v<K, ScriptedPolicy>)
            {
                if (k.defaultDelay == 0)
                    throw ScenarioError("scripted default_delay must be at least 1");
                for (std::size_t a = 0; a < k.rules.size(); ++a)
                {
                    auto const& ra = k.rules[a];
                    if (ra.delay && *ra.delay == 0)
                        throw ScenarioError(
                            "rule " + std::to_string(a) + " has delay 0");
                    if (ra.from)
                        requireNodes(g, *ra.from, "rule " + std::to_string(a));
                    if (ra.to)
                        requireNodes(g, *ra.to, "rule " + std::to_string(a));
                    for (std::size_t b = 0; b < a; ++b)
                        if (k.rules[b].delay != ra.delay &&
                            rulesOverlap(k.rules[b], ra))
                            throw ScenarioError(
                                "rules " + std::to_string(b) + " and " +
                                std::to_string(a) +
                                " overlap with contradictory dispositions");
                }
            }
            else
            {
                if (k.minDelay == 0 || k.maxDelay < k.minDelay)
                    throw ScenarioError("seeded delays must satisfy 1 <= min <= max");
                requireProbability(k.drop, "drop probability");
                requireProbability(k.partitionRate, "partition rate");
                requireProbability(k.byzantineRate, "byzantine rate");
                if (k.partitionMax == 0)
                    throw ScenarioError("partition_max must be at least 1");
            }
        },
        adv.kind);
}

World::World(Scenario scenario)
    : scenario_(std::move(scenario))
    , netRng_(Rng::derive(scenario_.seed, 1))
    , byzRng_(Rng::derive(scenario_.seed, 2))
    , txRng_(Rng::derive(scenario_.seed, 3))
{
    validate(scenario_);
    auto const n = graph().size();
    horizon_ = scenario_.maxTicks;
    emittedSeq_.assign(n, 0);
    lastFull_.assign(n, std::nullopt);
    nodes_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        nodes_.emplace_back(NodeId(i));

    report_.scenario = scenario_.name;
    report_.seed = scenario_.seed;
    names_["genesis"] = store_.genesis().hash;
    report_.ledgerNames[store_.genesis().hash] = "genesis";
    for (auto const& def : scenario_.ledgers)
    {
        auto const& l = store_.apply(names_.at(def.parent), def.txs);
        names_[def.name] = l.hash;
        report_.ledgerNames[l.hash] = def.name;
    }

    for (auto const& sub : scenario_.submissions)
        for (auto node : sub.nodes)
            submissions_.emplace(sub.tick, std::make_pair(node, sub.tx));

    auto ctx = context();
    for (auto const& p : scenario_.pending)
        for (auto node : p.nodes)
            if (!isByzantine(node))
                for (auto const& tx : p.txs)
                    nodes_[node.index()].submit(ctx, tx);
    for (auto it = submissions_.begin(); it != submissions_.end() && it->first == 0;)
    {
        if (!isByzantine(it->second.first))
            nodes_[it->second.first.index()].submit(ctx, it->second.second);
        it = submissions_.erase(it);
    }

    for (auto& node : nodes_)
    {
        if (isByzantine(node.id()))
            continue;
        auto boot = std::find_if(
            scenario_.bootstrap.begin(), scenario_.bootstrap.end(),
            [&](Bootstrap const& b) { return b.nodes.count(node.id()) != 0; });
        Outbox out;
        if (boot != scenario_.bootstrap.end())
            out = node.adopt(ctx, names_.at(boot->ledger), boot->validate);
        else
            out.messages.emplace_back(node.start(ctx, store_.genesis().hash));
        broadcast(node.id(), out);
    }
    inspect();
    scriptedInjections();
}

ProtocolContext
World::context()
{
    return ProtocolContext{*scenario_.graph, store_, scenario_.schedule};
}

std::optional<Digest>
World::named(std::string const& name) const
{
    auto it = names_.find(name);
    if (it == names_.end())
        return std::nullopt;
    return it->second;
}

void
World::record(TraceRecord r)
{
    report_.trace.push_back(std::move(r));
}

void
World::broadcast(NodeId sender, Outbox const& out)
{
    if (out.switchedTo)
    {
        TraceRecord r;
        r.tick = now_;
        r.node = sender;
        r.kind = TraceKind::SwitchBranch;
        r.ledger = *out.switchedTo;
        r.seq = store_.get(*out.switchedTo).seq;
        r.from = out.switchedFrom;
        record(std::move(r));
    }

    for (auto const& m : out.messages)
    {
        TraceRecord r;
        r.tick = now_;
        r.node = sender;
        if (auto const* p = std::get_if<Proposal>(&m))
        {
            r.kind = TraceKind::Propose;
            r.ledger = p->prior;
            r.seq = store_.get(p->prior).seq;
            r.round = p->round;
            r.txs = p->txs;
        }
        else
        {
            auto const& v = std::get<Validation>(m);
            if (v.seq <= emittedSeq_[sender.index()])
                throw std::logic_error(
                    "node " + std::to_string(sender.value) +
                    " emitted a non-increasing validation seq");
            emittedSeq_[sender.index()] = v.seq;
            r.kind = TraceKind::Validate;
            r.ledger = v.ledger;
            r.seq = v.seq;
            report_.validations.push_back({now_, sender, v.ledger, v.seq});
        }
        record(std::move(r));

        for (auto listener : graph().listeners(sender))
        {
            if (isByzantine(listener))
                continue;
            if (listener == sender)
            {
                send(sender, listener, m, now_ + 1);
                continue;
            }
            auto const delay = routeDelay(sender, listener, m);
            send(sender, listener, m, delay ? now_ + *delay : horizon_ + 1);
        }
    }
}

void
World::send(NodeId sender, NodeId recipient, Message const& m, Tick deliverAt)
{
    queue_.push(SimEvent{deliverAt, recipient, sender, order_++, m});
}

void
World::inject(SimEvent e)
{
    if (e.deliverAt <= now_)
        throw std::invalid_argument("injected event must be delivered after now");
    if (e.recipient.index() >= nodes_.size() || e.provenance.index() >= nodes_.size())
        throw std::invalid_argument("injected event names an unknown node");
    e.order = order_++;
    queue_.push(std::move(e));
}

void
World::partition(std::vector<NodeSet> groups, Tick from, Tick until)
{
    if (from >= until)
        throw std::invalid_argument("partition window must satisfy from < until");
    scenario_.adversary.partitions.push_back({std::move(groups), from, until});
}

std::optional<Tick>
World::routeDelay(NodeId sender, NodeId recipient, Message const& m)
{
    if (civil_)
        return civilDelay_;
    return std::visit(
        [&](auto const& k) -> std::optional<Tick> {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, CivilPolicy>)
            {
                return netRng_.between(1, k.maxDelay);
            }
            else if constexpr (std::is_same_v<K, ScriptedPolicy>)
            {
                for (auto const& rule : k.rules)
                    if (rule.matches(m, sender, recipient, now_))
                        return rule.delay;
                return k.defaultDelay;
            }
            else
            {
                if (netRng_.chance(k.drop))
                    return std::nullopt;
                return netRng_.between(k.minDelay, k.maxDelay);
            }
        },
        scenario_.adversary.kind);
}

void
World::deliver(SimEvent const& e)
{
    auto ctx = context();
    auto& node = nodes_[e.recipient.index()];
    if (auto const* p = std::get_if<Proposal>(&e.message))
    {
        node.onProposal(ctx, *p);
        return;
    }
    if (node.onValidation(ctx, std::get<Validation>(e.message)))
    {
        auto const& st = node.state();
        lastFull_[e.recipient.index()] = now_;
        report_.fullValidations.push_back(
            {now_, e.recipient, st.fullyValidated, st.fullyValidatedSeq});
        TraceRecord r;
        r.tick = now_;
        r.node = e.recipient;
        r.kind = TraceKind::FullyValidate;
        r.ledger = st.fullyValidated;
        r.seq = st.fullyValidatedSeq;
        record(std::move(r));
    }
}

bool
World::scheduled(NodeId id, Tick t) const
{
    Tick interval = 1;
    Tick offset = 0;
    for (auto const& timing : scenario_.timing)
        if (timing.nodes.count(id))
        {
            interval = timing.interval;
            offset = timing.offset;
        }
    return t >= offset && (t - offset) % interval == 0;
}

void
World::inspect()
{
    for (auto const& ins : scenario_.inspections)
    {
        if (ins.tick != now_)
            continue;
        auto const& node = nodes_[ins.node.index()];
        InspectionResult res;
        res.tick = now_;
        res.node = ins.node;
        res.preferred = node.preferredLedger(store_);
        for (auto const& name : ins.ledgers)
        {
            auto const d = names_.at(name);
            res.annotations.push_back({name, d, node.annotate(store_, d)});
        }
        report_.inspections.push_back(std::move(res));
    }
}

void
World::scriptedInjections()
{
    if (civil_)
        return;
    for (auto const& inj : scenario_.adversary.injections)
    {
        if (inj.tick != now_)
            continue;
        auto const target = names_.at(inj.ledger);
        Message m;
        if (inj.kind == MessageKind::Validation)
            m = Validation{target, store_.get(target).seq, inj.from};
        else
            m = Proposal{inj.txs, inj.round, target, inj.from};
        for (auto to : inj.to)
        {
            if (isByzantine(to))
                continue;
            TraceRecord r;
            r.tick = now_;
            r.node = inj.from;
            r.kind = TraceKind::Forge;
            r.ledger = target;
            r.seq = store_.get(target).seq;
            r.round = inj.round;
            r.txs = inj.txs;
            r.recipient = to;
            r.message = inj.kind;
            record(std::move(r));
            send(inj.from, to, m, now_ + inj.delay);
        }
    }
}

void
World::byzantineTraffic()
{
    auto const* seeded = std::get_if<SeededPolicy>(&scenario_.adversary.kind);
    if (civil_ || seeded == nullptr || scenario_.adversary.byzantine.empty())
        return;

    std::set<Digest> workingSet;
    std::set<TxId> universe;
    for (auto const& node : nodes_)
    {
        if (isByzantine(node.id()))
            continue;
        workingSet.insert(node.state().working);
        for (auto const& tx : node.state().position)
            universe.insert(tx);
    }
    std::vector<Digest> const workings(workingSet.begin(), workingSet.end());
    std::vector<TxId> const txs(universe.begin(), universe.end());

    for (auto b : scenario_.adversary.byzantine)
    {
        if (!byzRng_.chance(seeded->byzantineRate))
            continue;

        auto candidates = workings;
        auto const& base = workings[byzRng_.below(workings.size())];
        auto const forged = store_.apply(
            base,
            TxSet{TxId("forge." + std::to_string(b.value) + "." + std::to_string(now_))});
        candidates.push_back(forged.hash);

        auto pickLedger = [&] { return candidates[byzRng_.below(candidates.size())]; };
        auto pickProposal = [&] {
            std::vector<TxId> chosen;
            for (auto const& tx : txs)
                if (byzRng_.below(2) == 1)
                    chosen.push_back(tx);
            return Proposal{
                TxSet(std::move(chosen)),
                static_cast<std::uint32_t>(byzRng_.between(0, 4)),
                workings[byzRng_.below(workings.size())],
                b};
        };

        std::vector<NodeId> targets;
        for (auto l : graph().listeners(b))
            if (!isByzantine(l))
                targets.push_back(l);
        if (targets.empty())
            continue;

        auto emit = [&](NodeId to, Message const& m) {
            TraceRecord r;
            r.tick = now_;
            r.node = b;
            r.kind = TraceKind::Forge;
            r.recipient = to;
            r.message = kindOf(m);
            if (auto const* p = std::get_if<Proposal>(&m))
            {
                r.ledger = p->prior;
                if (auto const* prior = store_.find(p->prior))
                    r.seq = prior->seq;
                r.round = p->round;
                r.txs = p->txs;
            }
            else
            {
                r.ledger = std::get<Validation>(m).ledger;
                r.seq = std::get<Validation>(m).seq;
            }
            record(std::move(r));
            auto const delay = routeDelay(b, to, m);
            send(b, to, m, delay ? now_ + *delay : horizon_ + 1);
        };

        bool const sendProposal = byzRng_.below(2) == 1;
        if (scenario_.adversary.accountability)
        {
            auto const target = pickLedger();
            auto const seq = store_.get(target).seq;
            if (byzValidationSlots_.insert({b, seq}).second)
                for (auto to : targets)
                    emit(to, Validation{target, seq, b});
            if (sendProposal)
            {
                auto const p = pickProposal();
                if (byzProposalSlots_.insert({b, p.prior, p.round}).second)
                    for (auto to : targets)
                        emit(to, p);
            }
        }
        else
        {
            for (auto to : targets)
            {
                auto const target = pickLedger();
                emit(to, Validation{target, store_.get(target).seq, b});
            }
            if (sendProposal)
                for (auto to : targets)
                    emit(to, pickProposal());
        }
    }
}

void
World::randomPartition()
{
    auto const* seeded = std::get_if<SeededPolicy>(&scenario_.adversary.kind);
    if (civil_ || seeded == nullptr || seeded->partitionRate.num == 0)
        return;
    for (auto const& p : scenario_.adversary.partitions)
        if (p.until > now_ + 1)
            return;
    if (!netRng_.chance(seeded->partitionRate))
        return;
    std::vector<NodeSet> groups(2);
    for (std::uint32_t i = 0; i < nodes_.size(); ++i)
        groups[netRng_.below(2)].insert(NodeId(i));
    auto const from = now_ + 1;
    scenario_.adversary.partitions.push_back(
        {std::move(groups), from, from + netRng_.between(1, seeded->partitionMax)});
}

void
World::step()
{
    ++now_;
    auto ctx = context();

    if (scenario_.txLoad && now_ % scenario_.txLoad->every == 0)
    {
        for (std::size_t k = 0; k < scenario_.txLoad->count; ++k)
        {
            TxId const tx("tx" + std::to_string(txCounter_++));
            for (auto const& node : nodes_)
                if (!isByzantine(node.id()))
                    submissions_.emplace(
                        now_ + txRng_.between(0, scenario_.txLoad->maxLag),
                        std::make_pair(node.id(), tx));
        }
    }
    while (!submissions_.empty() && submissions_.begin()->first <= now_)
    {
        auto const& [node, tx] = submissions_.begin()->second;
        if (!isByzantine(node))
            nodes_[node.index()].submit(ctx, tx);
        submissions_.erase(submissions_.begin());
    }

    while (!queue_.empty() && queue_.top().deliverAt <= now_)
    {
        auto e = queue_.top();
        queue_.pop();
        if (!civil_)
        {
            auto const blocked = std::find_if(
                scenario_.adversary.partitions.begin(),
                scenario_.adversary.partitions.end(),
                [&](Partition const& p) {
                    return p.separates(e.provenance, e.recipient, now_);
                });
            if (blocked != scenario_.adversary.partitions.end())
            {
                e.deliverAt = blocked->until;
                queue_.push(std::move(e));
                continue;
            }
        }
        deliver(e);
    }

    inspect();
    scriptedInjections();
    byzantineTraffic();
    randomPartition();

    for (auto& node : nodes_)
    {
        if (isByzantine(node.id()) || !scheduled(node.id(), now_))
            continue;
        auto const out = node.deliberationStep(ctx);
        broadcast(node.id(), out);
    }
}

bool
World::stopReached() const
{
    if (!scenario_.stop.allFullyValidatedSeq)
        return false;
    for (auto const& node : nodes_)
        if (!isByzantine(node.id()) &&
            node.state().fullyValidatedSeq < *scenario_.stop.allFullyValidatedSeq)
            return false;
    return true;
}

void
World::run()
{
    while (now_ < horizon_ && !stopReached())
        step();
}

void
World::makeCivil(Tick delay)
{
    if (delay == 0)
        throw std::invalid_argument("civil delay must be at least 1");
    civil_ = true;
    civilDelay_ = delay;
    scenario_.adversary.partitions.clear();
    scenario_.adversary.injections.clear();

    std::vector<SimEvent> keep;
    while (!queue_.empty())
    {
        if (!isByzantine(queue_.top().provenance))
            keep.push_back(queue_.top());
        queue_.pop();
    }
    for (auto& e : keep)
        queue_.push(std::move(e));
}

void
World::extend(Tick ticks)
{
    horizon_ += ticks;
}

RunReport
World::report() const
{
    RunReport out = report_;
    out.ticks = now_;
    for (auto const& node : nodes_)
    {
        auto const& st = node.state();
        NodeSummary s;
        s.node = node.id();
        s.byzantine = isByzantine(node.id());
        s.fullyValidated = st.fullyValidated;
        s.fullyValidatedSeq = st.fullyValidatedSeq;
        s.sMax = st.sMax;
        s.working = st.working;
        s.lastFullValidation = lastFull_[node.id().index()];
        out.nodes.push_back(s);
    }
    return out;
}

}  // namespace lcpsim
