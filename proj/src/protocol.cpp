#include <lcpsim/protocol.h>

#include <algorithm>

namespace lcpsim {

ThresholdSchedule::ThresholdSchedule()
    : steps_{Rational{1, 2}, Rational{13, 20}, Rational{7, 10}, Rational{19, 20}}
{
}

ThresholdSchedule::ThresholdSchedule(std::vector<Rational> steps)
    : steps_(std::move(steps))
{
    if (steps_.empty())
        throw std::invalid_argument("threshold schedule needs at least one step");
    for (std::size_t i = 0; i < steps_.size(); ++i)
    {
        auto const& s = steps_[i];
        if (s.den <= 0 || s.num < 0 || s.num > s.den)
            throw std::invalid_argument(
                "threshold " + s.str() + " must lie in [0, 1]");
        if (i > 0 && s < steps_[i - 1])
            throw std::invalid_argument("threshold schedule must be non-decreasing");
    }
}

Rational const&
ThresholdSchedule::at(std::uint32_t round) const
{
    return steps_[std::min<std::size_t>(round, steps_.size() - 1)];
}

Node::Node(NodeId id) : id_(id)
{
    state_.working = genesis().hash;
    state_.fullyValidated = genesis().hash;
}

void
Node::submit(ProtocolContext const& ctx, TxId tx)
{
    if (!ctx.store.chainContains(state_.fullyValidated, tx))
        state_.pending.insert(std::move(tx));
}

Proposal
Node::start(ProtocolContext const& ctx, Digest const& ledger)
{
    auto const& l = ctx.store.get(ledger);
    state_.working = ledger;
    state_.round = 0;
    state_.position =
        ctx.store.withoutApplied(ledger, state_.pending, state_.fullyValidated);
    state_.props.clear();

    for (auto it = state_.propBuffer.begin(); it != state_.propBuffer.end();)
    {
        auto const& prior = it->first.first;
        if (prior == ledger)
        {
            state_.props[it->first.second] = it->second;
            it = state_.propBuffer.erase(it);
        }
        else if (ctx.store.get(prior).seq < std::min(l.seq, state_.fullyValidatedSeq))
        {
            it = state_.propBuffer.erase(it);
        }
        else
        {
            ++it;
        }
    }
    return Proposal{state_.position, 0, ledger, id_};
}

bool
Node::onProposal(ProtocolContext const& ctx, Proposal const& p)
{
    if (!ctx.graph.trusts(id_, p.proposer) || !ctx.store.contains(p.prior))
        return false;

    if (p.prior == state_.working)
    {
        auto it = state_.props.find(p.proposer);
        if (it != state_.props.end() && it->second.round >= p.round)
            return false;
        state_.props[p.proposer] = p;
        return true;
    }

    auto const key = std::make_pair(p.prior, p.proposer);
    auto it = state_.propBuffer.find(key);
    if (it != state_.propBuffer.end() && it->second.round >= p.round)
        return false;
    state_.propBuffer[key] = p;
    return true;
}

bool
Node::onValidation(ProtocolContext const& ctx, Validation const& v)
{
    if (!ctx.graph.trusts(id_, v.validator))
        return false;
    auto const* l = ctx.store.find(v.ledger);
    if (l == nullptr || l->seq != v.seq)
        return false;

    auto& voters = state_.valCounts[v.ledger];
    voters.insert(v.validator);

    auto last = state_.lastVals.find(v.validator);
    if (last == state_.lastVals.end())
        state_.lastVals.emplace(v.validator, v);
    else if (v.seq >= last->second.seq)
        last->second = v;

    if (voters.size() >= ctx.graph.quorum(id_) && l->seq > state_.fullyValidatedSeq)
    {
        auto const previous = state_.fullyValidated;
        state_.fullyValidated = v.ledger;
        state_.fullyValidatedSeq = l->seq;
        state_.pending =
            ctx.store.withoutApplied(v.ledger, std::move(state_.pending), previous);
        return true;
    }
    return false;
}

Proposal
Node::updatePosition(ProtocolContext const& ctx)
{
    std::map<TxId, std::size_t> support;
    for (auto const& [peer, p] : state_.props)
        for (auto const& tx : p.txs)
            ++support[tx];

    auto const n = static_cast<std::int64_t>(ctx.graph.unlSize(id_));
    auto const& threshold = ctx.schedule.at(state_.round);

    std::vector<TxId> kept;
    for (auto const& [tx, count] : support)
        if (threshold.reachedBy(static_cast<std::int64_t>(count), n))
            kept.push_back(tx);

    state_.position = TxSet(std::move(kept));
    ++state_.round;
    return Proposal{state_.position, state_.round, state_.working, id_};
}

bool
Node::checkConsensus(ProtocolContext const& ctx) const
{
    auto const agreeing = std::count_if(
        state_.props.begin(), state_.props.end(), [&](auto const& entry) {
            return entry.second.txs == state_.position;
        });
    return static_cast<std::size_t>(agreeing) >= ctx.graph.quorum(id_);
}

Outbox
Node::deliberationStep(ProtocolContext const& ctx)
{
    Outbox out;
    auto const preferred = preferredLedger(ctx.store);
    if (preferred != state_.working)
    {
        out.switchedFrom = state_.working;
        out.switchedTo = preferred;
        out.messages.emplace_back(start(ctx, preferred));
        return out;
    }

    out.messages.emplace_back(updatePosition(ctx));
    if (checkConsensus(ctx))
    {
        auto const& next = ctx.store.apply(state_.working, state_.position);
        auto const hash = next.hash;
        auto const seq = next.seq;
        if (seq > state_.sMax)
        {
            out.messages.emplace_back(Validation{hash, seq, id_});
            state_.sMax = seq;
        }
        out.messages.emplace_back(start(ctx, hash));
    }
    return out;
}

Outbox
Node::adopt(ProtocolContext const& ctx, Digest const& ledger, bool validate)
{
    Outbox out;
    auto const seq = ctx.store.get(ledger).seq;
    if (validate && seq > state_.sMax)
    {
        out.messages.emplace_back(Validation{ledger, seq, id_});
        state_.sMax = seq;
    }
    out.messages.emplace_back(start(ctx, ledger));
    return out;
}

std::size_t
Node::tipSupport(Digest const& ledger) const
{
    return static_cast<std::size_t>(std::count_if(
        state_.lastVals.begin(), state_.lastVals.end(), [&](auto const& entry) {
            return entry.second.ledger == ledger;
        }));
}

std::size_t
Node::branchSupport(LedgerStore const& store, Digest const& ledger) const
{
    return static_cast<std::size_t>(std::count_if(
        state_.lastVals.begin(), state_.lastVals.end(), [&](auto const& entry) {
            return store.isAncestorOrSelf(ledger, entry.second.ledger);
        }));
}

std::size_t
Node::uncommitted(std::uint64_t seq) const
{
    auto const bound = std::max(seq, state_.sMax);
    return static_cast<std::size_t>(std::count_if(
        state_.lastVals.begin(), state_.lastVals.end(), [&](auto const& entry) {
            return entry.second.seq < bound;
        }));
}

SupportTuple
Node::annotate(LedgerStore const& store, Digest const& ledger) const
{
    return {
        tipSupport(ledger),
        branchSupport(store, ledger),
        uncommitted(store.get(ledger).seq)};
}

Digest
Node::preferredLedger(LedgerStore const& store) const
{
    if (state_.lastVals.empty())
        return state_.working;

    std::vector<Digest> tips;
    tips.reserve(state_.lastVals.size());
    for (auto const& [peer, v] : state_.lastVals)
        tips.push_back(v.ledger);

    Ledger const* current = &store.commonAncestor(tips);
    while (true)
    {
        // Children known through trusted validations, with their branch support.
        std::map<Digest, std::size_t> support;
        auto const childSeq = current->seq + 1;
        for (auto const& tip : tips)
            if (store.isAncestor(current->hash, tip))
                ++support[*store.ancestorAt(tip, childSeq)];
        if (support.empty())
            break;

        std::vector<std::pair<Digest, std::size_t>> children(
            support.begin(), support.end());
        std::sort(children.begin(), children.end(), [](auto const& a, auto const& b) {
            if (a.second != b.second)
                return a.second > b.second;
            return a.first > b.first;
        });

        auto delta = static_cast<std::int64_t>(children[0].second);
        if (children.size() > 1)
            delta -= static_cast<std::int64_t>(children[1].second) -
                (children[0].first > children[1].first ? 1 : 0);

        if (delta > static_cast<std::int64_t>(uncommitted(childSeq)))
            current = &store.get(children[0].first);
        else
            break;
    }

    if (store.isAncestor(current->hash, state_.working))
        return state_.working;
    return current->hash;
}

}  // namespace lcpsim
