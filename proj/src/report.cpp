#include <lcpsim/report.h>

#include <json.hpp>

namespace lcpsim {

namespace {

using Json = nlohmann::ordered_json;

Json
txList(TxSet const& txs)
{
    Json out = Json::array();
    for (auto const& tx : txs)
        out.push_back(tx.id);
    return out;
}

Json
ledgerRef(RunReport const& r, Digest const& d)
{
    auto it = r.ledgerNames.find(d);
    if (it == r.ledgerNames.end())
        return d.hex();
    return it->second + ":" + d.hex();
}

Json
traceRecord(RunReport const& r, TraceRecord const& t)
{
    Json j;
    j["tick"] = t.tick;
    j["node"] = t.node.value;
    j["kind"] = toString(t.kind);
    j["ledger"] = ledgerRef(r, t.ledger);
    j["seq"] = t.seq;
    if (t.kind == TraceKind::Propose ||
        (t.message && *t.message == MessageKind::Proposal))
    {
        j["round"] = t.round;
        j["txs"] = txList(t.txs);
    }
    if (t.from)
        j["from"] = ledgerRef(r, *t.from);
    if (t.recipient)
        j["recipient"] = t.recipient->value;
    if (t.message)
        j["message"] = *t.message == MessageKind::Proposal ? "proposal" : "validation";
    return j;
}

Json
optionalTick(std::optional<Tick> t)
{
    return t ? Json(*t) : Json(nullptr);
}

}  // namespace

std::string
reportJson(RunReport const& r, LedgerStore const& store)
{
    Json doc;
    doc["schema_version"] = reportSchemaVersion;
    doc["scenario"] = r.scenario;
    doc["seed"] = r.seed;
    doc["ticks"] = r.ticks;

    Json verdicts;
    if (r.verdicts.fork)
    {
        auto const& w = *r.verdicts.fork;
        verdicts["fork"] = {
            {"nodes", {w.nodes.first.value, w.nodes.second.value}},
            {"ledgers", {ledgerRef(r, w.ledgers.first), ledgerRef(r, w.ledgers.second)}},
            {"seqs", {w.seqs.first, w.seqs.second}},
            {"ticks", {w.ticks.first, w.ticks.second}}};
    }
    else
    {
        verdicts["fork"] = nullptr;
    }
    if (!r.verdicts.stuckChecked)
    {
        verdicts["stuck"] = "unchecked";
    }
    else if (!r.verdicts.stuck)
    {
        verdicts["stuck"] = nullptr;
    }
    else
    {
        auto const& s = *r.verdicts.stuck;
        Json pinned = Json::array();
        for (auto const& p : s.stuck)
            pinned.push_back(
                {{"node", p.node.value},
                 {"last_full_validation_tick", optionalTick(p.lastFullValidation)},
                 {"fully_validated_seq", p.fullyValidatedSeq},
                 {"working", ledgerRef(r, p.working)},
                 {"preferred", ledgerRef(r, p.preferred)},
                 {"branch_support", p.branchSupport},
                 {"unl_size", p.unlSize}});
        verdicts["stuck"] = {
            {"probe_ticks", s.probeTicks},
            {"probe_start", s.probeStart},
            {"nodes", std::move(pinned)}};
    }
    verdicts["rounds_without_full_validation"] = r.verdicts.roundsWithoutFullValidation;
    doc["verdicts"] = std::move(verdicts);

    Json nodes = Json::array();
    for (auto const& n : r.nodes)
        nodes.push_back(
            {{"node", n.node.value},
             {"byzantine", n.byzantine},
             {"fully_validated", ledgerRef(r, n.fullyValidated)},
             {"fully_validated_seq", n.fullyValidatedSeq},
             {"s_max", n.sMax},
             {"working", ledgerRef(r, n.working)},
             {"last_full_validation_tick", optionalTick(n.lastFullValidation)}});
    doc["nodes"] = std::move(nodes);

    Json inspections = Json::array();
    for (auto const& ins : r.inspections)
    {
        Json ann = Json::array();
        for (auto const& a : ins.annotations)
            ann.push_back(
                {{"name", a.name},
                 {"ledger", a.ledger.hex()},
                 {"tip", a.support.tip},
                 {"branch", a.support.branch},
                 {"uncommitted", a.support.uncommitted}});
        inspections.push_back(
            {{"tick", ins.tick},
             {"node", ins.node.value},
             {"preferred", ledgerRef(r, ins.preferred)},
             {"annotations", std::move(ann)}});
    }
    doc["inspections"] = std::move(inspections);

    auto events = [&](std::vector<ValidationEvent> const& v) {
        Json out = Json::array();
        for (auto const& e : v)
            out.push_back(
                {{"tick", e.tick},
                 {"node", e.node.value},
                 {"ledger", ledgerRef(r, e.ledger)},
                 {"seq", e.seq}});
        return out;
    };
    doc["validations"] = events(r.validations);
    doc["full_validations"] = events(r.fullValidations);

    Json ledgers = Json::array();
    for (auto const* l : store.ordered())
    {
        Json e;
        e["hash"] = l->hash.hex();
        auto it = r.ledgerNames.find(l->hash);
        e["name"] = it == r.ledgerNames.end() ? Json(nullptr) : Json(it->second);
        e["parent"] = l->parent ? Json(l->parent->hex()) : Json(nullptr);
        e["seq"] = l->seq;
        e["txs"] = txList(l->txs);
        ledgers.push_back(std::move(e));
    }
    doc["ledgers"] = std::move(ledgers);

    return doc.dump(2) + "\n";
}

std::string
traceJsonl(RunReport const& r)
{
    std::string out;
    for (auto const& t : r.trace)
    {
        out += traceRecord(r, t).dump();
        out += '\n';
    }
    return out;
}

}  // namespace lcpsim
