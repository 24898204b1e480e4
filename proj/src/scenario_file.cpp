#include <lcpsim/scenario_file.h>

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace lcpsim {

NodeSet
parseNodeList(std::string_view text, std::size_t nodeCount)
{
    auto number = [&](std::string_view s) -> std::uint32_t {
        while (!s.empty() && s.front() == ' ')
            s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ')
            s.remove_suffix(1);
        std::uint32_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
            throw ScenarioError("malformed node list '" + std::string(text) + "'");
        if (v >= nodeCount)
            throw ScenarioError(
                "node " + std::to_string(v) + " out of range (network has " +
                std::to_string(nodeCount) + " nodes)");
        return v;
    };

    NodeSet out;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        auto const comma = text.find(',', pos);
        auto const item = text.substr(
            pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        auto const dots = item.find("..");
        if (dots == std::string_view::npos)
        {
            out.insert(NodeId(number(item)));
        }
        else
        {
            auto const lo = number(item.substr(0, dots));
            auto const hi = number(item.substr(dots + 2));
            if (hi < lo)
                throw ScenarioError("descending range '" + std::string(item) + "'");
            for (auto v = lo; v <= hi; ++v)
                out.insert(NodeId(v));
        }
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

std::string
formatNodeList(NodeSet const& nodes)
{
    std::string out;
    auto it = nodes.begin();
    while (it != nodes.end())
    {
        auto const lo = it->value;
        auto hi = lo;
        ++it;
        while (it != nodes.end() && it->value == hi + 1)
        {
            hi = it->value;
            ++it;
        }
        if (!out.empty())
            out += ',';
        out += std::to_string(lo);
        if (hi != lo)
            out += ".." + std::to_string(hi);
    }
    return out;
}

namespace {

class Reader
{
public:
    explicit Reader(std::string origin) : origin_(std::move(origin))
    {
    }

    [[noreturn]] void
    fail(YAML::Node const& at, std::string const& message) const
    {
        auto const mark = at.Mark();
        auto const line = mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
        auto const col = mark.column >= 0 ? static_cast<std::size_t>(mark.column) + 1 : 0;
        throw ParseError(
            origin_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                message,
            line,
            col);
    }

    void
    keys(YAML::Node const& map, std::initializer_list<char const*> allowed) const
    {
        if (!map.IsMap())
            fail(map, "expected a mapping");
        for (auto const& kv : map)
        {
            auto const key = kv.first.as<std::string>();
            bool ok = false;
            for (auto const* a : allowed)
                ok = ok || key == a;
            if (!ok)
                fail(kv.first, "unknown key '" + key + "'");
        }
    }

    YAML::Node
    required(YAML::Node const& map, char const* key) const
    {
        auto n = map[key];
        if (!n)
            fail(map, std::string("missing required key '") + key + "'");
        return n;
    }

    template <class T>
    T
    scalar(YAML::Node const& n, char const* what) const
    {
        if (!n.IsScalar())
            fail(n, std::string("expected a scalar for ") + what);
        try
        {
            return n.as<T>();
        }
        catch (YAML::Exception const&)
        {
            fail(n, std::string("malformed value for ") + what);
        }
    }

    std::uint64_t
    count(YAML::Node const& n, char const* what) const
    {
        auto const text = scalar<std::string>(n, what);
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
            fail(n, std::string("expected a non-negative integer for ") + what);
        return v;
    }

    Rational
    rational(YAML::Node const& n, char const* what) const
    {
        try
        {
            return Rational::parse(scalar<std::string>(n, what));
        }
        catch (std::invalid_argument const& e)
        {
            fail(n, e.what());
        }
    }

    bool
    flag(YAML::Node const& n, char const* what) const
    {
        return scalar<bool>(n, what);
    }

    NodeSet
    nodes(YAML::Node const& n, std::size_t nodeCount) const
    {
        try
        {
            if (n.IsSequence())
            {
                NodeSet out;
                for (auto const& item : n)
                {
                    auto part = parseNodeList(scalar<std::string>(item, "node"), nodeCount);
                    out.insert(part.begin(), part.end());
                }
                return out;
            }
            return parseNodeList(scalar<std::string>(n, "node list"), nodeCount);
        }
        catch (ParseError const&)
        {
            throw;
        }
        catch (ScenarioError const& e)
        {
            fail(n, e.what());
        }
    }

    NodeId
    node(YAML::Node const& n, std::size_t nodeCount) const
    {
        auto const v = count(n, "node id");
        if (v >= nodeCount)
            fail(n, "node " + std::to_string(v) + " out of range");
        return NodeId(static_cast<std::uint32_t>(v));
    }

    TxSet
    txs(YAML::Node const& n) const
    {
        if (!n.IsSequence())
            fail(n, "expected a list of transaction ids");
        std::vector<TxId> out;
        for (auto const& item : n)
            out.emplace_back(scalar<std::string>(item, "transaction id"));
        return TxSet(std::move(out));
    }

    YAML::Node
    list(YAML::Node const& n, char const* what) const
    {
        if (!n.IsSequence())
            fail(n, std::string("expected a list for ") + what);
        return n;
    }

private:
    std::string origin_;
};

QuorumPolicy
readPolicy(Reader const& r, YAML::Node const& n)
{
    r.keys(n, {"fraction", "floor_div_k"});
    if (n["fraction"] && n["floor_div_k"])
        r.fail(n, "quorum takes exactly one of fraction or floor_div_k");
    if (n["floor_div_k"])
        return FloorDivK{static_cast<std::uint32_t>(r.count(n["floor_div_k"], "floor_div_k"))};
    if (n["fraction"])
        return FractionCeil{r.rational(n["fraction"], "fraction")};
    r.fail(n, "quorum needs fraction or floor_div_k");
}

ScriptRule
readRule(Reader const& r, YAML::Node const& n, std::size_t nodeCount)
{
    r.keys(
        n,
        {"kind", "from", "to", "round", "seq", "sent_from", "sent_until", "delay",
         "drop"});
    ScriptRule rule;
    if (auto k = n["kind"])
    {
        auto const text = r.scalar<std::string>(k, "kind");
        if (text == "proposal")
            rule.kind = MessageKind::Proposal;
        else if (text == "validation")
            rule.kind = MessageKind::Validation;
        else
            r.fail(k, "rule kind must be proposal or validation");
    }
    if (n["from"])
        rule.from = r.nodes(n["from"], nodeCount);
    if (n["to"])
        rule.to = r.nodes(n["to"], nodeCount);
    if (n["round"])
        rule.round = static_cast<std::uint32_t>(r.count(n["round"], "round"));
    if (n["seq"])
        rule.seq = r.count(n["seq"], "seq");
    if (n["sent_from"])
        rule.sentFrom = r.count(n["sent_from"], "sent_from");
    if (n["sent_until"])
        rule.sentUntil = r.count(n["sent_until"], "sent_until");
    bool const drop = n["drop"] && r.flag(n["drop"], "drop");
    if (drop == static_cast<bool>(n["delay"]))
        r.fail(n, "rule needs exactly one of delay or drop: true");
    if (n["delay"])
        rule.delay = r.count(n["delay"], "delay");
    return rule;
}

Injection
readInjection(Reader const& r, YAML::Node const& n, std::size_t nodeCount)
{
    r.keys(n, {"tick", "from", "to", "validation", "proposal", "delay"});
    Injection inj;
    inj.tick = r.count(r.required(n, "tick"), "tick");
    inj.from = r.node(r.required(n, "from"), nodeCount);
    inj.to = r.nodes(r.required(n, "to"), nodeCount);
    if (n["delay"])
        inj.delay = r.count(n["delay"], "delay");
    if (static_cast<bool>(n["validation"]) == static_cast<bool>(n["proposal"]))
        r.fail(n, "injection needs exactly one of validation or proposal");
    if (n["validation"])
    {
        inj.kind = MessageKind::Validation;
        inj.ledger = r.scalar<std::string>(n["validation"], "validation");
    }
    else
    {
        auto const p = n["proposal"];
        r.keys(p, {"prior", "round", "txs"});
        inj.kind = MessageKind::Proposal;
        inj.ledger = r.scalar<std::string>(r.required(p, "prior"), "prior");
        if (p["round"])
            inj.round = static_cast<std::uint32_t>(r.count(p["round"], "round"));
        if (p["txs"])
            inj.txs = r.txs(p["txs"]);
    }
    return inj;
}

AdversaryPolicy
readAdversary(Reader const& r, YAML::Node const& n, std::size_t nodeCount)
{
    r.keys(
        n,
        {"kind", "max_delay", "min_delay", "default_delay", "rules", "drop",
         "partition_rate", "partition_max", "byzantine_rate", "byzantine",
         "accountability", "partitions", "injections"});
    AdversaryPolicy p;
    auto const kind = n["kind"] ? r.scalar<std::string>(n["kind"], "kind") : "civil";

    auto only = [&](std::initializer_list<char const*> keys, char const* forKind) {
        for (auto const* k : keys)
            if (n[k] && kind != forKind)
                r.fail(n[k], std::string("'") + k + "' only applies to " + forKind);
    };
    only({"default_delay", "rules"}, "scripted");
    only(
        {"min_delay", "drop", "partition_rate", "partition_max", "byzantine_rate"},
        "seeded");

    if (kind == "civil")
    {
        CivilPolicy c;
        if (n["max_delay"])
            c.maxDelay = r.count(n["max_delay"], "max_delay");
        p.kind = c;
    }
    else if (kind == "scripted")
    {
        if (n["max_delay"])
            r.fail(n["max_delay"], "'max_delay' does not apply to scripted");
        ScriptedPolicy s;
        if (n["default_delay"])
            s.defaultDelay = r.count(n["default_delay"], "default_delay");
        if (n["rules"])
            for (auto const& rule : r.list(n["rules"], "rules"))
                s.rules.push_back(readRule(r, rule, nodeCount));
        p.kind = s;
    }
    else if (kind == "seeded")
    {
        SeededPolicy s;
        if (n["min_delay"])
            s.minDelay = r.count(n["min_delay"], "min_delay");
        if (n["max_delay"])
            s.maxDelay = r.count(n["max_delay"], "max_delay");
        if (n["drop"])
            s.drop = r.rational(n["drop"], "drop");
        if (n["partition_rate"])
            s.partitionRate = r.rational(n["partition_rate"], "partition_rate");
        if (n["partition_max"])
            s.partitionMax = r.count(n["partition_max"], "partition_max");
        if (n["byzantine_rate"])
            s.byzantineRate = r.rational(n["byzantine_rate"], "byzantine_rate");
        p.kind = s;
    }
    else
    {
        r.fail(n["kind"], "adversary kind must be civil, scripted or seeded");
    }

    if (n["byzantine"])
        p.byzantine = r.nodes(n["byzantine"], nodeCount);
    if (n["accountability"])
        p.accountability = r.flag(n["accountability"], "accountability");
    if (n["partitions"])
        for (auto const& part : r.list(n["partitions"], "partitions"))
        {
            r.keys(part, {"groups", "from", "until"});
            Partition pt;
            for (auto const& g : r.list(r.required(part, "groups"), "groups"))
                pt.groups.push_back(r.nodes(g, nodeCount));
            pt.from = r.count(r.required(part, "from"), "from");
            pt.until = r.count(r.required(part, "until"), "until");
            p.partitions.push_back(std::move(pt));
        }
    if (n["injections"])
        for (auto const& inj : r.list(n["injections"], "injections"))
            p.injections.push_back(readInjection(r, inj, nodeCount));
    return p;
}

}  // namespace

Scenario
parseScenario(std::string const& text, std::string const& origin)
{
    Reader r(origin);
    YAML::Node root;
    try
    {
        root = YAML::Load(text);
    }
    catch (YAML::ParserException const& e)
    {
        throw ParseError(
            origin + ":" + std::to_string(e.mark.line + 1) + ":" +
                std::to_string(e.mark.column + 1) + ": " + e.msg,
            static_cast<std::size_t>(e.mark.line + 1),
            static_cast<std::size_t>(e.mark.column + 1));
    }
    if (!root.IsMap())
        throw ParseError(origin + ":1:1: scenario must be a mapping", 1, 1);

    r.keys(
        root,
        {"name", "nodes", "quorum", "unls", "faults", "schedule", "ledgers",
         "bootstrap", "pending", "submissions", "tx_load", "timing", "adversary",
         "max_ticks", "probe_ticks", "seed", "stop", "inspect"});

    Scenario s;
    if (root["name"])
        s.name = r.scalar<std::string>(root["name"], "name");
    auto const nodeCount =
        static_cast<std::size_t>(r.count(r.required(root, "nodes"), "nodes"));
    if (nodeCount == 0)
        r.fail(root["nodes"], "a network needs at least one node");

    QuorumPolicy policy = FractionCeil{};
    if (root["quorum"])
        policy = readPolicy(r, root["quorum"]);

    std::vector<std::vector<NodeId>> unls(nodeCount);
    std::vector<bool> assigned(nodeCount, false);
    auto const unlNode = r.required(root, "unls");
    for (auto const& entry : r.list(unlNode, "unls"))
    {
        r.keys(entry, {"nodes", "members"});
        auto const owners = r.nodes(r.required(entry, "nodes"), nodeCount);
        auto const members = r.nodes(r.required(entry, "members"), nodeCount);
        for (auto o : owners)
        {
            if (assigned[o.index()])
                r.fail(entry, "node " + std::to_string(o.value) + " has two UNLs");
            assigned[o.index()] = true;
            unls[o.index()].assign(members.begin(), members.end());
        }
    }
    for (std::size_t k = 0; k < nodeCount; ++k)
        if (!assigned[k])
            r.fail(unlNode, "node " + std::to_string(k) + " has no UNL");

    std::map<NodeId, std::size_t> faults;
    if (root["faults"])
        for (auto const& entry : r.list(root["faults"], "faults"))
        {
            r.keys(entry, {"nodes", "budget"});
            auto const budget = r.count(r.required(entry, "budget"), "budget");
            for (auto id : r.nodes(r.required(entry, "nodes"), nodeCount))
                faults[id] = budget;
        }

    try
    {
        s.graph = std::make_shared<TrustGraph const>(std::move(unls), policy, faults);
    }
    catch (InvalidGraph const& e)
    {
        r.fail(unlNode, e.what());
    }

    if (root["schedule"])
    {
        std::vector<Rational> steps;
        for (auto const& step : r.list(root["schedule"], "schedule"))
            steps.push_back(r.rational(step, "threshold"));
        try
        {
            s.schedule = ThresholdSchedule(std::move(steps));
        }
        catch (std::invalid_argument const& e)
        {
            r.fail(root["schedule"], e.what());
        }
    }

    if (root["ledgers"])
        for (auto const& entry : r.list(root["ledgers"], "ledgers"))
        {
            r.keys(entry, {"name", "parent", "txs"});
            LedgerDef d;
            d.name = r.scalar<std::string>(r.required(entry, "name"), "name");
            d.parent = entry["parent"]
                ? r.scalar<std::string>(entry["parent"], "parent")
                : std::string("genesis");
            if (entry["txs"])
                d.txs = r.txs(entry["txs"]);
            s.ledgers.push_back(std::move(d));
        }

    if (root["bootstrap"])
        for (auto const& entry : r.list(root["bootstrap"], "bootstrap"))
        {
            r.keys(entry, {"nodes", "ledger", "validate"});
            Bootstrap b;
            b.nodes = r.nodes(r.required(entry, "nodes"), nodeCount);
            b.ledger = r.scalar<std::string>(r.required(entry, "ledger"), "ledger");
            if (entry["validate"])
                b.validate = r.flag(entry["validate"], "validate");
            s.bootstrap.push_back(std::move(b));
        }

    if (root["pending"])
        for (auto const& entry : r.list(root["pending"], "pending"))
        {
            r.keys(entry, {"nodes", "txs"});
            s.pending.push_back(
                {r.nodes(r.required(entry, "nodes"), nodeCount),
                 r.txs(r.required(entry, "txs"))});
        }

    if (root["submissions"])
        for (auto const& entry : r.list(root["submissions"], "submissions"))
        {
            r.keys(entry, {"tick", "nodes", "tx"});
            Submission sub;
            sub.tick = r.count(r.required(entry, "tick"), "tick");
            sub.nodes = r.nodes(r.required(entry, "nodes"), nodeCount);
            sub.tx = TxId(r.scalar<std::string>(r.required(entry, "tx"), "tx"));
            s.submissions.push_back(std::move(sub));
        }

    if (auto load = root["tx_load"])
    {
        r.keys(load, {"every", "count", "max_lag"});
        TxLoad t;
        if (load["every"])
            t.every = r.count(load["every"], "every");
        if (load["count"])
            t.count = static_cast<std::size_t>(r.count(load["count"], "count"));
        if (load["max_lag"])
            t.maxLag = r.count(load["max_lag"], "max_lag");
        s.txLoad = t;
    }

    if (root["timing"])
        for (auto const& entry : r.list(root["timing"], "timing"))
        {
            r.keys(entry, {"nodes", "interval", "offset"});
            Timing t;
            t.nodes = r.nodes(r.required(entry, "nodes"), nodeCount);
            if (entry["interval"])
                t.interval = r.count(entry["interval"], "interval");
            if (entry["offset"])
                t.offset = r.count(entry["offset"], "offset");
            s.timing.push_back(std::move(t));
        }

    if (root["adversary"])
        s.adversary = readAdversary(r, root["adversary"], nodeCount);

    if (root["max_ticks"])
        s.maxTicks = r.count(root["max_ticks"], "max_ticks");
    if (root["probe_ticks"])
        s.probeTicks = r.count(root["probe_ticks"], "probe_ticks");
    if (root["seed"])
        s.seed = r.count(root["seed"], "seed");

    if (auto stop = root["stop"])
    {
        r.keys(stop, {"all_fully_validated_seq"});
        if (stop["all_fully_validated_seq"])
            s.stop.allFullyValidatedSeq =
                r.count(stop["all_fully_validated_seq"], "all_fully_validated_seq");
    }

    if (root["inspect"])
        for (auto const& entry : r.list(root["inspect"], "inspect"))
        {
            r.keys(entry, {"tick", "node", "ledgers"});
            Inspection ins;
            ins.tick = r.count(r.required(entry, "tick"), "tick");
            ins.node = r.node(r.required(entry, "node"), nodeCount);
            if (entry["ledgers"])
                for (auto const& name : r.list(entry["ledgers"], "ledgers"))
                    ins.ledgers.push_back(r.scalar<std::string>(name, "ledger"));
            s.inspections.push_back(std::move(ins));
        }

    try
    {
        validate(s);
    }
    catch (ScenarioError const& e)
    {
        r.fail(root, e.what());
    }
    return s;
}

Scenario
loadScenario(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError(path + ": cannot open file", 0, 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parseScenario(buf.str(), path);
}

}  // namespace lcpsim
