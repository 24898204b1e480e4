#include <lcpsim/analysis.h>
#include <lcpsim/report.h>
#include <lcpsim/scenario_file.h>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

using namespace lcpsim;

namespace {

enum Exit : int { Ok = 0, BadInput = 1, Forked = 2, Stuck = 3, AuditFailed = 4 };

struct Overrides
{
    std::optional<std::uint64_t> seed;
    std::optional<Tick> maxTicks;
    std::optional<Tick> probeTicks;

    void
    apply(Scenario& s) const
    {
        if (seed)
            s.seed = *seed;
        if (maxTicks)
            s.maxTicks = *maxTicks;
        if (probeTicks)
            s.probeTicks = *probeTicks;
    }
};

void
writeFile(std::string const& path, std::string const& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

int
verdictCode(Verdicts const& v)
{
    if (v.fork)
        return Forked;
    if (v.stuck)
        return Stuck;
    return Ok;
}

std::string
summary(RunReport const& r)
{
    std::string s = "scenario=" + r.scenario + " seed=" + std::to_string(r.seed) +
        " ticks=" + std::to_string(r.ticks);
    s += " fork=" + std::string(r.verdicts.fork ? "yes" : "no");
    s += " stuck=" +
        std::string(
             !r.verdicts.stuckChecked ? "unchecked" : r.verdicts.stuck ? "yes" : "no");
    s += " rounds_without_full_validation=" +
        std::to_string(r.verdicts.roundsWithoutFullValidation);
    return s;
}

int
cmdRun(
    std::string const& path,
    Overrides const& o,
    std::string const& reportPath,
    std::string const& tracePath)
{
    auto scenario = loadScenario(path);
    o.apply(scenario);
    validate(scenario);
    auto const exec = execute(std::move(scenario));
    auto const json = reportJson(exec.report, exec.world.store());
    if (reportPath.empty())
    {
        std::cout << json;
    }
    else
    {
        writeFile(reportPath, json);
        std::cout << summary(exec.report) << "\n";
    }
    if (!tracePath.empty())
        writeFile(tracePath, traceJsonl(exec.report));
    return verdictCode(exec.report.verdicts);
}

int
cmdAudit(std::string const& path, std::string const& conditionName)
{
    auto const scenario = loadScenario(path);
    std::vector<Condition> conditions;
    if (conditionName == "all")
    {
        conditions = allConditions();
    }
    else
    {
        auto c = parseCondition(conditionName);
        if (!c)
        {
            std::cerr << "unknown condition '" << conditionName << "'\n";
            return BadInput;
        }
        conditions.push_back(*c);
    }

    auto const& g = *scenario.graph;
    std::size_t failing = 0;
    for (auto c : conditions)
    {
        std::cout << "# condition " << toString(c) << " quorum " << describe(g.policy())
                  << "\n";
        std::cout << "i\tj\tn_i\tq_i\tn_j\tq_j\tO\tt_ij\tmargin\tmargin_half\tholds\n";
        std::size_t fails = 0;
        for (auto const& row : auditTable(g, c))
        {
            auto const p = g.pairParams(row.i, row.j);
            std::cout << row.i.value << '\t' << row.j.value << '\t' << p.ni << '\t' << p.qi
                      << '\t' << p.nj << '\t' << p.qj << '\t' << p.overlap << '\t'
                      << p.faults << '\t' << formatHalf(row.check.marginHalf) << '\t'
                      << row.check.marginHalf << '\t' << (row.check.holds ? "yes" : "no")
                      << "\n";
            fails += row.check.holds ? 0 : 1;
        }
        std::cout << "# " << toString(c) << ": " << fails << " failing ordered pairs\n";
        failing += fails;
    }
    return failing == 0 ? Ok : AuditFailed;
}

std::pair<std::uint64_t, std::uint64_t>
parseSeedRange(std::string const& text)
{
    auto const dots = text.find("..");
    auto num = [&](std::string const& s) {
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used != s.size())
            throw std::invalid_argument("malformed seed range '" + text + "'");
        return static_cast<std::uint64_t>(v);
    };
    if (dots == std::string::npos)
    {
        auto v = num(text);
        return {v, v};
    }
    auto lo = num(text.substr(0, dots));
    auto hi = num(text.substr(dots + 2));
    if (hi < lo)
        throw std::invalid_argument("descending seed range '" + text + "'");
    return {lo, hi};
}

int
cmdSweep(std::string const& path, Overrides const& o, std::string const& seeds, unsigned jobs)
{
    auto base = loadScenario(path);
    o.apply(base);
    validate(base);
    auto const [lo, hi] = parseSeedRange(seeds);
    std::size_t const count = hi - lo + 1;

    std::vector<RunReport> reports(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto k = next++; k < count; k = next++)
        {
            auto s = base;
            s.seed = lo + k;
            reports[k] = execute(std::move(s)).report;
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    std::size_t forks = 0, stuck = 0, rounds = 0;
    for (auto const& r : reports)
    {
        std::cout << summary(r) << "\n";
        forks += r.verdicts.fork ? 1 : 0;
        stuck += r.verdicts.stuck ? 1 : 0;
        rounds += r.verdicts.roundsWithoutFullValidation;
    }
    std::cout << "runs=" << count << " forks=" << forks << " stuck=" << stuck
              << " rounds_without_full_validation=" << rounds << "\n";
    if (forks)
        return Forked;
    return stuck ? Stuck : Ok;
}

int
cmdOracle(
    std::size_t ni,
    std::size_t nj,
    std::size_t overlap,
    std::optional<std::size_t> faults,
    bool accountability,
    std::size_t limit)
{
    auto const g = makePairTopology(ni, nj, overlap, FractionCeil{}, faults);
    auto const found = bruteForceForkSearch(g, NodeId(0), NodeId(1), accountability, limit);
    if (!found)
    {
        std::cout << "# no fork assignment exists\n";
        return Ok;
    }
    std::cout << assignmentScenario(g, *found, accountability);
    return Forked;
}

}  // namespace

int
main(int argc, char** argv)
{
    CLI::App app{"Deterministic consensus simulator and overlap auditor"};
    app.require_subcommand(1);

    Overrides overrides;
    std::string path, reportPath, tracePath, condition = "fork-safety", seeds = "1..100";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto addOverrides = [&](CLI::App* cmd) {
        cmd->add_option("--seed", overrides.seed, "Override the scenario seed");
        cmd->add_option("--max-ticks", overrides.maxTicks, "Override max_ticks");
        cmd->add_option("--probe-ticks", overrides.probeTicks, "Override probe_ticks");
    };

    auto* run = app.add_subcommand("run", "Run one scenario and emit its report");
    run->add_option("scenario", path, "Scenario file")->required();
    addOverrides(run);
    run->add_option("--report", reportPath, "Write the JSON report here instead of stdout");
    run->add_option("--trace", tracePath, "Write the JSONL trace here");

    auto* audit = app.add_subcommand("audit", "Evaluate an overlap condition on every pair");
    audit->add_option("scenario", path, "Scenario file")->required();
    audit->add_option("--condition", condition, "Condition name or 'all'");

    auto* sweep = app.add_subcommand("sweep", "Run one scenario over a range of seeds");
    sweep->add_option("scenario", path, "Scenario file")->required();
    addOverrides(sweep);
    sweep->add_option("--seeds", seeds, "Seed range lo..hi");
    sweep->add_option("--jobs", jobs, "Worker threads");

    std::size_t ni = 0, nj = 0, overlap = 0, limit = 16;
    std::optional<std::size_t> faults;
    bool accountability = false;
    auto* oracle = app.add_subcommand(
        "oracle", "Search one-shot fork assignments for a two-observer topology");
    oracle->add_option("--ni", ni, "UNL size of observer i")->required();
    oracle->add_option("--nj", nj, "UNL size of observer j")->required();
    oracle->add_option("--overlap", overlap, "Shared UNL members")->required();
    oracle->add_option("--faults", faults, "Fault budget t of the observers");
    oracle->add_flag("--accountability", accountability, "Byzantine nodes cannot equivocate");
    oracle->add_option("--limit", limit, "Maximum voter count");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        return app.exit(e) == 0 ? Ok : BadInput;
    }

    try
    {
        if (*run)
            return cmdRun(path, overrides, reportPath, tracePath);
        if (*audit)
            return cmdAudit(path, condition);
        if (*sweep)
            return cmdSweep(path, overrides, seeds, jobs);
        return cmdOracle(ni, nj, overlap, faults, accountability, limit);
    }
    catch (ParseError const& e)
    {
        std::cerr << e.what() << "\n";
        return BadInput;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return BadInput;
    }
}
