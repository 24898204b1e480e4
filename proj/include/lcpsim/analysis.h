#pragma once

#include <lcpsim/sim.h>

#include <optional>
#include <string>
#include <vector>

namespace lcpsim {

/**
 * First pair of contradictory full validations among honest nodes, after
 * ancestor closure: ledgers L, L' with seq(L) <= seq(L') where L' does not
 * descend from (or equal) L. Entries are scanned in (tick, node) order.
 */
std::optional<ForkWitness>
detectFork(RunReport const& report, LedgerStore const& store);

struct ProbeResult
{
    std::optional<StuckEvidence> stuck;
    Tick probeStart = 0;
    RunReport report;  // whole history including the probe
    LedgerStore store;
};

/**
 * Continues a copy of `snapshot` for probeTicks under civil delay-1 delivery
 * without Byzantine traffic. Throws std::invalid_argument if probeTicks == 0.
 */
ProbeResult
probe(World const& snapshot, Tick probeTicks);

std::optional<StuckEvidence>
detectStuck(World const& snapshot, Tick probeTicks);

/** Sequence numbers some honest node validated but no honest node fully validated. */
std::size_t
roundsWithoutFullValidation(RunReport const& report);

struct Execution
{
    World world;
    RunReport report;
};

/** Runs a scenario to its horizon and fills in every verdict. */
Execution
execute(Scenario scenario);

struct Lemma1Bounds
{
    std::int64_t minHonestJ = 0;
    std::int64_t maxContraJ = 0;

    friend bool
    operator==(Lemma1Bounds const&, Lemma1Bounds const&) = default;
};

/**
 * Closed forms: at least O + m - n_i - t honest members of UNL_j validated L,
 * and j sees at most n_i + n_j - O - m + t validations for a contradictory
 * ledger. Clamped to [0, n_j].
 */
Lemma1Bounds
lemma1Bounds(
    std::int64_t ni,
    std::int64_t nj,
    std::int64_t overlap,
    std::int64_t t,
    std::int64_t m);

/**
 * Exhaustive search over per-region dispositions (UNL_i only, overlap,
 * UNL_j only) with up to ti and tj Byzantine members, among assignments where
 * i sees exactly m validations for L. Returns the attained extremes.
 */
Lemma1Bounds
lemma1Search(
    std::int64_t ni,
    std::int64_t nj,
    std::int64_t overlap,
    std::int64_t ti,
    std::int64_t tj,
    std::int64_t m);

/** Same extremes by enumerating every individual node's disposition. */
Lemma1Bounds
lemma1SubsetSearch(
    std::int64_t ni,
    std::int64_t nj,
    std::int64_t overlap,
    std::int64_t ti,
    std::int64_t tj,
    std::int64_t m);

/**
 * Observers 0 (i) and 1 (j) plus voters 2.. laid out as UNL_i-only,
 * shared, then UNL_j-only. Voters trust every voter. Observers get fault
 * budget min(faults, n - q); voters get their own n - q.
 */
TrustGraph
makePairTopology(
    std::size_t ni,
    std::size_t nj,
    std::size_t overlap,
    QuorumPolicy const& policy,
    std::optional<std::size_t> faults = std::nullopt);

enum class Vote { L, LPrime };

struct ForkAssignment
{
    NodeId i;
    NodeId j;
    NodeSet byzantine;
    std::map<NodeId, Vote> honest;
    std::map<NodeId, std::pair<Vote, Vote>> byzantineVotes;  // (to i, to j)
};

class OracleLimit : public std::length_error
{
public:
    using std::length_error::length_error;
};

/**
 * Exhaustive one-shot search for validations under which i reaches q_i on L
 * and j reaches q_j on L'. Voters are UNL_i and UNL_j; i and j stay honest;
 * the Byzantine set respects every honest node's fault budget. Byzantine
 * voters cast one vote under accountability, otherwise one per observer.
 * Throws OracleLimit when more than `limit` voters take part.
 */
std::optional<ForkAssignment>
bruteForceForkSearch(
    TrustGraph const& g,
    NodeId i,
    NodeId j,
    bool accountability,
    std::size_t limit = 16);

/** A scripted scenario that replays a found assignment in one tick. */
std::string
assignmentScenario(
    TrustGraph const& g,
    ForkAssignment const& a,
    bool accountability);

/** Two groups of `n` with UNLs overlapping in `overlap` members each. */
TrustGraph
makeTwoGroupTopology(std::size_t n, std::size_t overlap, QuorumPolicy const& policy);

struct StabilityViolation
{
    Digest trigger;
    Tick triggerTick = 0;
    ValidationEvent offending;
    bool offenderValidatedTrigger = false;
};

struct StabilityResult
{
    std::size_t triggers = 0;
    std::vector<StabilityViolation> violations;
};

/**
 * Branch-stability monitor. A ledger L triggers once every honest node has
 * more than n_i/2 honest UNL members that emitted a validation for L. Every
 * later honest validation with seq >= seq(L) must descend from L.
 */
StabilityResult
checkBranchStability(
    RunReport const& report,
    TrustGraph const& g,
    NodeSet const& byzantine,
    LedgerStore const& store);

struct LivenessResult
{
    bool ok = true;
    std::size_t rounds = 0;  // sequence numbers every node had to reach
    std::string detail;
};

/**
 * After `settle`, every sequence number fully validated by some honest node
 * no later than report.ticks - tail must have been fully validated directly
 * by every honest node, and at least one such round must exist.
 */
LivenessResult
checkLiveness(
    RunReport const& report,
    NodeSet const& byzantine,
    Tick settle,
    Tick tail);

}  // namespace lcpsim
