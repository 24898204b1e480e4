#pragma once

#include <lcpsim/sim.h>

#include <string>

namespace lcpsim {

/** Bumped whenever a field is renamed, removed or changes meaning. */
inline constexpr int reportSchemaVersion = 1;

/**
 * The whole report as one JSON document with a fixed field order. Every
 * ledger in `store` is listed as (hash, parent, seq, txs).
 */
std::string
reportJson(RunReport const& report, LedgerStore const& store);

/** One JSON object per trace record, newline terminated. */
std::string
traceJsonl(RunReport const& report);

}  // namespace lcpsim
