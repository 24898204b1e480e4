#pragma once

#include <lcpsim/sim.h>

#include <string>
#include <string_view>

namespace lcpsim {

/** Scenario text that does not parse; what() carries "origin:line:column: ". */
class ParseError : public ScenarioError
{
public:
    ParseError(std::string const& message, std::size_t line, std::size_t column)
        : ScenarioError(message), line_(line), column_(column)
    {
    }

    std::size_t
    line() const
    {
        return line_;
    }

    std::size_t
    column() const
    {
        return column_;
    }

private:
    std::size_t line_;
    std::size_t column_;
};

/** "3", "0..4", "0..4,7,9..10"; every id must be below nodeCount. */
NodeSet
parseNodeList(std::string_view text, std::size_t nodeCount);

/** Inverse of parseNodeList with maximal ranges. */
std::string
formatNodeList(NodeSet const& nodes);

/** Parses a YAML scenario document. Unknown keys are rejected. */
Scenario
parseScenario(std::string const& text, std::string const& origin = "<input>");

Scenario
loadScenario(std::string const& path);

}  // namespace lcpsim
